"""Core package"""