"""App package"""