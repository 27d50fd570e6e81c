"""API package"""