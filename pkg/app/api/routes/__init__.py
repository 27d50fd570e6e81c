"""API routes package"""