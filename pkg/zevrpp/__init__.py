"""Mixed-integer log-convex toolkit and battery-electric fleet planning model."""
