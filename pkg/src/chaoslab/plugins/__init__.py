"""Optional output plugins for chaoslab."""
