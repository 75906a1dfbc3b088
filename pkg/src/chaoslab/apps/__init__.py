"""Applications: Breuer–Major, shallow networks and the parabolic Anderson model."""
