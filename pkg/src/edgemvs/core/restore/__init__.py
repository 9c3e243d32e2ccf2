"""Dense depth restoration from sparse points and monocular depth."""
