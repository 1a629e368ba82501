"""Independent numerical checks of the kernels, estimates and solver."""
