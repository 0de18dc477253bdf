"""Heat kernels, Ricci curvature and blow-down limits on warped products over R^8."""

__version__ = "0.1.0"
