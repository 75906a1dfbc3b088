"""chaoslab: a numerical laboratory for Gaussian approximation of Hilbert-valued Wiener functionals."""

__version__ = "0.1.0"
