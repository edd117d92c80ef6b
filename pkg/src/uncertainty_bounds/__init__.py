"""Lower bounds of uncertainty functionals of the second moments of a quantum particle."""

__version__ = "0.1.0"
