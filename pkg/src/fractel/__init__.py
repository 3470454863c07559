"""Space-time fractional telegraph equations: closed-form characteristic
functions, density inversion and Monte-Carlo cross-checks."""

__version__ = "0.1.0"
