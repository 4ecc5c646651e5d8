"""KQI prediction from low-layer cellular metrics."""

__version__ = "0.1.0"
