"""Sparse-graph pooling designs for noiseless quantitative group testing."""
from qgt._backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
