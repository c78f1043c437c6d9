"""congestlab: 1-D hard-congestion particle dynamics by minimizing movements."""

__version__ = "0.1.0"
