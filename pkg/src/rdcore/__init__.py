"""Core-periphery analysis of R&D alliance networks and their link to patenting."""

__version__ = "0.1.0"
