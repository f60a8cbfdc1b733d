"""Service-oriented fast frequency response simulator."""
__version__ = "0.1.0"
