"""High-order wave-propagation finite volume methods."""

__version__ = "0.1.0"
