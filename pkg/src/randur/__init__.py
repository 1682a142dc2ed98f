"""Detection of two-state random duration signals in Gaussian noise."""

__version__ = "0.1.0"
