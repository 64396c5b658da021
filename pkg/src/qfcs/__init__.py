"""Full-counting statistics of number operators on simulated quantum circuits."""

__version__ = "0.1.0"
