"""Ornstein-Uhlenbeck first-order Riesz transforms on Gaussian R^d."""
__version__ = "0.1.0"
