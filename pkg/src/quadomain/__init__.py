"""Numerical construction and certification of quadrature domains in C^n."""

__version__ = '0.1.0'
