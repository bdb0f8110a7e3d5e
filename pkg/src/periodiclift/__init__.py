"""Carleman and Carleman-Fourier linearization of periodic complex dynamical systems."""

__version__ = "0.1.0"
