"""Numerical toolkit for quasiconformal maps on p-adic and adelic solenoids."""

__version__ = "0.1.0"
