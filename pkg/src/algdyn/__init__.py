"""Periodic points, Fuglede-Kadison determinants and model counting for
expansive principal algebraic actions over finite quotients."""

__version__ = "0.1.0"
