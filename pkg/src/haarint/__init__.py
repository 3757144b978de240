"""Polynomial integration over Stiefel manifolds of real, complex and quaternion matrices."""

from .algebra import CoordLayout, GaussRational, Polynomial, parse_rational, poly_parse, poly_serialize
from .pizzetti import StiefelSpec, integrate

__all__ = [
    "CoordLayout",
    "GaussRational",
    "Polynomial",
    "StiefelSpec",
    "integrate",
    "parse_rational",
    "poly_parse",
    "poly_serialize",
]

__version__ = "0.1.0"
