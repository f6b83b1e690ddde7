"""Covering the edge-fixing subgroup of the cube with words of length at most 22."""
from .errors import (
    CubeCoverError, DomainError, IncompleteCoverError, InputError, InvariantError,
    ParseError, ResourceError, StoreIntegrityError, VerificationError,
)
from .permcore import (
    build_generators, compose, format_moves, identity, inverse, invg, mult_el, parse_moves,
)

__version__ = "0.1.0"

__all__ = [
    "CubeCoverError", "DomainError", "IncompleteCoverError", "InputError", "InvariantError",
    "ParseError", "ResourceError", "StoreIntegrityError", "VerificationError",
    "build_generators", "compose", "format_moves", "identity", "inverse", "invg",
    "mult_el", "parse_moves",
]
