"""Arbitrary-precision moment identities for Hecke x symmetric-square L-functions."""

from .precision import (
    Ball,
    DomainError,
    PoleError,
    PrecisionContext,
    PrecisionError,
    make_context,
)

__all__ = [
    "Ball",
    "DomainError",
    "PoleError",
    "PrecisionContext",
    "PrecisionError",
    "make_context",
]

__version__ = "0.1.0"
