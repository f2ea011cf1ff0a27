"""Verification and search toolkit for spreads in binary vector spaces V(n,2), n <= 7."""

__version__ = "0.1.0"

from .gf2core import (  # noqa: E402
    Subspace,
    contains,
    gaussian_binomial,
    intersect,
    parse_literal,
    point_set,
    quotient,
    rref_canonicalize,
    span,
)
from .lattice import Lattice, SubspaceId, build_lattice, get_lattice  # noqa: E402
from .spreads import SpreadCandidate, SpreadViolation, verify_spread  # noqa: E402

__all__ = [
    "Lattice",
    "SpreadCandidate",
    "SpreadViolation",
    "Subspace",
    "SubspaceId",
    "build_lattice",
    "contains",
    "gaussian_binomial",
    "get_lattice",
    "intersect",
    "parse_literal",
    "point_set",
    "quotient",
    "rref_canonicalize",
    "span",
    "verify_spread",
]
