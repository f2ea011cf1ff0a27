"""Linear algebra over GF(2) on integer bitmasks.

A vector of V(n,2) is an ``int`` in ``[0, 2**n)``; bit ``i`` is coordinate
``i + 1``.  A point is the unique nonzero vector of a 1-dimensional subspace,
so points of V(n,2) are exactly the integers ``1 .. 2**n - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

MAX_DIM = 7


class GF2Error(ValueError):
    """Invalid input to a GF(2) operation."""


def leading_bit(v: int) -> int:
    return v.bit_length() - 1


def _reduce(v: int, basis: Sequence[int]) -> int:
    # basis is reduced echelon, descending leading bits
    for b in basis:
        if (v >> leading_bit(b)) & 1:
            v ^= b
    return v


def _echelon(rows: Iterable[int]) -> tuple[int, ...]:
    pivots: dict[int, int] = {}
    for r in rows:
        for lb, b in sorted(pivots.items(), reverse=True):
            if (r >> lb) & 1:
                r ^= b
        if not r:
            continue
        lb = leading_bit(r)
        for k, b in pivots.items():
            if (b >> lb) & 1:
                pivots[k] = b ^ r
        pivots[lb] = r
    return tuple(pivots[k] for k in sorted(pivots, reverse=True))


@dataclass(frozen=True, order=True)
class Subspace:
    """A subspace of V(n,2) held by its reduced echelon basis.

    Two instances compare equal iff they are the same set of vectors.
    Ordering is the canonical order: lexicographic on ``basis``.
    """

    ambient_dim: int
    basis: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def __len__(self) -> int:
        return (1 << self.dim) - 1

    def vectors(self) -> list[int]:
        """All ``2**dim`` vectors, including zero."""
        out = [0]
        for b in self.basis:
            out += [v ^ b for v in out]
        return out

    def points(self) -> list[int]:
        return sorted(self.vectors()[1:])

    def __str__(self) -> str:
        return format_literal(self)


def _check_rows(rows: Sequence[int], ambient_dim: int) -> None:
    if not 0 <= ambient_dim <= MAX_DIM:
        raise GF2Error(f"ambient dimension {ambient_dim} outside 0..{MAX_DIM}")
    limit = 1 << ambient_dim
    for r in rows:
        if not 0 <= r < limit:
            raise GF2Error(f"row {r:#b} does not fit in {ambient_dim} bits")


def rref_canonicalize(rows: Iterable[int], ambient_dim: int) -> Subspace:
    """Return the canonical Subspace spanned by ``rows``."""
    rows = list(rows)
    _check_rows(rows, ambient_dim)
    return Subspace(ambient_dim, _echelon(rows))


def point_subspace(p: int, ambient_dim: int) -> Subspace:
    if p == 0:
        raise GF2Error("the zero vector is not a point")
    return rref_canonicalize([p], ambient_dim)


def zero_subspace(ambient_dim: int) -> Subspace:
    return Subspace(ambient_dim, ())


def full_space(ambient_dim: int) -> Subspace:
    return Subspace(ambient_dim, tuple(1 << i for i in reversed(range(ambient_dim))))


def _same_ambient(a: Subspace, b: Subspace) -> None:
    if a.ambient_dim != b.ambient_dim:
        raise GF2Error(f"ambient dimensions differ: {a.ambient_dim} != {b.ambient_dim}")


def span(a: Subspace, b: Subspace) -> Subspace:
    _same_ambient(a, b)
    return Subspace(a.ambient_dim, _echelon(a.basis + b.basis))


def intersect(a: Subspace, b: Subspace) -> Subspace:
    """Intersection by Zassenhaus joint elimination.

    Rows ``(a_i | a_i)`` and ``(b_j | 0)`` are reduced on the doubled space;
    rows whose left half vanishes carry a basis of the intersection on the
    right half.
    """
    _same_ambient(a, b)
    n = a.ambient_dim
    rows = [(v << n) | v for v in a.basis] + [v << n for v in b.basis]
    mask = (1 << n) - 1
    inter = [r & mask for r in _echelon(rows) if r >> n == 0]
    return Subspace(n, _echelon(inter))


def contains(a: Subspace, x: Union[int, Subspace]) -> bool:
    """True iff the point (nonzero int) or subspace ``x`` lies in ``a``."""
    if isinstance(x, Subspace):
        _same_ambient(a, x)
        return all(_reduce(v, a.basis) == 0 for v in x.basis)
    if x <= 0 or x >= 1 << a.ambient_dim:
        raise GF2Error(f"{x} is not a point of V({a.ambient_dim},2)")
    return _reduce(x, a.basis) == 0


def point_set(a: Subspace) -> int:
    """Bitmask with bit ``p`` set for every point ``p`` of ``a``."""
    mask = 0
    for v in a.vectors()[1:]:
        mask |= 1 << v
    return mask


def mask_points(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


@dataclass(frozen=True)
class Quotient:
    """V/P realised as V(n-1,2).

    The coset of ``v`` is represented by the member of ``{v, v ^ p}`` with the
    pivot bit (leading bit of ``p``) cleared; dropping that bit gives the
    coordinates in V(n-1,2).
    """

    ambient: Subspace
    p: int

    @property
    def pivot(self) -> int:
        return leading_bit(self.p)

    @property
    def ambient_dim(self) -> int:
        return self.ambient.ambient_dim - 1

    @property
    def space(self) -> Subspace:
        return self.image(self.ambient)

    def map_vector(self, v: int) -> int:
        h = self.pivot
        if (v >> h) & 1:
            v ^= self.p
        low = v & ((1 << h) - 1)
        return low | ((v >> (h + 1)) << h)

    def lift_vector(self, w: int) -> int:
        """Section of the quotient map: the representative with pivot bit 0."""
        h = self.pivot
        low = w & ((1 << h) - 1)
        return low | ((w >> h) << (h + 1))

    def image(self, s: Subspace) -> Subspace:
        _same_ambient(self.ambient, s)
        return rref_canonicalize((self.map_vector(v) for v in s.basis), self.ambient_dim)

    def preimage(self, s: Subspace) -> Subspace:
        """The subspace of V through ``p`` mapping onto ``s``."""
        rows = [self.lift_vector(v) for v in s.basis] + [self.p]
        return rref_canonicalize(rows, self.ambient.ambient_dim)

    def coset_map(self) -> dict[int, int]:
        return {v: self.map_vector(v) for v in self.ambient.points() if v != self.p}


def quotient(ambient: Subspace, p: int) -> Quotient:
    if not contains(ambient, p):
        raise GF2Error(f"point {p:#b} is not in the ambient subspace")
    return Quotient(ambient, p)


def gaussian_binomial(n: int, k: int, q: int = 2) -> int:
    """Number of k-dimensional subspaces of V(n,q)."""
    if k < 0 or n < 0 or k > n:
        raise GF2Error(f"gaussian_binomial needs 0 <= k <= n, got n={n}, k={k}")
    num = den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (k - i) - 1
    return num // den


def parse_literal(text: str, ambient_dim: int | None = None) -> Subspace:
    """Parse ``"1010;0110"`` (rows as binary strings, most significant first)."""
    text = text.strip()
    rows = [r.strip() for r in text.split(";")] if text else []
    if ambient_dim is None:
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise GF2Error(f"cannot infer ambient dimension from {text!r}")
        ambient_dim = widths.pop()
    values = []
    for r in rows:
        if not r or len(r) > ambient_dim or set(r) - {"0", "1"}:
            raise GF2Error(f"malformed row {r!r} in {text!r}")
        values.append(int(r, 2))
    return rref_canonicalize(values, ambient_dim)


def format_literal(s: Subspace) -> str:
    return ";".join(format(v, f"0{s.ambient_dim}b") for v in s.basis)
