"""Spread candidates, constructions and the predicates used by the proof checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Iterable, Optional, Sequence

from .gf2core import (
    Subspace,
    format_literal,
    full_space,
    mask_points,
    parse_literal,
    point_set,
    quotient,
    rref_canonicalize,
    span,
)
from .lattice import Lattice, LatticeError, SubspaceId, build_lattice

UNCOVERED = "uncovered"
DOUBLY_COVERED = "doubly-covered"
WRONG_DIMENSION = "wrong-dimension"
OUTSIDE_AMBIENT = "outside-ambient"


class SpreadError(ValueError):
    """A precondition of a spread operation does not hold."""


def popcount(m: int) -> int:
    return bin(m).count("1")


@dataclass(frozen=True)
class SpreadCandidate:
    """A family of t-subspaces claimed to be an (s,t)-spread of ``ambient``.

    ``members`` is kept sorted; duplicates are kept so that verification can
    report them.  ``ambient=None`` means the whole space V(n,2).
    """

    n: int
    s: int
    t: int
    members: tuple[SubspaceId, ...]
    ambient: Optional[SubspaceId] = None

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(sorted(SubspaceId(*m) for m in self.members)))
        if self.ambient is not None:
            object.__setattr__(self, "ambient", SubspaceId(*self.ambient))

    @property
    def ambient_id(self) -> SubspaceId:
        return self.ambient if self.ambient is not None else SubspaceId(self.n, 0)

    def __len__(self) -> int:
        return len(self.members)

    def replace_members(self, members: Iterable[SubspaceId]) -> "SpreadCandidate":
        return SpreadCandidate(self.n, self.s, self.t, tuple(members), self.ambient)

    def member_mask(self) -> int:
        """Bitset over member indices (dimension ``t`` members only)."""
        m = 0
        for sid in self.members:
            if sid.dim == self.t:
                m |= 1 << sid.index
        return m

    def subspaces(self, lattice: Lattice | None = None) -> list[Subspace]:
        lat = lattice or build_lattice(self.n)
        return [lat.subspace(m) for m in self.members]

    def to_literals(self, lattice: Lattice | None = None) -> list[str]:
        return [format_literal(s) for s in self.subspaces(lattice)]


@dataclass(frozen=True)
class SpreadViolation:
    kind: str
    witness: tuple[SubspaceId, ...]

    def to_dict(self, lattice: Lattice) -> dict:
        return {
            "kind": self.kind,
            "witness": [format_literal(lattice.subspace(w)) for w in self.witness],
        }


def candidate_from_subspaces(subs: Iterable[Subspace], s: int, lattice: Lattice,
                             ambient: SubspaceId | None = None) -> SpreadCandidate:
    subs = list(subs)
    dims = {x.dim for x in subs}
    t = dims.pop() if len(dims) == 1 else max(dims, default=s + 1)
    return SpreadCandidate(lattice.n, s, t, tuple(lattice.id_of(x) for x in subs), ambient)


def parse_spread_text(text: str, n: int) -> list[Subspace]:
    """One subspace literal per non-empty line; ``#`` starts a comment."""
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(parse_literal(line, n))
    return out


def format_spread_text(c: SpreadCandidate, lattice: Lattice | None = None) -> str:
    return "".join(lit + "\n" for lit in c.to_literals(lattice))


# -- verification -----------------------------------------------------------

def verify_spread(c: SpreadCandidate, lattice: Lattice | None = None) -> Optional[SpreadViolation]:
    """Return None if ``c`` is an (s,t)-spread of its ambient, else the first violation.

    Structural problems (wrong dimension, member outside the ambient) are
    reported first, in member order.  Otherwise the s-subspaces of the ambient
    are scanned in canonical order and the first one not covered exactly once
    is the witness.
    """
    lat = lattice or build_lattice(c.n)
    amb = c.ambient_id
    for m in c.members:
        if m.dim != c.t:
            return SpreadViolation(WRONG_DIMENSION, (m,))
        if not lat.contains(amb, m):
            return SpreadViolation(OUTSIDE_AMBIENT, (m, amb))
    universe = lat.down_mask(amb, c.s)
    once = twice = 0
    covers = []
    for m in c.members:
        d = lat.down_mask(m, c.s)
        covers.append(d)
        twice |= once & d
        once |= d
    bad = (universe & ~once) | twice
    if not bad:
        return None
    low = bad & -bad
    elem = SubspaceId(c.s, low.bit_length() - 1)
    if twice & low:
        hits = [m for m, d in zip(c.members, covers) if d & low][:2]
        return SpreadViolation(DOUBLY_COVERED, (elem, *hits))
    return SpreadViolation(UNCOVERED, (elem,))


def is_spread(c: SpreadCandidate, lattice: Lattice | None = None) -> bool:
    return verify_spread(c, lattice) is None


# -- constructions ----------------------------------------------------------

def gf4_scalar(v: int) -> int:
    """Multiply by a primitive element w of GF(4) (w**2 = w + 1).

    Coordinates pair up as ``(bit 2i, bit 2i+1) = (a, b)`` for ``a + b*w``;
    ``w*(a + b*w) = b + (a + b)*w``.
    """
    out = 0
    i = 0
    while v >> i:
        a = (v >> i) & 1
        b = (v >> (i + 1)) & 1
        out |= (b << i) | ((a ^ b) << (i + 1))
        i += 2
    return out


def desarguesian_spread(n: int, lattice: Lattice | None = None) -> SpreadCandidate:
    """Line spread of V(n,2) formed by the 1-dimensional GF(4)-subspaces."""
    if n % 2 or not 2 <= n <= 6:
        raise SpreadError(f"Desarguesian line spreads need even n in 2..6, got {n}")
    lat = lattice or build_lattice(n)
    lines = set()
    for v in range(1, 1 << n):
        lines.add(lat.id_of(rref_canonicalize([v, gf4_scalar(v)], n)))
    return SpreadCandidate(n, 1, 2, tuple(lines))


def lift_spread(c: SpreadCandidate, p: int, lattice: Lattice | None = None) -> list[SubspaceId]:
    """Preimages in V(n+1,2) through ``p`` of the members of ``c`` (a spread of V/p)."""
    lat = lattice or build_lattice(c.n + 1)
    q = quotient(full_space(lat.n), p)
    small = build_lattice(c.n)
    return sorted(lat.id_of(q.preimage(small.subspace(m))) for m in c.members)


def _line_spreads_of(lat: Lattice, ambient: SubspaceId) -> list[tuple[SubspaceId, ...]]:
    lines = lat.subspaces_within(ambient, 2)
    masks = [lat.point_mask(x) for x in lines]
    target = lat.point_mask(ambient)
    by_point: dict[int, list[int]] = {}
    for i, m in enumerate(masks):
        for p in mask_points(m):
            by_point.setdefault(p, []).append(i)
    out: list[tuple[SubspaceId, ...]] = []
    chosen: list[int] = []

    def extend(covered: int) -> None:
        rest = target & ~covered
        if not rest:
            out.append(tuple(lines[i] for i in chosen))
            return
        p = (rest & -rest).bit_length() - 1
        for i in by_point[p]:
            if not masks[i] & covered:
                chosen.append(i)
                extend(covered | masks[i])
                chosen.pop()

    extend(0)
    return sorted(tuple(sorted(s)) for s in out)


def enumerate_line_spreads(ambient: SubspaceId | None = None,
                           lattice: Lattice | None = None) -> list[SpreadCandidate]:
    """All line spreads of a 4-dimensional ambient, in canonical order."""
    lat = lattice or build_lattice(4)
    amb = ambient if ambient is not None else lat.full_space()
    if amb.dim != 4:
        raise SpreadError(f"ambient must be 4-dimensional, got dimension {amb.dim}")
    ambient_field = None if amb == lat.full_space() else amb
    return [SpreadCandidate(lat.n, 1, 2, s, ambient_field) for s in _line_spreads_of(lat, amb)]


def disjoint_tuples(spreads: Sequence[SpreadCandidate], arity: int) -> list[tuple[int, ...]]:
    """Ordered tuples of indices into ``spreads`` whose members are pairwise disjoint."""
    if arity not in (2, 3):
        raise SpreadError(f"arity must be 2 or 3, got {arity}")
    if len({(c.n, c.ambient_id) for c in spreads}) > 1:
        raise SpreadError("spreads live in different ambients")
    sets = [c.member_mask() for c in spreads]
    k = len(sets)
    ok = [[not (sets[i] & sets[j]) for j in range(k)] for i in range(k)]
    if arity == 2:
        return [(i, j) for i in range(k) for j in range(k) if ok[i][j]]
    return [
        (i, j, l)
        for i in range(k)
        for j in range(k)
        if ok[i][j]
        for l in range(k)
        if ok[i][l] and ok[j][l]
    ]


# -- predicates -------------------------------------------------------------

def line_through(q: int, c: SpreadCandidate, lattice: Lattice | None = None) -> SubspaceId:
    lat = lattice or build_lattice(c.n)
    if not lat.point_mask(c.ambient_id) >> q & 1:
        raise SpreadError(f"point {q} is outside the ambient")
    bit = 1 << q
    for m in c.members:
        if lat.point_mask(m) & bit:
            return m
    raise SpreadError(f"no member contains point {q}; candidate is not a spread")


def geometric_witness(c: SpreadCandidate, lattice: Lattice | None = None
                      ) -> Optional[tuple[SubspaceId, SubspaceId, SubspaceId]]:
    """First ordered member triple (S1, S2, S3) with S3 meeting but not inside <S1, S2>."""
    lat = lattice or build_lattice(c.n)
    subs = [lat.subspace(m) for m in c.members]
    masks = [lat.point_mask(m) for m in c.members]
    k = len(subs)
    spans = {}
    for i, j in combinations(range(k), 2):
        spans[i, j] = spans[j, i] = point_set(span(subs[i], subs[j]))
    for i, j, l in permutations(range(k), 3):
        sm = spans[i, j]
        if masks[l] & sm and masks[l] & ~sm:
            return c.members[i], c.members[j], c.members[l]
    return None


def is_geometric(c: SpreadCandidate, lattice: Lattice | None = None) -> bool:
    return geometric_witness(c, lattice) is None


def derived_spread(members: Sequence[SubspaceId], p: int, n: int = 7, s: int = 2, t: int = 3,
                   lattice: Lattice | None = None) -> SpreadCandidate:
    """Images in V/p of members through p, as an (s-1, t-1) candidate of V(n-1,2)."""
    lat = lattice or build_lattice(n)
    q = quotient(full_space(n), p)
    small = build_lattice(n - 1)
    bit = 1 << p
    images = []
    for m in members:
        if not lat.point_mask(m) & bit:
            raise SpreadError(f"member {format_literal(lat.subspace(m))} does not contain p")
        images.append(small.id_of(q.image(lat.subspace(m))))
    return SpreadCandidate(n - 1, s - 1, t - 1, tuple(images))


def _check_inside(lat: Lattice, big: SubspaceId, members: Iterable[SubspaceId]) -> None:
    for m in members:
        if not lat.contains(big, m):
            raise SpreadError(f"member {format_literal(lat.subspace(m))} is not inside "
                              f"{format_literal(lat.subspace(big))}")


def alpha_point_of_5space(T: SubspaceId, members_in_T: Sequence[SubspaceId],
                          lattice: Lattice | None = None) -> Optional[int]:
    """The point common to all five members inside T, or None."""
    lat = lattice or build_lattice(7)
    if T.dim != 5:
        raise SpreadError(f"T must be 5-dimensional, got {T.dim}")
    if len(members_in_T) != 5:
        raise SpreadError(f"expected 5 members inside T, got {len(members_in_T)}")
    _check_inside(lat, T, members_in_T)
    masks = [lat.point_mask(m) for m in members_in_T]
    for a, b in combinations(masks, 2):
        if popcount(a & b) > 1:
            raise SpreadError("two members share a line")
    common = masks[0]
    for m in masks[1:]:
        common &= m
    return common.bit_length() - 1 if common else None


ALPHA = "alpha"
NOT_ALPHA = "not-alpha"
UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class AlphaCheck:
    status: str
    witness: Optional[SubspaceId] = None
    examined: tuple[SubspaceId, ...] = field(default=(), compare=False)

    def __bool__(self) -> bool:
        return self.status == ALPHA


def relevant_5spaces(p: int, through: Sequence[SubspaceId], lat: Lattice,
                     within: SubspaceId | None = None) -> list[SubspaceId]:
    """5-spaces containing two of the given planes through ``p``, canonical order."""
    found = 0
    subs = [lat.subspace(m) for m in through]
    wmask = lat.down_mask(within, 5) if within is not None else -1
    for a, b in combinations(subs, 2):
        sp = span(a, b)
        if sp.dim == 5:
            found |= 1 << lat.id_of(sp).index
        elif sp.dim == 4:
            found |= lat.up_mask(lat.id_of(sp), 5)
    found &= wmask
    return [SubspaceId(5, j) for j in mask_points(found)]


def alpha_point_check(p: int, f: SpreadCandidate, lattice: Lattice | None = None,
                      within: SubspaceId | None = None) -> AlphaCheck:
    """Three-valued alpha-point test for a (2,3) candidate.

    Scans every 5-space T (inside ``within`` when given) that contains two
    members through ``p``.  A T holding a member that misses ``p`` is a
    not-alpha witness; a T with fewer than five members leaves the answer
    undetermined.
    """
    if (f.s, f.t) != (2, 3):
        raise SpreadError(f"alpha points are defined for (2,3) candidates, got ({f.s},{f.t})")
    lat = lattice or build_lattice(f.n)
    amb = within if within is not None else f.ambient_id
    if not lat.point_mask(amb) >> p & 1:
        raise SpreadError(f"point {p} is outside the ambient")
    fmask = f.member_mask()
    through_mask = lat.up_mask(lat.point_id(p), 3) & fmask
    through = [SubspaceId(3, i) for i in mask_points(through_mask)]
    spaces = relevant_5spaces(p, through, lat, within)
    undetermined = False
    for T in spaces:
        inside = lat.down_mask(T, 3) & fmask
        if inside & ~through_mask:
            return AlphaCheck(NOT_ALPHA, T, tuple(spaces))
        if popcount(inside) < 5:
            undetermined = True
    return AlphaCheck(UNDETERMINED if undetermined else ALPHA, None, tuple(spaces))


def poor_spaces(T: SubspaceId, members_in_T: Sequence[SubspaceId],
                lattice: Lattice | None = None) -> list[SubspaceId]:
    """Hyperplanes of T containing none of the given members."""
    lat = lattice or build_lattice(7)
    _check_inside(lat, T, members_in_T)
    masks = [lat.point_mask(m) for m in members_in_T]
    out = []
    for w in lat.subspaces_within(T, T.dim - 1):
        wm = lat.point_mask(w)
        if all(m & ~wm for m in masks):
            out.append(w)
    return out


def trace_on_hyperplane(members: Sequence[SubspaceId], w: SubspaceId,
                        lattice: Lattice | None = None) -> SpreadCandidate:
    """The lines ``member ∩ w`` as a line-spread candidate of ``w``."""
    lat = lattice or build_lattice(7)
    wm = lat.point_mask(w)
    lines = []
    for m in members:
        mm = lat.point_mask(m)
        if not mm & ~wm:
            raise SpreadError(f"member {format_literal(lat.subspace(m))} lies inside w")
        cut = mm & wm
        if popcount(cut) != 3:
            raise SpreadError(f"member {format_literal(lat.subspace(m))} meets w in "
                              f"{popcount(cut)} points, expected a line")
        lines.append(lat.id_of_mask(2, cut))
    return SpreadCandidate(lat.n, 1, 2, tuple(lines), w)


@dataclass(frozen=True)
class RectangleConfig:
    l1: SubspaceId
    l2: SubspaceId
    l1p: SubspaceId
    l2p: SubspaceId
    q: int
    qp: int
    r1: int
    r2: int
    line: SubspaceId
    r3: int
    l5p: SubspaceId

    def to_dict(self, lattice: Lattice) -> dict:
        lit = lambda sid: format_literal(lattice.subspace(sid))  # noqa: E731
        return {
            "L1": lit(self.l1), "L2": lit(self.l2),
            "L1'": lit(self.l1p), "L2'": lit(self.l2p), "L5'": lit(self.l5p),
            "Q": self.q, "Q'": self.qp, "R1": self.r1, "R2": self.r2, "R3": self.r3,
            "L": lit(self.line),
        }


def _single_point(m: int) -> int:
    if popcount(m) != 1:
        raise SpreadError("expected lines meeting in exactly one point")
    return m.bit_length() - 1


def rectangle_config(s1: SpreadCandidate, s2: SpreadCandidate,
                     lattice: Lattice | None = None) -> RectangleConfig:
    """Two lines of ``s1`` and two of ``s2`` meeting pairwise in four points."""
    lat = lattice or build_lattice(s1.n)
    if s1.ambient_id != s2.ambient_id or s1.n != s2.n:
        raise SpreadError("spreads live in different ambients")
    if s1.member_mask() & s2.member_mask():
        raise SpreadError("spreads share a line")
    m1 = {m: lat.point_mask(m) for m in s1.members}
    m2 = {m: lat.point_mask(m) for m in s2.members}
    for l5p in s2.members:
        missed = [l for l in s1.members if not m1[l] & m2[l5p]]
        if len(missed) != 2:
            continue
        l1, l2 = missed
        both = [x for x in s2.members if m2[x] & m1[l1] and m2[x] & m1[l2]]
        if len(both) < 2:
            continue
        l1p, l2p = both[:2]
        q = _single_point(m1[l1] & m2[l1p])
        qp = _single_point(m1[l2] & m2[l2p])
        r1 = _single_point(m1[l1] & m2[l2p])
        r2 = _single_point(m1[l2] & m2[l1p])
        line = lat.id_of(rref_canonicalize([r1, r2], lat.n))
        return RectangleConfig(l1, l2, l1p, l2p, q, qp, r1, r2, line, r1 ^ r2, l5p)
    raise SpreadError("no rectangle configuration; inputs are not disjoint spreads of a 4-space")
