"""Subspace lattice of V(n,2) with dense ids, incidence bitsets and a binary cache."""

from __future__ import annotations

import hashlib
import logging
import os
import struct
import threading
from functools import lru_cache
from itertools import combinations, product
from pathlib import Path
from typing import NamedTuple

from .gf2core import (
    MAX_DIM,
    GF2Error,
    Subspace,
    gaussian_binomial,
    leading_bit,
    mask_points,
    point_set,
    rref_canonicalize,
)

log = logging.getLogger(__name__)

MAGIC = b"GFLT"
VERSION = 1
CACHE_ENV = "SPREADCHECK_CACHE_DIR"

# (k, k2) pairs whose incidence is materialised at build time and cached on disk
HOT_PAIRS = ((2, 3), (3, 5), (4, 5), (4, 6), (5, 6))


class LatticeError(ValueError):
    pass


class LatticeCacheError(LatticeError):
    """Cache file is unreadable, corrupt, or from another format version."""


class SubspaceId(NamedTuple):
    dim: int
    index: int


@lru_cache(maxsize=None)
def canonical_bases(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    """All reduced echelon bases of k-subspaces of V(n,2), in canonical order."""
    out = []
    for pivots in combinations(range(n - 1, -1, -1), k):
        pset = set(pivots)
        free = [[b for b in range(p) if b not in pset] for p in pivots]
        nfree = sum(len(f) for f in free)
        for bits in product((0, 1), repeat=nfree):
            it = iter(bits)
            rows = []
            for p, fs in zip(pivots, free):
                r = 1 << p
                for b in fs:
                    if next(it):
                        r |= 1 << b
                rows.append(r)
            out.append(tuple(rows))
    out.sort()
    return tuple(out)


def _bitset_from_indices(indices) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


class Lattice:
    """All subspaces of V(n,2), grouped by dimension, in canonical order.

    ``tables[k][i]`` is the Subspace with id ``SubspaceId(k, i)``.  Incidence
    between dimension classes is stored as Python-int bitsets: for a pair
    ``(k, k2)`` with ``k < k2``, ``down[(k, k2)][j]`` has bit ``i`` set iff
    subspace ``(k, i)`` lies in ``(k2, j)``.
    """

    def __init__(self, n: int, tables: list[list[Subspace]]):
        self.n = n
        self.tables = tables
        self.masks = [[point_set(s) for s in t] for t in tables]
        self._index = [{m: i for i, m in enumerate(ms)} for ms in self.masks]
        self._down: dict[tuple[int, int], list[int]] = {}
        self._up: dict[tuple[int, int], list[int]] = {}
        self._lock = threading.RLock()

    # -- lookup -----------------------------------------------------------
    def count(self, k: int) -> int:
        return len(self.tables[k])

    def counts(self) -> list[int]:
        return [len(t) for t in self.tables]

    def subspace(self, sid: SubspaceId) -> Subspace:
        return self.tables[sid.dim][sid.index]

    def point_mask(self, sid: SubspaceId) -> int:
        return self.masks[sid.dim][sid.index]

    def id_of(self, s: Subspace) -> SubspaceId:
        if s.ambient_dim != self.n:
            raise LatticeError(f"subspace lives in V({s.ambient_dim},2), lattice is V({self.n},2)")
        return SubspaceId(s.dim, self._index[s.dim][point_set(s)])

    def id_of_mask(self, k: int, mask: int) -> SubspaceId:
        return SubspaceId(k, self._index[k][mask])

    def point_id(self, p: int) -> SubspaceId:
        if not 0 < p < 1 << self.n:
            raise LatticeError(f"{p} is not a point of V({self.n},2)")
        return SubspaceId(1, p - 1)

    def full_space(self) -> SubspaceId:
        return SubspaceId(self.n, 0)

    def ids(self, k: int) -> list[SubspaceId]:
        return [SubspaceId(k, i) for i in range(self.count(k))]

    # -- incidence --------------------------------------------------------
    def _pair(self, k: int, k2: int) -> list[int]:
        key = (k, k2)
        down = self._down.get(key)
        if down is None:
            with self._lock:
                down = self._down.get(key)
                if down is None:
                    down = _compute_down(self, k, k2)
                    self._down[key] = down
        return down

    def _pair_up(self, k: int, k2: int) -> list[int]:
        key = (k, k2)
        up = self._up.get(key)
        if up is None:
            down = self._pair(k, k2)
            rows = [0] * self.count(k)
            for j, m in enumerate(down):
                bit = 1 << j
                for i in mask_points(m):
                    rows[i] |= bit
            with self._lock:
                up = self._up.setdefault(key, rows)
        return up

    def _check_dims(self, k: int, k2: int) -> None:
        if not 0 <= k <= k2 <= self.n:
            raise LatticeError(f"need 0 <= {k} <= {k2} <= {self.n}")

    def down_mask(self, sid: SubspaceId, k: int) -> int:
        """Bitset over indices of the k-subspaces contained in ``sid``."""
        self._check_dims(k, sid.dim)
        if k == sid.dim:
            return 1 << sid.index
        if k == 0:
            return 1
        if k == 1:
            return self.point_mask(sid) >> 1
        return self._pair(k, sid.dim)[sid.index]

    def up_mask(self, sid: SubspaceId, k2: int) -> int:
        """Bitset over indices of the k2-subspaces containing ``sid``."""
        self._check_dims(sid.dim, k2)
        if k2 == sid.dim:
            return 1 << sid.index
        if k2 == self.n:
            return 1
        if sid.dim == 0:
            return (1 << self.count(k2)) - 1
        if sid.dim == 1:
            bit = 1 << (sid.index + 1)
            return _bitset_from_indices(
                j for j, m in enumerate(self.masks[k2]) if m & bit
            )
        return self._pair_up(sid.dim, k2)[sid.index]

    def subspaces_within(self, sid: SubspaceId, k: int) -> list[SubspaceId]:
        if k > sid.dim:
            raise LatticeError(f"cannot take {k}-subspaces of a {sid.dim}-space")
        return [SubspaceId(k, i) for i in mask_points(self.down_mask(sid, k))]

    def superspaces(self, sid: SubspaceId, k2: int) -> list[SubspaceId]:
        if k2 < sid.dim:
            raise LatticeError(f"no {k2}-dimensional superspaces of a {sid.dim}-space")
        return [SubspaceId(k2, j) for j in mask_points(self.up_mask(sid, k2))]

    def contains(self, big: SubspaceId, small: SubspaceId) -> bool:
        return self.point_mask(small) & ~self.point_mask(big) == 0

    def materialize(self, pairs=HOT_PAIRS) -> "Lattice":
        for k, k2 in pairs:
            if k2 <= self.n:
                self._pair(k, k2)
        return self

    def relative(self, sid: SubspaceId) -> "RelativeLattice":
        return RelativeLattice(self, sid)


def _compute_down(lat: Lattice, k: int, k2: int) -> list[int]:
    lat._check_dims(k, k2)
    rel = build_lattice(k2) if k2 < lat.n else lat
    rel_points = [mask_points(m) for m in rel.masks[k]]
    index = lat._index[k]
    out = []
    for big in lat.tables[k2]:
        img = _coefficient_images(big.basis)
        row = 0
        for pts in rel_points:
            m = 0
            for c in pts:
                m |= 1 << img[c]
            row |= 1 << index[m]
        out.append(row)
    return out


def _coefficient_images(basis: tuple[int, ...]) -> list[int]:
    """``img[c]`` = combination of basis rows selected by the bits of ``c``.

    Bit ``j`` of ``c`` selects ``basis[-1 - j]``, so for the full space the map
    is the identity.
    """
    img = [0]
    for b in reversed(basis):
        img += [v ^ b for v in img]
    return img


class RelativeLattice:
    """The subspaces of one ambient subspace, indexed as V(k,2).

    The fixed isomorphism V(k,2) -> ambient sends coordinate vector ``c`` to
    the combination of ambient basis rows selected by its bits (bit ``j``
    picks ``basis[-1 - j]``).
    """

    def __init__(self, parent: Lattice, ambient: SubspaceId):
        self.parent = parent
        self.ambient = ambient
        self.n = ambient.dim
        self.base = build_lattice(ambient.dim) if ambient.dim else None
        self._img = _coefficient_images(parent.subspace(ambient).basis)
        self._pivots = [leading_bit(b) for b in reversed(parent.subspace(ambient).basis)]

    def count(self, k: int) -> int:
        return gaussian_binomial(self.n, k)

    def counts(self) -> list[int]:
        return [self.count(k) for k in range(self.n + 1)]

    def embed_vector(self, c: int) -> int:
        return self._img[c]

    def coordinates(self, v: int) -> int:
        """Inverse of ``embed_vector`` for vectors of the ambient."""
        c = 0
        for j, p in enumerate(self._pivots):
            if (v >> p) & 1:
                c |= 1 << j
        if self._img[c] != v:
            raise LatticeError(f"vector {v:#b} is not in the ambient subspace")
        return c

    def to_parent(self, rel: SubspaceId) -> SubspaceId:
        m = 0
        for c in mask_points(self.base.point_mask(rel)):
            m |= 1 << self._img[c]
        return self.parent.id_of_mask(rel.dim, m)

    def from_parent(self, sid: SubspaceId) -> SubspaceId:
        s = self.parent.subspace(sid)
        rel = rref_canonicalize([self.coordinates(v) for v in s.basis], self.n)
        return self.base.id_of(rel)

    def table(self, k: int) -> list[SubspaceId]:
        """Parent ids of the k-subspaces of the ambient, in relative order."""
        if self.base is None:
            return [SubspaceId(0, 0)]
        return [self.to_parent(r) for r in self.base.ids(k)]

    def superspaces(self, rel: SubspaceId, k2: int) -> list[SubspaceId]:
        return self.base.superspaces(rel, k2)

    def subspaces_within(self, rel: SubspaceId, k: int) -> list[SubspaceId]:
        return self.base.subspaces_within(rel, k)


def _validate_n(n: int) -> None:
    if not isinstance(n, int) or not 1 <= n <= MAX_DIM:
        raise LatticeError(f"n must be an integer in 1..{MAX_DIM}, got {n!r}")


def _tables(n: int) -> list[list[Subspace]]:
    return [[Subspace(n, b) for b in canonical_bases(n, k)] for k in range(n + 1)]


_memo: dict[int, Lattice] = {}
_memo_lock = threading.RLock()


def build_lattice(n: int) -> Lattice:
    """Build the complete lattice of V(n,2); memoised per process."""
    lat = _memo.get(n)
    if lat is not None:
        return lat
    if n != 0:
        _validate_n(n)
    with _memo_lock:
        lat = _memo.get(n)
        if lat is None:
            if n == 0:
                lat = Lattice(0, [[Subspace(0, ())]])
            else:
                lat = Lattice(n, _tables(n)).materialize()
            _memo[n] = lat
    return lat


# -- cache file -------------------------------------------------------------

def default_cache_path(n: int) -> Path:
    base = os.environ.get(CACHE_ENV)
    root = Path(base) if base else Path.home() / ".cache" / "spreadcheck"
    return root / f"lattice-n{n}.gflt"


def _bitset_bytes(m: int, width: int) -> bytes:
    return m.to_bytes(width, "little")


def save_lattice(lat: Lattice, path: os.PathLike | str) -> Path:
    path = Path(path)
    lat.materialize()
    out = bytearray(MAGIC)
    out += struct.pack("<HB", VERSION, lat.n)
    counts = lat.counts()
    out += struct.pack(f"<{len(counts)}I", *counts)
    for k, table in enumerate(lat.tables):
        for s in table:
            out += bytes(s.basis)
    pairs = sorted(p for p in lat._down if p[1] <= lat.n)
    out += struct.pack("<B", len(pairs))
    for k, k2 in pairs:
        width = (counts[k] + 7) // 8
        out += struct.pack("<BBI", k, k2, width)
        for m in lat._down[(k, k2)]:
            out += _bitset_bytes(m, width)
    out += hashlib.blake2b(bytes(out), digest_size=8).digest()
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(bytes(out))
    tmp.replace(path)
    return path


def load_lattice(path: os.PathLike | str) -> Lattice:
    """Load a cache file written by :func:`save_lattice`.

    Raises LatticeCacheError on a bad magic, version, checksum or count table.
    """
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise LatticeCacheError(f"cannot read lattice cache {path}: {exc}") from exc
    if len(data) < 15 or data[:4] != MAGIC:
        raise LatticeCacheError(f"{path}: not a lattice cache file")
    body, trailer = data[:-8], data[-8:]
    if hashlib.blake2b(body, digest_size=8).digest() != trailer:
        raise LatticeCacheError(f"{path}: checksum mismatch")
    version, n = struct.unpack_from("<HB", body, 4)
    if version != VERSION:
        raise LatticeCacheError(f"{path}: format version {version}, expected {VERSION}")
    try:
        _validate_n(n)
    except LatticeError as exc:
        raise LatticeCacheError(f"{path}: {exc}") from exc
    off = 7
    try:
        counts = struct.unpack_from(f"<{n + 1}I", body, off)
        off += 4 * (n + 1)
        if list(counts) != [gaussian_binomial(n, k) for k in range(n + 1)]:
            raise LatticeCacheError(f"{path}: per-dimension counts {counts} are wrong")
        tables = []
        for k, c in enumerate(counts):
            raw = body[off: off + c * k]
            off += c * k
            rows = [tuple(raw[i * k: (i + 1) * k]) for i in range(c)]
            if rows != sorted(set(rows)):
                raise LatticeCacheError(f"{path}: dimension-{k} table out of canonical order")
            tables.append([Subspace(n, r) for r in rows])
        lat = Lattice(n, tables)
        (npairs,) = struct.unpack_from("<B", body, off)
        off += 1
        for _ in range(npairs):
            k, k2, width = struct.unpack_from("<BBI", body, off)
            off += 6
            down = []
            for _j in range(counts[k2]):
                down.append(int.from_bytes(body[off: off + width], "little"))
                off += width
            lat._down[(k, k2)] = down
    except struct.error as exc:
        raise LatticeCacheError(f"{path}: truncated ({exc})") from exc
    if off != len(body):
        raise LatticeCacheError(f"{path}: {len(body) - off} trailing bytes")
    return lat


def get_lattice(n: int, cache: os.PathLike | str | None = None, strict: bool = False) -> Lattice:
    """Lattice for V(n,2), via the cache file when one is given.

    A missing cache is built and written.  A bad cache raises
    LatticeCacheError when ``strict``; otherwise it is rebuilt with a warning.
    """
    _validate_n(n)
    if cache is None:
        return build_lattice(n)
    path = Path(cache)
    if path.exists():
        try:
            lat = load_lattice(path)
        except LatticeCacheError:
            if strict:
                raise
            log.warning("lattice cache %s is invalid; rebuilding", path)
        else:
            if lat.n != n:
                if strict:
                    raise LatticeCacheError(f"{path} holds n={lat.n}, wanted n={n}")
                log.warning("lattice cache %s holds n=%d; rebuilding", path, lat.n)
            else:
                return _memo.setdefault(n, lat)
    lat = build_lattice(n)
    save_lattice(lat, path)
    return lat


def check_lattice_n(n) -> int:
    try:
        n = int(n)
    except (TypeError, ValueError) as exc:
        raise LatticeError(f"n must be an integer, got {n!r}") from exc
    _validate_n(n)
    return n


__all__ = [
    "HOT_PAIRS",
    "Lattice",
    "LatticeCacheError",
    "LatticeError",
    "RelativeLattice",
    "SubspaceId",
    "build_lattice",
    "canonical_bases",
    "default_cache_path",
    "get_lattice",
    "load_lattice",
    "save_lattice",
    "GF2Error",
]
