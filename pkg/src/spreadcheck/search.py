"""Exact-cover search for (s,t)-spreads.

Rows of the exact-cover matrix are the t-subspaces, columns the s-subspaces.
For the open (2,3) instance in V(7,2) the search can cut partial solutions
that exceed counting caps every genuine spread meets with equality: at most
21 members through a point, 5 through a point inside one hyperplane, 45
inside a hyperplane and 5 inside a 5-space.
"""

from __future__ import annotations

import hashlib
import logging
import os
import random
import struct
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Hashable, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from . import _dlx
from ._dlx import N_RULES, RULE_NAMES
from .gf2core import gaussian_binomial, mask_points
from .lattice import Lattice, SubspaceId, build_lattice
from .spreads import SpreadCandidate

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"GFCK"
CHECKPOINT_VERSION = 1
SYMMETRY_MODES = ("none", "fix-first")
PRUNED_PARAMS = (7, 2, 3)


class SearchError(ValueError):
    pass


class CheckpointError(SearchError):
    pass


@dataclass(frozen=True)
class ExactCoverInstance:
    """Universe labels, candidate labels and each candidate's cover bitset.

    ``covers[i]`` has bit ``j`` set iff candidate ``i`` covers ``universe[j]``.
    ``forced`` lists candidates already committed outside the matrix (by
    symmetry breaking); they are prepended to every solution.
    """

    universe: tuple[Hashable, ...]
    candidates: tuple[Hashable, ...]
    covers: tuple[int, ...]
    n: Optional[int] = None
    s: Optional[int] = None
    t: Optional[int] = None
    forced: tuple[Hashable, ...] = ()

    @classmethod
    def from_sets(cls, universe_size: int, sets: Sequence[Sequence[int]]) -> "ExactCoverInstance":
        covers = []
        for st in sets:
            m = 0
            for e in st:
                if not 0 <= e < universe_size:
                    raise SearchError(f"element {e} outside universe of size {universe_size}")
                m |= 1 << e
            covers.append(m)
        return cls(tuple(range(universe_size)), tuple(range(len(sets))), tuple(covers))

    @property
    def params(self) -> Optional[tuple[int, int, int]]:
        if self.n is None:
            return None
        return (self.n, self.s, self.t)

    def rows(self) -> list[list[int]]:
        return [mask_points(c) for c in self.covers]

    def fingerprint(self) -> bytes:
        h = hashlib.blake2b(digest_size=8)
        h.update(repr((self.params, len(self.universe), tuple(self.forced))).encode())
        for c in self.covers:
            h.update(c.to_bytes((len(self.universe) + 7) // 8 or 1, "little"))
        return h.digest()


def _check_params(n: int, s: int, t: int) -> None:
    if not 1 <= s < t < n <= 7:
        raise SearchError(f"need 1 <= s < t < n <= 7, got (n,s,t)=({n},{s},{t})")


def build_instance(n: int, s: int, t: int, lattice: Lattice | None = None) -> ExactCoverInstance:
    _check_params(n, s, t)
    lat = lattice or build_lattice(n)
    universe = tuple(lat.ids(s))
    candidates = tuple(lat.ids(t))
    covers = tuple(lat.down_mask(c, s) for c in candidates)
    return ExactCoverInstance(universe, candidates, covers, n, s, t)


def symmetry_fix_first(instance: ExactCoverInstance) -> ExactCoverInstance:
    """Force the first (canonically least) candidate into every solution.

    Existence of a solution is unchanged because GL(n,2) is transitive on
    t-subspaces; solution counts are not preserved.
    """
    if not instance.candidates:
        return instance
    first = instance.covers[0]
    keep_u = [j for j in range(len(instance.universe)) if not first >> j & 1]
    remap = {old: new for new, old in enumerate(keep_u)}
    cands, covers = [], []
    for lab, cov in zip(instance.candidates[1:], instance.covers[1:]):
        if cov & first:
            continue
        m = 0
        for j in mask_points(cov):
            m |= 1 << remap[j]
        cands.append(lab)
        covers.append(m)
    return replace(
        instance,
        universe=tuple(instance.universe[j] for j in keep_u),
        candidates=tuple(cands),
        covers=tuple(covers),
        forced=instance.forced + (instance.candidates[0],),
    )


@dataclass
class SearchConfig:
    nodes: Optional[int] = None
    depth: Optional[int] = None
    limit: Optional[int] = None
    point_degree: bool = True
    hyperplane_45: bool = True
    fivespace_5: bool = True
    symmetry: str = "none"
    checkpoint: Optional[str] = None
    workers: int = 1
    seed: Optional[int] = None
    frontier: int = 2

    def __post_init__(self):
        for name in ("nodes", "depth", "limit"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise SearchError(f"{name} must be nonnegative, got {v}")
        if self.symmetry not in SYMMETRY_MODES:
            raise SearchError(f"symmetry must be one of {SYMMETRY_MODES}, got {self.symmetry!r}")
        if self.workers < 1:
            raise SearchError(f"workers must be >= 1, got {self.workers}")
        if self.frontier < 1:
            raise SearchError(f"frontier depth must be >= 1, got {self.frontier}")

    @property
    def toggles(self) -> np.ndarray:
        return np.array([self.point_degree, self.hyperplane_45, self.fivespace_5], dtype=np.bool_)

    def to_dict(self) -> dict:
        return {
            "nodes": self.nodes, "depth": self.depth, "limit": self.limit,
            "pruning": {rule: bool(on) for rule, on in zip(RULE_NAMES, self.toggles)},
            "symmetry": self.symmetry, "workers": self.workers, "seed": self.seed,
        }


@dataclass
class SearchStats:
    nodes: int = 0
    max_depth: int = 0
    prunes: dict = field(default_factory=lambda: {r: 0 for r in RULE_NAMES})
    solutions: int = 0
    elapsed: float = 0.0
    depth_cutoffs: int = 0
    depth_histogram: list = field(default_factory=list)
    exhausted: bool = False
    complete: bool = False
    symmetry: str = "none"

    def merge(self, other: "SearchStats") -> "SearchStats":
        hist = [a + b for a, b in _zip_pad(self.depth_histogram, other.depth_histogram)]
        return SearchStats(
            nodes=self.nodes + other.nodes,
            max_depth=max(self.max_depth, other.max_depth),
            prunes={r: self.prunes[r] + other.prunes[r] for r in RULE_NAMES},
            solutions=self.solutions + other.solutions,
            elapsed=max(self.elapsed, other.elapsed),
            depth_cutoffs=self.depth_cutoffs + other.depth_cutoffs,
            depth_histogram=hist,
            exhausted=self.exhausted or other.exhausted,
            complete=self.complete and other.complete,
            symmetry=self.symmetry,
        )

    def to_dict(self, timing: bool = True) -> dict:
        d = {
            "nodes": self.nodes,
            "maxDepth": self.max_depth,
            "prunes": dict(self.prunes),
            "solutions": self.solutions,
            "millis": round(self.elapsed * 1000) if timing else 0,
            "depthCutoffs": self.depth_cutoffs,
            "depthHistogram": list(self.depth_histogram),
            "exhausted": self.exhausted,
            "complete": self.complete,
        }
        if self.symmetry != "none":
            d["note"] = "solution count restricted by symmetry breaking (fix-first); not the full count"
        return d


def _zip_pad(a, b):
    k = max(len(a), len(b))
    return zip(list(a) + [0] * (k - len(a)), list(b) + [0] * (k - len(b)))


@dataclass
class SearchState:
    """Everything needed to continue a paused search at a node boundary."""

    level: int = 0
    step: int = _dlx.ENTER
    path: list = field(default_factory=list)
    nodes: int = 0
    max_depth: int = 0
    depth_cutoffs: int = 0
    prunes: list = field(default_factory=lambda: [0] * N_RULES)
    histogram: list = field(default_factory=list)
    solutions: list = field(default_factory=list)
    elapsed: float = 0.0
    finished: bool = False
    fingerprint: bytes = b"\0" * 8


# -- pruning tables ----------------------------------------------------------

def _prune_tables(instance: ExactCoverInstance, order: Sequence[int]):
    """Per-row counter indices for the (7,2,3) caps; empty for other instances."""
    k = len(order)
    if instance.params != PRUNED_PARAMS:
        z = np.zeros((k, 0), np.int32)
        return False, (z, z, z, z), (np.zeros(1, np.int32),) * 4
    lat = build_lattice(7)
    npts = lat.count(1)
    pts = np.empty((k, 7), np.int32)
    fives = np.empty((k, 35), np.int32)
    sixes = np.empty((k, 15), np.int32)
    ptsix = np.empty((k, 105), np.int32)
    for r, ci in enumerate(order):
        plane = instance.candidates[ci]
        p_idx = mask_points(lat.down_mask(plane, 1))
        u_idx = mask_points(lat.up_mask(plane, 6))
        pts[r] = p_idx
        fives[r] = mask_points(lat.up_mask(plane, 5))
        sixes[r] = u_idx
        ptsix[r] = [p * npts + u for p in p_idx for u in u_idx]
    counters = (
        np.zeros(npts, np.int32),
        np.zeros(npts * lat.count(6), np.int32),
        np.zeros(lat.count(6), np.int32),
        np.zeros(lat.count(5), np.int32),
    )
    return True, (pts, ptsix, sixes, fives), counters


def _counter_contribution(plane: SubspaceId, lat: Lattice, counters) -> None:
    cnt_pt, cnt_ptsix, cnt_six, cnt_five = counters
    npts = lat.count(1)
    p_idx = mask_points(lat.down_mask(plane, 1))
    u_idx = mask_points(lat.up_mask(plane, 6))
    for p in p_idx:
        cnt_pt[p] += 1
        for u in u_idx:
            cnt_ptsix[p * npts + u] += 1
    for u in u_idx:
        cnt_six[u] += 1
    for f in mask_points(lat.up_mask(plane, 5)):
        cnt_five[f] += 1


def prune_hooks(partial: Sequence[SubspaceId], config: SearchConfig | None = None,
                lattice: Lattice | None = None) -> Optional[str]:
    """None if the partial (2,3) family is admissible, else the first violated rule.

    Rules are checked in the order point-degree, hyperplane-45, fivespace-5.
    """
    config = config or SearchConfig()
    lat = lattice or build_lattice(7)
    if lat.n != 7:
        raise SearchError("pruning caps apply to (n,s,t) = (7,2,3) only")
    counters = (
        np.zeros(lat.count(1), np.int32),
        np.zeros(lat.count(1) * lat.count(6), np.int32),
        np.zeros(lat.count(6), np.int32),
        np.zeros(lat.count(5), np.int32),
    )
    for plane in partial:
        if plane.dim != 3:
            raise SearchError(f"partial members must be 3-dimensional, got {plane}")
        _counter_contribution(plane, lat, counters)
    cnt_pt, cnt_ptsix, cnt_six, cnt_five = counters
    if config.point_degree and (cnt_pt.max() > _dlx.POINT_CAP
                                or cnt_ptsix.max() > _dlx.POINT_IN_HYPERPLANE_CAP):
        return RULE_NAMES[0]
    if config.hyperplane_45 and cnt_six.max() > _dlx.HYPERPLANE_CAP:
        return RULE_NAMES[1]
    if config.fivespace_5 and cnt_five.max() > _dlx.FIVESPACE_CAP:
        return RULE_NAMES[2]
    return None


# -- engine ------------------------------------------------------------------

class _Engine:
    def __init__(self, instance: ExactCoverInstance, config: SearchConfig):
        self.instance = instance
        self.config = config
        order = list(range(len(instance.candidates)))
        if config.seed is not None:
            random.Random(config.seed).shuffle(order)
        self.order = order
        rows = [mask_points(instance.covers[i]) for i in order]
        self.links = _dlx.build_links(len(instance.universe), rows)
        self.use_prune, self.prune_rows, self.counters = _prune_tables(instance, order)
        if self.use_prune and instance.forced:
            lat = build_lattice(7)
            for plane in instance.forced:
                _counter_contribution(plane, lat, self.counters)
        self.toggles = config.toggles
        self.use_prune = self.use_prune and bool(self.toggles.any())
        depth = len(instance.universe) + 2
        self.X = np.zeros(depth, np.int32)
        self.COL = np.zeros(depth, np.int32)

    def fingerprint(self) -> bytes:
        h = hashlib.blake2b(self.instance.fingerprint(), digest_size=8)
        h.update(repr((self.config.seed, self.config.to_dict()["pruning"])).encode())
        return h.digest()

    def replay(self, path: Sequence[int]) -> None:
        L, R, U, D, C, ROW, S = self.links
        prefix = np.asarray(path, np.int32)
        self.X[: len(prefix)] = prefix
        _dlx.replay(prefix, L, R, U, D, C, S, ROW, self.COL, self.use_prune,
                    *self.prune_rows, *self.counters)

    def rows_of(self, level: int) -> tuple[int, ...]:
        ROW = self.links[5]
        return tuple(self.order[ROW[x]] for x in self.X[:level])

    def advance(self, st: SearchState, floor: int, budget: int, frontier: int):
        L, R, U, D, C, ROW, S = self.links
        depth = len(self.X)
        hist = np.zeros(depth + 1, np.int64)
        hist[: len(st.histogram)] = st.histogram
        state = np.array([st.level, st.step], np.int64)
        counters = np.array([st.nodes, st.max_depth, st.depth_cutoffs], np.int64)
        prunes = np.array(st.prunes, np.int64)
        depth_limit = -1 if self.config.depth is None else self.config.depth
        status = _dlx.run(L, R, U, D, C, S, ROW, self.X, self.COL, state, counters, prunes, hist,
                          floor, budget, depth_limit, frontier, self.use_prune, self.toggles,
                          *self.prune_rows, *self.counters)
        st.level, st.step = int(state[0]), int(state[1])
        st.nodes, st.max_depth, st.depth_cutoffs = (int(v) for v in counters)
        st.prunes = [int(v) for v in prunes]
        nz = np.nonzero(hist)[0]
        st.histogram = [int(v) for v in hist[: (nz[-1] + 1) if len(nz) else 0]]
        st.path = [int(v) for v in self.X[: st.level]]
        return status


def _budget(config: SearchConfig) -> int:
    return -1 if config.nodes is None else int(config.nodes)


def _drive(engine: _Engine, st: SearchState, floor: int, frontier: int = 0,
           checkpoint: Optional[str] = None):
    """Run until done, paused or the solution limit; returns frontier prefixes if asked."""
    limit = engine.config.limit
    prefixes = []
    t0 = time.perf_counter()
    budget = _budget(engine.config)
    while True:
        if limit is not None and len(st.solutions) >= limit:
            break
        status = engine.advance(st, floor, budget, frontier)
        if status == _dlx.SOLUTION:
            st.solutions.append(engine.rows_of(st.level))
        elif status == _dlx.FRONTIER:
            prefixes.append(list(st.path))
        elif status == _dlx.PAUSED:
            break
        else:
            st.finished = True
            break
    st.elapsed += time.perf_counter() - t0
    if checkpoint and not st.finished:
        save_checkpoint(st, checkpoint)
    return prefixes


def _stats_of(st: SearchState, nsolutions: int, budget_hit: bool, symmetry: str) -> SearchStats:
    return SearchStats(
        nodes=st.nodes,
        max_depth=st.max_depth,
        prunes=dict(zip(RULE_NAMES, st.prunes)),
        solutions=nsolutions,
        elapsed=st.elapsed,
        depth_cutoffs=st.depth_cutoffs,
        depth_histogram=list(st.histogram),
        exhausted=budget_hit,
        complete=st.finished and st.depth_cutoffs == 0,
        symmetry=symmetry,
    )


def _labels(instance: ExactCoverInstance, rows: Sequence[int]) -> tuple:
    return tuple(sorted(tuple(instance.forced) + tuple(instance.candidates[r] for r in rows)))


def solve(instance: ExactCoverInstance, config: SearchConfig | None = None,
          resume: SearchState | str | os.PathLike | None = None):
    """Enumerate exact covers; returns ``(solutions, stats)``.

    Solutions are tuples of candidate labels (forced ones included), sorted
    canonically.  With one worker the run is deterministic and, if a
    checkpoint path is configured, a budget pause writes a resumable state.
    """
    config = config or SearchConfig()
    if config.symmetry == "fix-first" and not instance.forced:
        instance = symmetry_fix_first(instance)
    if config.workers > 1 and resume is None:
        return _solve_parallel(instance, config)
    engine = _Engine(instance, config)
    fp = engine.fingerprint()
    if resume is None:
        st = SearchState(fingerprint=fp)
    else:
        st = load_checkpoint(resume) if not isinstance(resume, SearchState) else resume
        if st.fingerprint != fp:
            raise CheckpointError("checkpoint belongs to a different instance or configuration")
        engine.replay(st.path)
    _drive(engine, st, floor=0, checkpoint=config.checkpoint)
    sols = sorted(_labels(instance, r) for r in st.solutions)
    budget_hit = not st.finished and (config.limit is None or len(sols) < config.limit)
    return sols, _stats_of(st, len(sols), budget_hit, config.symmetry)


def solve_state(instance: ExactCoverInstance, config: SearchConfig,
                state: SearchState | None = None) -> SearchState:
    """Low-level variant of :func:`solve` returning the raw resumable state."""
    engine = _Engine(instance, config)
    st = state or SearchState(fingerprint=engine.fingerprint())
    if state is not None:
        engine.replay(st.path)
    _drive(engine, st, floor=0)
    return st


_worker_engine: dict = {}


def _init_worker(instance, config):
    _worker_engine["proto"] = (instance, config)


def _run_subtree(prefix):
    instance, config = _worker_engine["proto"]
    engine = _Engine(instance, config)
    engine.replay(prefix)
    st = SearchState(level=len(prefix), path=list(prefix))
    _drive(engine, st, floor=len(prefix))
    return st


def _solve_parallel(instance: ExactCoverInstance, config: SearchConfig):
    engine = _Engine(instance, config)
    top = SearchState(fingerprint=engine.fingerprint())
    prefixes = _drive(engine, top, floor=0, frontier=config.frontier)
    states = [top]
    with ProcessPoolExecutor(config.workers, initializer=_init_worker,
                             initargs=(instance, config)) as pool:
        states += list(pool.map(_run_subtree, prefixes))
    stats = None
    sols = []
    for st in states:
        s = _stats_of(st, 0, not st.finished, config.symmetry)
        stats = s if stats is None else stats.merge(s)
        sols += [_labels(instance, r) for r in st.solutions]
    sols = sorted(set(sols))
    if config.limit is not None:
        sols = sols[: config.limit]
    stats.solutions = len(sols)
    stats.complete = all(st.finished for st in states) and stats.depth_cutoffs == 0
    return sols, stats


def solutions_as_spreads(instance: ExactCoverInstance, solutions) -> list[SpreadCandidate]:
    if instance.params is None:
        raise SearchError("generic instances have no spread interpretation")
    n, s, t = instance.params
    return [SpreadCandidate(n, s, t, sol) for sol in solutions]


# -- checkpoints --------------------------------------------------------------

def _pack_state(st: SearchState) -> bytes:
    out = bytearray(CHECKPOINT_MAGIC)
    out += struct.pack("<H", CHECKPOINT_VERSION)
    out += st.fingerprint
    out += struct.pack("<IBB", st.level, st.step, st.finished)
    out += struct.pack(f"<I{len(st.path)}i", len(st.path), *st.path)
    out += struct.pack("<QQQ", st.nodes, st.max_depth, st.depth_cutoffs)
    out += struct.pack(f"<{N_RULES}Q", *st.prunes)
    out += struct.pack(f"<I{len(st.histogram)}Q", len(st.histogram), *st.histogram)
    out += struct.pack("<d", st.elapsed)
    out += struct.pack("<I", len(st.solutions))
    for sol in st.solutions:
        out += struct.pack(f"<I{len(sol)}I", len(sol), *sol)
    out += hashlib.blake2b(bytes(out), digest_size=8).digest()
    return bytes(out)


def _unpack_state(data: bytes) -> SearchState:
    if len(data) < 14 or data[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError("not a search checkpoint")
    body, trailer = data[:-8], data[-8:]
    if hashlib.blake2b(body, digest_size=8).digest() != trailer:
        raise CheckpointError("checkpoint checksum mismatch")
    try:
        (version,) = struct.unpack_from("<H", body, 4)
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(f"checkpoint version {version}, expected {CHECKPOINT_VERSION}")
        off = 6
        fp = body[off: off + 8]
        off += 8
        level, step, finished = struct.unpack_from("<IBB", body, off)
        off += 6
        (k,) = struct.unpack_from("<I", body, off)
        off += 4
        path = list(struct.unpack_from(f"<{k}i", body, off))
        off += 4 * k
        nodes, max_depth, cutoffs = struct.unpack_from("<QQQ", body, off)
        off += 24
        prunes = list(struct.unpack_from(f"<{N_RULES}Q", body, off))
        off += 8 * N_RULES
        (k,) = struct.unpack_from("<I", body, off)
        off += 4
        hist = list(struct.unpack_from(f"<{k}Q", body, off))
        off += 8 * k
        (elapsed,) = struct.unpack_from("<d", body, off)
        off += 8
        (nsol,) = struct.unpack_from("<I", body, off)
        off += 4
        sols = []
        for _ in range(nsol):
            (k,) = struct.unpack_from("<I", body, off)
            off += 4
            sols.append(tuple(struct.unpack_from(f"<{k}I", body, off)))
            off += 4 * k
    except struct.error as exc:
        raise CheckpointError(f"truncated checkpoint ({exc})") from exc
    if off != len(body):
        raise CheckpointError("trailing bytes in checkpoint")
    return SearchState(level, step, path, nodes, max_depth, cutoffs, prunes, hist, sols,
                       elapsed, bool(finished), fp)


def save_checkpoint(state: SearchState, path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(_pack_state(state))
    return path


def load_checkpoint(path: str | os.PathLike) -> SearchState:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    return _unpack_state(data)


def checkpoint_roundtrip(state: SearchState) -> SearchState:
    return _unpack_state(_pack_state(state))


# -- estimator ---------------------------------------------------------------

class SpreadSearch(BaseEstimator):
    """Exact-cover search for (s,t)-spreads of V(n,2), estimator style.

    ``fit()`` runs the search and stores ``solutions_`` (SpreadCandidates),
    ``stats_`` and ``instance_``.  Parameters mirror :class:`SearchConfig`.
    """

    def __init__(self, n=4, s=1, t=2, nodes=None, depth=None, limit=None,
                 point_degree=True, hyperplane_45=True, fivespace_5=True,
                 symmetry="none", workers=1, seed=None):
        self.n = n
        self.s = s
        self.t = t
        self.nodes = nodes
        self.depth = depth
        self.limit = limit
        self.point_degree = point_degree
        self.hyperplane_45 = hyperplane_45
        self.fivespace_5 = fivespace_5
        self.symmetry = symmetry
        self.workers = workers
        self.seed = seed

    def _config(self) -> SearchConfig:
        return SearchConfig(
            nodes=self.nodes, depth=self.depth, limit=self.limit,
            point_degree=self.point_degree, hyperplane_45=self.hyperplane_45,
            fivespace_5=self.fivespace_5, symmetry=self.symmetry,
            workers=self.workers, seed=self.seed,
        )

    def fit(self, X=None, y=None):
        config = self._config()
        self.instance_ = build_instance(self.n, self.s, self.t)
        sols, self.stats_ = solve(self.instance_, config)
        self.solutions_ = solutions_as_spreads(self.instance_, sols)
        return self

    def transform(self, X=None):
        """Literal form of each found spread."""
        if not hasattr(self, "solutions_"):
            from sklearn.exceptions import NotFittedError
            raise NotFittedError("call fit() first")
        return [c.to_literals() for c in self.solutions_]


def expected_sizes(n: int, s: int, t: int) -> tuple[int, int, int]:
    """(universe size, candidate count, elements per candidate)."""
    return gaussian_binomial(n, s), gaussian_binomial(n, t), gaussian_binomial(t, s)
