"""Finite checks behind the non-alpha-point theorem for (2,3)-spreads of V(7,2).

No (2,3)-spread of V(7,2) is known, so every step of the argument is checked
on objects that do exist: incidence numbers of the lattice, all line spreads
of a 4-space, and sampled plane families inside a 5-space.  The two
certificate functions take an arbitrary candidate and either reject it as a
non-spread or produce the point the theorems promise.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .gf2core import format_literal, mask_points
from .lattice import Lattice, SubspaceId, build_lattice, get_lattice
from .spreads import (
    NOT_ALPHA,
    SpreadCandidate,
    SpreadError,
    SpreadViolation,
    alpha_point_check,
    derived_spread,
    disjoint_tuples,
    enumerate_line_spreads,
    geometric_witness,
    popcount,
    rectangle_config,
    verify_spread,
)

log = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"
DEFAULT_SAMPLES = 100_000
DEFAULT_SEED = 20090317


@dataclass
class LemmaReport:
    lemma: str
    status: str
    examined: int
    witnesses: list = field(default_factory=list)
    millis: int = 0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "lemma": self.lemma,
            "status": self.status,
            "examined": self.examined,
            "witnesses": self.witnesses,
            "millis": self.millis if timing else 0,
            "details": self.details,
        }


class _Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.millis = round((time.perf_counter() - self.t0) * 1000)


def _lit(lat: Lattice, sid: SubspaceId) -> str:
    return format_literal(lat.subspace(sid))


def _lat7(lattice: Lattice | None) -> Lattice:
    lat = lattice or build_lattice(7)
    if lat.n != 7:
        raise ValueError(f"proof checks run in V(7,2), got a lattice for n={lat.n}")
    return lat


# -- counting -----------------------------------------------------------------

class _Ledger:
    def __init__(self):
        self.steps = []
        self.failures = []

    def divide(self, label: str, num: int, den: int) -> int:
        q, r = divmod(num, den)
        self.steps.append({"quantity": label, "equation": f"{num}/{den}", "value": q})
        if r:
            self.failures.append({"quantity": label, "equation": f"{num}/{den}",
                                  "remainder": r})
        return q


def verify_conditional_counts(lattice: Lattice | None = None) -> LemmaReport:
    """Derive the parameters a (2,3)-spread of V(7,2) would have.

    Every number is a double count over lattice incidences of concrete
    subspaces; nothing assumes a spread exists.
    """
    lat = _lat7(lattice)
    with _Timer() as tm:
        led = _Ledger()
        P = lat.point_id(1)
        U = next(u for u in lat.superspaces(P, 6))
        T = next(t for t in lat.subspaces_within(U, 5) if lat.contains(t, P))
        plane = next(x for x in lat.subspaces_within(T, 3) if lat.contains(x, P))

        lines_through_P = popcount(lat.up_mask(P, 2))
        lines_through_P_in_plane = popcount(lat.up_mask(P, 2) & lat.down_mask(plane, 2))
        # each line through P lies in exactly one member through P
        per_point = led.divide("members through a point of V", lines_through_P,
                               lines_through_P_in_plane)

        lines_through_P_in_U = popcount(lat.up_mask(P, 2) & lat.down_mask(U, 2))
        # member through P inside U holds 3 such lines, one outside U holds 1
        outside = next(x for x in lat.superspaces(P, 3) if not lat.contains(U, x))
        in_u_lines = popcount(lat.up_mask(P, 2) & lat.down_mask(outside, 2) & lat.down_mask(U, 2))
        x = led.divide("members through a point of U inside U",
                       lines_through_P_in_U - in_u_lines * per_point,
                       lines_through_P_in_plane - in_u_lines)

        pts_U = popcount(lat.down_mask(U, 1))
        pts_plane = popcount(lat.down_mask(plane, 1))
        in_U = led.divide("members inside U", pts_U * x, pts_plane)

        pts_T = popcount(lat.down_mask(T, 1))
        other = next(p for p in lat.subspaces_within(U, 3) if not lat.contains(T, p))
        trace = popcount(lat.point_mask(other) & lat.point_mask(T))
        in_T = led.divide("members inside a 5-space of U", pts_T * x - trace * in_U,
                          pts_plane - trace)

        lines_V = lat.count(2)
        lines_plane = popcount(lat.down_mask(plane, 2))
        total = led.divide("members of the spread", lines_V, lines_plane)

        # lines of U are covered by members inside U (7 each) or outside (1 each)
        lines_U = popcount(lat.down_mask(U, 2))
        outside_U = lines_U - lines_plane * in_U
        consistent = outside_U + in_U == total
    values = {
        "members_per_point": per_point,
        "members_per_point_in_U": x,
        "members_in_U": in_U,
        "members_in_5space": in_T,
        "total_members": total,
        "members_meeting_U_in_a_line": outside_U,
    }
    ok = not led.failures and consistent
    return LemmaReport("conditional_counts", PASS if ok else FAIL, len(led.steps),
                       led.failures if not ok else [], tm.millis,
                       {"values": values, "steps": led.steps})


def verify_hyperplane_triple(lattice: Lattice | None = None,
                             hyperplanes: Sequence[SubspaceId] | None = None) -> LemmaReport:
    """Every 4-space W of a 6-space U lies in exactly three 5-spaces of U,
    pairwise meeting in W and together covering U.  Defaults to every U."""
    lat = _lat7(lattice)
    us = list(hyperplanes) if hyperplanes is not None else lat.ids(6)
    fails = []
    examined = 0
    with _Timer() as tm:
        for U in us:
            um = lat.point_mask(U)
            fives_in_u = lat.down_mask(U, 5)
            for W in lat.subspaces_within(U, 4):
                examined += 1
                wm = lat.point_mask(W)
                ts = mask_points(lat.up_mask(W, 5) & fives_in_u)
                tm_ = [lat.masks[5][j] for j in ts]
                ok = (len(ts) == 3
                      and all(a & b == wm for a, b in combinations(tm_, 2))
                      and (tm_[0] | tm_[1] | tm_[2]) == um)
                if not ok and len(fails) < 10:
                    fails.append({"U": _lit(lat, U), "W": _lit(lat, W), "between": len(ts)})
    return LemmaReport("hyperplane_triple", FAIL if fails else PASS, examined, fails, tm.millis,
                       {"hyperplanes_checked": len(us)})


def _hyperplane_bits(lat5: Lattice) -> np.ndarray:
    """For each plane of V(5,2), a 31-bit mask of the hyperplanes containing it."""
    out = np.zeros(lat5.count(3), np.uint32)
    for i, sid in enumerate(lat5.ids(3)):
        out[i] = lat5.up_mask(sid, 4)
    return out


def verify_poor_space_lemma(samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED,
                            lattice: Lattice | None = None) -> LemmaReport:
    """Hyperplanes of a 5-space avoiding five of its planes number at least 16."""
    lat = _lat7(lattice)
    lat5 = build_lattice(5)
    fails = []
    with _Timer() as tm:
        # (a) incidence: exhaustive on V(5,2) and on one concrete 5-space of V(7,2)
        per_plane = {popcount(lat5.up_mask(p, 4)) for p in lat5.ids(3)}
        T = SubspaceId(5, 0)
        hyper = [lat.point_mask(w) for w in lat.subspaces_within(T, 4)]
        concrete = {sum(1 for h in hyper if lat.point_mask(p) & ~h == 0)
                    for p in lat.subspaces_within(T, 3)}
        incidence_ok = per_plane == {3} and concrete == {3} and len(hyper) == 31
        if not incidence_ok:
            fails.append({"check": "incidence", "observed": sorted(per_plane | concrete)})
        examined = lat5.count(3) * lat5.count(4) + len(hyper) * 155

        # (b) sampled families of five distinct planes
        bits = _hyperplane_bits(lat5)
        rng = np.random.default_rng(seed)
        nplanes = len(bits)
        poor = np.empty(samples, np.int64)
        chunk = 20_000
        for lo in range(0, samples, chunk):
            k = min(chunk, samples - lo)
            pick = rng.random((k, nplanes)).argpartition(5, axis=1)[:, :5]
            cover = np.bitwise_or.reduce(bits[pick], axis=1)
            poor[lo: lo + k] = 31 - np.bitwise_count(cover).astype(np.int64)
        mn = int(poor.min()) if samples else None
        equal = int((poor == 16).sum()) if samples else 0
        if samples and mn < 16:
            bad = int(np.argmin(poor))
            fails.append({"check": "sampled bound", "sample": bad, "poor": mn})
        examined += samples

        # five planes inside one hyperplane: 31 - (1 + 5*2) poor spaces
        H = lat5.ids(4)[0]
        five = lat5.subspaces_within(H, 3)[:5]
        cover = 0
        for p in five:
            cover |= lat5.up_mask(p, 4)
        shared = 31 - popcount(cover)
        if shared != 20:
            fails.append({"check": "shared hyperplane", "poor": shared})
    details = {
        "samples": samples, "seed": seed, "min_poor": mn, "equality_cases": equal,
        "shared_hyperplane_poor": shared, "hyperplanes_per_plane": 3 if incidence_ok else None,
    }
    return LemmaReport("poor_space", FAIL if fails else PASS, examined, fails, tm.millis, details)


def verify_alpha_not_in_poor(lattice: Lattice | None = None) -> LemmaReport:
    """Five lines through P in a 4-space W cover at most 10 of the 14 points of W - P."""
    lat4 = build_lattice(4)
    W = lat4.full_space()
    with _Timer() as tm:
        arithmetic = 5 * 2
        others = popcount(lat4.down_mask(W, 1)) - 1
        best = 0
        examined = 0
        single = set()
        for P in lat4.ids(1):
            lines = [lat4.point_mask(x) for x in lat4.superspaces(P, 2)]
            pbit = lat4.point_mask(P)
            single |= {popcount(m & ~pbit) for m in lines}
            for star in combinations(lines, 5):
                examined += 1
                u = 0
                for m in star:
                    u |= m
                best = max(best, popcount(u & ~pbit))
    ok = arithmetic < others and best == arithmetic and single == {2}
    details = {"arithmetic": arithmetic, "points_besides_P": others,
               "max_covered": best, "covered_per_line": sorted(single)}
    wit = [] if ok else [details]
    return LemmaReport("alpha_not_in_poor", PASS if ok else FAIL, examined, wit, tm.millis, details)


def _default_w(lat: Lattice) -> SubspaceId:
    return SubspaceId(4, 0)


def verify_disjoint_pair_lemma(lattice: Lattice | None = None,
                               W: SubspaceId | None = None) -> LemmaReport:
    """Each line of S2 meets exactly three lines of S1, for disjoint spreads S1, S2 of W."""
    lat = _lat7(lattice)
    W = W or _default_w(lat)
    fails = []
    with _Timer() as tm:
        spreads = enumerate_line_spreads(W, lat)
        pairs = disjoint_tuples(spreads, 2)
        masks = [[lat.point_mask(m) for m in s.members] for s in spreads]
        for i, j in pairs:
            counts = {sum(1 for a in masks[i] if a & b) for b in masks[j]}
            try:
                cfg = rectangle_config(spreads[i], spreads[j], lat)
                pts = {cfg.q, cfg.qp, cfg.r1, cfg.r2}
                rect_ok = (len(pts) == 4
                           and lat.point_mask(cfg.line) == (1 << cfg.r1) | (1 << cfg.r2) | (1 << cfg.r3))
            except SpreadError:
                rect_ok = False
            if counts != {3} or not rect_ok:
                fails.append({"pair": [i, j], "meet_counts": sorted(counts),
                              "rectangle": rect_ok})
    return LemmaReport("disjoint_pair", FAIL if fails else PASS, len(pairs), fails, tm.millis,
                       {"W": _lit(lat, W), "spreads": len(spreads), "ordered_pairs": len(pairs)})


@dataclass(frozen=True)
class TripleWitness:
    spreads: tuple[int, int, int]
    q: int
    lines: tuple[SubspaceId, SubspaceId, SubspaceId]
    m_q: SubspaceId

    def to_dict(self, lat: Lattice) -> dict:
        return {
            "triple": list(self.spreads),
            "Q": self.q,
            "L_Q1": _lit(lat, self.lines[0]),
            "L_Q2": _lit(lat, self.lines[1]),
            "L_Q3": _lit(lat, self.lines[2]),
            "M_Q": _lit(lat, self.m_q),
        }


def validate_triple_witness(w: TripleWitness, lattice: Lattice | None = None) -> bool:
    """Re-check a witness with the GF(2) primitives only."""
    from .gf2core import contains, span

    lat = _lat7(lattice)
    l1, l2, l3 = (lat.subspace(x) for x in w.lines)
    m = span(l1, l2)
    return (all(contains(x, w.q) for x in (l1, l2, l3))
            and m == lat.subspace(w.m_q) and m.dim == 3
            and not contains(m, l3))


def _triple_chunk(args):
    point_lists, line_of, span_of, triples = args
    out = []
    dims_ok = True
    for i, j, k in triples:
        wit = None
        for q in point_lists:
            a, b, c = line_of[i][q], line_of[j][q], line_of[k][q]
            sm = span_of[a, b]
            if popcount(sm) != 7:
                dims_ok = False
            if wit is None and c & ~sm:
                wit = (q, a, b, c, sm)
        out.append(wit)
    return out, dims_ok


def verify_triple_contradiction(lattice: Lattice | None = None, W: SubspaceId | None = None,
                                workers: int = 1) -> tuple[LemmaReport, list[TripleWitness]]:
    """For every ordered triple of pairwise disjoint spreads of W, some point Q
    has its S3-line outside the plane spanned by its S1- and S2-lines."""
    lat = _lat7(lattice)
    W = W or _default_w(lat)
    with _Timer() as tm:
        spreads = enumerate_line_spreads(W, lat)
        triples = disjoint_tuples(spreads, 3)
        pts = mask_points(lat.point_mask(W))
        line_of = []
        for s in spreads:
            d = {}
            for m in s.members:
                mm = lat.point_mask(m)
                for p in mask_points(mm):
                    d[p] = mm
            line_of.append(d)
        lines = [lat.point_mask(x) for x in lat.subspaces_within(W, 2)]
        span_of = {}
        for a in lines:
            for b in lines:
                m = a | b
                for x in mask_points(a):
                    for y in mask_points(b):
                        if x != y:
                            m |= 1 << (x ^ y)
                span_of[a, b] = m
        if workers > 1 and triples:
            size = -(-len(triples) // workers)
            chunks = [triples[i: i + size] for i in range(0, len(triples), size)]
            with ProcessPoolExecutor(workers) as pool:
                parts = list(pool.map(_triple_chunk,
                                      [(pts, line_of, span_of, c) for c in chunks]))
        else:
            parts = [_triple_chunk((pts, line_of, span_of, triples))]
        results = [w for part, _ in parts for w in part]
        dims_ok = all(ok for _, ok in parts)
    witnesses = []
    exceptions = []
    for t, r in zip(triples, results):
        if r is None:
            exceptions.append(list(t))
            continue
        q, a, b, c, sm = r
        witnesses.append(TripleWitness(
            t, q, (lat.id_of_mask(2, a), lat.id_of_mask(2, b), lat.id_of_mask(2, c)),
            lat.id_of_mask(3, sm)))
    ok = not exceptions and dims_ok
    report = LemmaReport(
        "triple_contradiction", PASS if ok else FAIL, len(triples),
        [w.to_dict(lat) for w in witnesses] if ok else [{"exception": e} for e in exceptions],
        tm.millis,
        {"W": _lit(lat, W), "spreads": len(spreads), "ordered_triples": len(triples),
         "exceptions": len(exceptions), "span_dim_always_3": dims_ok},
    )
    return report, witnesses


# -- certificates --------------------------------------------------------------

@dataclass(frozen=True)
class Certificate:
    """Outcome of a certificate check on a candidate.

    Exactly one of ``violation`` and ``point`` is set, or neither when no
    probed point qualifies (possible only for non-spread inputs under force).
    """

    violation: Optional[SpreadViolation] = None
    point: Optional[int] = None
    witness: tuple = ()

    @property
    def kind(self) -> str:
        if self.violation is not None:
            return "spread-violation"
        return "point" if self.point is not None else "none"


def find_non_alpha_point(u: SubspaceId, f: SpreadCandidate, lattice: Lattice | None = None,
                         force: bool = False) -> Certificate:
    """A point of the 6-space ``u`` that is not an alpha-point of ``f``.

    ``f`` is first checked as a (2,3)-spread; the theorem says nothing about
    other inputs, so a failed check returns the violation.  ``force`` skips
    that check, for synthetic partial configurations.
    """
    lat = _lat7(lattice)
    if u.dim != 6:
        raise ValueError(f"u must be 6-dimensional, got dimension {u.dim}")
    if not force:
        v = verify_spread(f, lat)
        if v is not None:
            return Certificate(violation=v)
    for p in mask_points(lat.point_mask(u)):
        chk = alpha_point_check(p, f, lat, within=u)
        if chk.status == NOT_ALPHA:
            return Certificate(point=p, witness=(chk.witness,))
    return Certificate()


def thomas_check(f: SpreadCandidate, lattice: Lattice | None = None, force: bool = False,
                 points: Sequence[int] | None = None) -> Certificate:
    """A point whose derived line spread is not geometric.

    With ``force`` the spread check is skipped and points whose derived
    family is not itself a line spread of V/P are passed over.
    """
    lat = _lat7(lattice)
    if not force:
        v = verify_spread(f, lat)
        if v is not None:
            return Certificate(violation=v)
    small = build_lattice(6)
    fmask = f.member_mask()
    probe = points if points is not None else range(1, 1 << lat.n)
    for p in probe:
        through = [SubspaceId(3, i) for i in mask_points(lat.up_mask(lat.point_id(p), 3) & fmask)]
        d = derived_spread(through, p, n=lat.n, s=f.s, t=f.t, lattice=lat)
        if verify_spread(d, small) is not None:
            continue
        w = geometric_witness(d, small)
        if w is not None:
            return Certificate(point=p, witness=w)
    return Certificate()


# -- pipeline -------------------------------------------------------------------

def run_theorem2_pipeline(lattice: Lattice | None = None, cache=None,
                          samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED,
                          workers: int = 1) -> list[LemmaReport]:
    """All six checks in proof order.  A bad ``cache`` raises before any check runs."""
    lat = lattice or (get_lattice(7, cache, strict=True) if cache else build_lattice(7))
    reports = [
        verify_conditional_counts(lat),
        verify_hyperplane_triple(lat),
        verify_poor_space_lemma(samples, seed, lat),
        verify_alpha_not_in_poor(lat),
        verify_disjoint_pair_lemma(lat),
        verify_triple_contradiction(lat, workers=workers)[0],
    ]
    for r in reports:
        log.info("%-22s %s  examined=%d  %d ms", r.lemma, r.status, r.examined, r.millis)
    return reports
