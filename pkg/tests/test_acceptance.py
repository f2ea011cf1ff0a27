"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear in the terminal
output even when capture is on).
"""

import json
import random
import time

import pytest

from conftest import DATA
from oracles import naive_spreads_v4, q_binomial
from spreadcheck import lattice as lattice_mod
from spreadcheck.cli import main
from spreadcheck.gf2core import contains, mask_points, span
from spreadcheck.lattice import SubspaceId, build_lattice, canonical_bases
from spreadcheck.proofcheck import (
    find_non_alpha_point,
    thomas_check,
    validate_triple_witness,
    verify_alpha_not_in_poor,
    verify_conditional_counts,
    verify_disjoint_pair_lemma,
    verify_poor_space_lemma,
    verify_triple_contradiction,
)
from spreadcheck.search import SearchConfig, build_instance, solutions_as_spreads, solve
from spreadcheck.spreads import (
    DOUBLY_COVERED,
    UNCOVERED,
    SpreadCandidate,
    candidate_from_subspaces,
    desarguesian_spread,
    enumerate_line_spreads,
    geometric_witness,
    is_geometric,
    parse_spread_text,
    verify_spread,
)
from test_proofcheck import brute_not_alpha, lifted_candidate, near_candidate, plant


@pytest.fixture
def say(capsys):
    def emit(name, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, f"{name}: {detail}"
    return emit


def test_lattice_counts(say):
    canonical_bases.cache_clear()
    saved = dict(lattice_mod._memo)
    lattice_mod._memo.clear()
    try:
        t0 = time.perf_counter()
        lat7 = build_lattice(7)
        secs = time.perf_counter() - t0
        ok = all(build_lattice(n).count(k) == q_binomial(n, k)
                 for n in range(1, 8) for k in range(n + 1))
    finally:
        lattice_mod._memo.clear()
        lattice_mod._memo.update(saved)
    ok = ok and lat7.count(2) == 2667 and lat7.count(3) == 11811 and secs < 30
    say("lattice counts", ok, f"all n<=7 match Gaussian binomials, 2667 lines, "
        f"11811 planes, V(7,2) built in {secs:.1f} s")


def test_pg32_spreads(say, lat4):
    spreads = enumerate_line_spreads(lattice=lat4)
    t0 = time.perf_counter()
    oracle = set(naive_spreads_v4())
    osecs = time.perf_counter() - t0
    got = {frozenset(frozenset(lat4.subspace(m).points()) for m in s.members) for s in spreads}
    partitions = all(verify_spread(s, lat4) is None
                     and sorted(p for m in s.members for p in lat4.subspace(m).points())
                     == list(range(1, 16)) for s in spreads)
    ok = len(spreads) == 56 and got == oracle and partitions and osecs < 5
    say("PG(3,2) spreads", ok, f"{len(spreads)} spreads, oracle agrees, oracle {osecs:.2f} s")


def test_counting_facts(say, lat7):
    r = verify_conditional_counts(lat7)
    v = r.details["values"]
    quoted = {"members_per_point": 21, "members_per_point_in_U": 5, "members_in_U": 45,
              "members_in_5space": 5, "total_members": 381}
    exact = all(isinstance(v[k], int) for k in quoted)
    ok = r.passed and exact and all(v[k] == x for k, x in quoted.items())
    say("counting facts", ok, ", ".join(f"{k}={v[k]}" for k in quoted))


def test_poor_space(say, lat7):
    t0 = time.perf_counter()
    r = verify_poor_space_lemma(100_000, lattice=lat7)
    secs = time.perf_counter() - t0
    d = r.details
    ok = (r.passed and d["hyperplanes_per_plane"] == 3 and d["samples"] >= 100_000
          and d["min_poor"] >= 16 and d["equality_cases"] >= 1 and secs < 60)
    say("poor-space lemma", ok, f"min {d['min_poor']} over {d['samples']} samples, "
        f"{d['equality_cases']} equality cases, {secs:.1f} s")


def test_alpha_exclusion(say):
    r = verify_alpha_not_in_poor()
    mx = r.details["max_covered"]
    say("alpha exclusion", r.passed and mx == 10 and mx < 14,
        f"max covered {mx} of 14 over {r.examined} stars")


def test_disjoint_pairs(say, lat7, golden):
    t0 = time.perf_counter()
    r = verify_disjoint_pair_lemma(lat7)
    secs = time.perf_counter() - t0
    ok = r.passed and r.examined == golden["pg32_ordered_disjoint_pairs"] and secs < 60
    say("disjoint-pair lemma", ok, f"{r.examined} ordered pairs, {secs:.2f} s")


def test_triple_contradiction(say, lat7, golden):
    t0 = time.perf_counter()
    r, wits = verify_triple_contradiction(lat7)
    secs = time.perf_counter() - t0
    valid = all(validate_triple_witness(w, lat7) for w in wits)
    ok = (r.passed and r.details["exceptions"] == 0 and valid
          and r.examined == golden["pg32_ordered_disjoint_triples"] and secs < 300)
    say("triple contradiction", ok, f"{r.examined} triples, "
        f"{r.details['exceptions']} exceptions, witnesses re-validated, {secs:.1f} s")


def test_geometric_predicate(say, lat6):
    d = desarguesian_spread(6, lat6)
    subs = parse_spread_text((DATA / "nongeometric_v6.txt").read_text(), 6)
    ng = candidate_from_subspaces(subs, 1, lat6)
    w = geometric_witness(ng, lat6)
    valid = False
    if w is not None:
        s1, s2, s3 = (lat6.subspace(x) for x in w)
        sp = span(s1, s2)
        valid = any(contains(sp, p) for p in s3.points()) and not contains(sp, s3)
    ok = is_geometric(d, lat6) and verify_spread(ng, lat6) is None and valid
    say("geometric predicate", ok, "Desarguesian V(6,2) geometric, exemplar not, witness valid")


def _cli_bytes(tmp_path, name, *argv):
    out = tmp_path / name
    code = main([str(a) for a in argv] + ["--no-timing", "--json", str(out)])
    return code, out.read_bytes()


def test_exact_cover_engine(say, lat4, lat6, tmp_path):
    inst4 = build_instance(4, 1, 2, lat4)
    sols4, _ = solve(inst4)
    got = {frozenset(frozenset(lat4.subspace(m).points()) for m in c.members)
           for c in solutions_as_spreads(inst4, sols4)}
    ok4 = len(sols4) == 56 and got == set(naive_spreads_v4())
    off = SearchConfig(point_degree=False, hyperplane_45=False, fivespace_5=False)
    same4 = solve(inst4, off)[0] == sols4

    inst6 = build_instance(6, 1, 3, lat6)
    t0 = time.perf_counter()
    sols6, _ = solve(inst6, SearchConfig(limit=1))
    secs = time.perf_counter() - t0
    (c,) = solutions_as_spreads(inst6, sols6)
    ok6 = len(c) == 9 and verify_spread(c, lat6) is None and secs < 1
    same6 = solve(inst6, SearchConfig(limit=25))[0] == solve(
        inst6, SearchConfig(limit=25, point_degree=False, hyperplane_45=False,
                            fivespace_5=False))[0]

    runs = [_cli_bytes(tmp_path, f"r{i}.json", "search", 4, 1, 2) for i in range(2)]
    runs6 = [_cli_bytes(tmp_path, f"s{i}.json", "search", 6, 1, 3, "--limit", 3) for i in range(2)]
    ident = runs[0] == runs[1] and runs6[0] == runs6[1] and runs[0][0] == 0
    ok = ok4 and ok6 and same4 and same6 and ident
    say("exact-cover engine", ok, f"56 on (4,1,2) matches oracle, 9-member (1,3)-spread in "
        f"{secs * 1000:.0f} ms, pruning on/off identical, repeated runs byte-identical")


def _expected(masks_by_member, s_masks):
    """Expected verdict from coverage counts in canonical order of the s-subspaces."""
    for sid, sm in s_masks:
        k = sum(1 for m in masks_by_member if sm & ~m == 0)
        if k != 1:
            return (UNCOVERED if k == 0 else DOUBLY_COVERED), sid
    return None


def _all_mutations(lat, base, s):
    t = base.t
    s_masks = [(x, lat.point_mask(x)) for x in lat.ids(s)]
    pool = lat.ids(t)
    checked = wrong = 0
    for i, m in enumerate(base.members):
        rest = list(base.members[:i] + base.members[i + 1:])
        variants = [rest, list(base.members) + [m]]
        variants += [rest + [x] for x in pool if x != m]
        for members in variants:
            c = base.replace_members(members)
            v = verify_spread(c, lat)
            exp = _expected([lat.point_mask(x) for x in c.members], s_masks)
            checked += 1
            if v is None or exp is None or (v.kind, v.witness[0]) != exp:
                wrong += 1
    return checked, wrong


def test_certificate_checkers(say, lat4, lat6, lat7):
    checked = wrong = 0
    for base in enumerate_line_spreads(lattice=lat4) + [desarguesian_spread(6, lat6)]:
        lat = lat4 if base.n == 4 else lat6
        a, b = _all_mutations(lat, base, 1)
        checked, wrong = checked + a, wrong + b
    inst6 = build_instance(6, 1, 3, lat6)
    (c613,) = solutions_as_spreads(inst6, solve(inst6, SearchConfig(limit=1))[0])
    a, b = _all_mutations(lat6, c613, 1)
    checked, wrong = checked + a, wrong + b

    rng = random.Random(20)
    near_ok = True
    for k in range(4):
        c = near_candidate(lat7, rng)
        if k % 2:
            c = c.replace_members(c.members[1:] + (c.members[1],))
        for cert in (find_non_alpha_point(SubspaceId(6, k), c, lat7), thomas_check(c, lat7)):
            near_ok &= cert.kind == "spread-violation"

    p, U, T, f = plant(lat7)
    cert = find_non_alpha_point(U, f, lat7, force=True)
    plant_ok = (cert.point == p and brute_not_alpha(lat7, p, f.members, cert.witness[0])
                == cert.witness[0])
    subs = parse_spread_text((DATA / "nongeometric_v6.txt").read_text(), 6)
    lifted = lifted_candidate(candidate_from_subspaces(subs, 1, lat6), 0b1000000, lat7)
    th = thomas_check(lifted, lat7, force=True)
    plant_ok &= th.point == 0b1000000 and len(th.witness) == 3

    ok = wrong == 0 and near_ok and plant_ok
    say("certificate checkers", ok, f"{checked} single-member mutations, {wrong} misjudged; "
        f"near-candidates rejected; planted witnesses recovered")


def test_bounded_open_instance(say, lat7, tmp_path):
    a = _cli_bytes(tmp_path, "a.json", "search", 7, 2, 3, "--nodes", "1e6")
    b = _cli_bytes(tmp_path, "b.json", "search", 7, 2, 3, "--nodes", "1e6")
    rep = json.loads(a[1])
    stats = rep["result"]["stats"]
    ok = (a == b and a[0] == 0 and rep["result"]["solutions"] == []
          and stats["nodes"] == 1_000_000 and stats["solutions"] == 0)
    say("bounded open-instance run", ok, f"{stats['nodes']} nodes, max depth "
        f"{stats['maxDepth']}, prunes {stats['prunes']}, deterministic")
