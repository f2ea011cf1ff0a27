import random

import pytest

from oracles import q_binomial, subspaces_by_closure
from spreadcheck.gf2core import contains, gaussian_binomial, mask_points, rref_canonicalize
from spreadcheck.lattice import (
    LatticeCacheError,
    LatticeError,
    SubspaceId,
    build_lattice,
    get_lattice,
    load_lattice,
    save_lattice,
)


@pytest.mark.parametrize("n", range(1, 8))
def test_table_sizes(n):
    lat = build_lattice(n)
    assert lat.counts() == [q_binomial(n, k) for k in range(n + 1)]


def test_examples(lat4, lat7):
    assert lat4.counts() == [1, 15, 35, 15, 1]
    assert lat7.count(3) == 11811
    assert build_lattice(1).counts() == [1, 1]


@pytest.mark.parametrize("n", [0, 8, -1])
def test_bad_n(n):
    if n == 0:
        assert build_lattice(0).counts() == [1]
        with pytest.raises(LatticeError):
            get_lattice(0)
    else:
        with pytest.raises(LatticeError):
            build_lattice(n)


@pytest.mark.parametrize("n,k", [(n, k) for n in range(1, 6) for k in range(1, n)] + [(6, 2), (6, 3)])
def test_enumeration_matches_closure_oracle(n, k):
    lat = build_lattice(n)
    got = {frozenset(mask_points(m)) for m in lat.masks[k]}
    assert got == subspaces_by_closure(n, k)


def test_canonical_order(lat5):
    for k in range(6):
        bases = [s.basis for s in lat5.tables[k]]
        assert bases == sorted(bases)
        assert all(rref_canonicalize(b, 5).basis == b for b in bases)


def test_superspaces_examples(lat7, lat5):
    # a plane of a 5-space lies in exactly 3 of its hyperplanes
    T = lat5.full_space()
    plane = lat5.ids(3)[17]
    assert len(lat5.superspaces(plane, 4)) == 3
    W = SubspaceId(4, 123)
    U = lat7.superspaces(W, 6)[2]
    between = [t for t in lat7.superspaces(W, 5) if lat7.contains(U, t)]
    assert len(between) == 3
    union = 0
    for t in between:
        union |= lat7.point_mask(t)
    assert union == lat7.point_mask(U)
    assert lat7.superspaces(SubspaceId(3, 5), 7) == [lat7.full_space()]
    assert T == SubspaceId(5, 0)


def test_subspaces_within_examples(lat7):
    assert len(lat7.subspaces_within(SubspaceId(4, 77), 2)) == 35
    assert len(lat7.subspaces_within(lat7.full_space(), 2)) == 2667
    assert len(lat7.subspaces_within(SubspaceId(3, 4000), 2)) == 7


def test_dimension_order_errors(lat4):
    with pytest.raises(LatticeError):
        lat4.superspaces(SubspaceId(3, 0), 2)
    with pytest.raises(LatticeError):
        lat4.subspaces_within(SubspaceId(2, 0), 3)


@pytest.mark.parametrize("n", range(1, 6))
def test_up_down_duality_exhaustive(n):
    lat = build_lattice(n)
    for k in range(n + 1):
        for k2 in range(k, n + 1):
            for a in lat.ids(k):
                ups = set(lat.superspaces(a, k2))
                assert len(ups) == gaussian_binomial(n - k, k2 - k)
                for b in lat.ids(k2):
                    assert (b in ups) == (a in lat.subspaces_within(b, k)) == \
                        contains(lat.subspace(b), lat.subspace(a))


@pytest.mark.parametrize("n", [6, 7])
def test_up_down_duality_sampled(n):
    lat = build_lattice(n)
    rng = random.Random(n)
    for _ in range(200):
        k = rng.randrange(0, n)
        k2 = rng.randrange(k + 1, n + 1)
        a = SubspaceId(k, rng.randrange(lat.count(k)))
        ups = lat.superspaces(a, k2)
        assert len(ups) == gaussian_binomial(n - k, k2 - k)
        b = rng.choice(ups)
        assert a in lat.subspaces_within(b, k)
        c = SubspaceId(k2, rng.randrange(lat.count(k2)))
        assert (c in ups) == contains(lat.subspace(c), lat.subspace(a))


def test_relative_lattice(lat7):
    U = SubspaceId(6, 40)
    rel = lat7.relative(U)
    assert rel.count(2) == 651 and rel.count(3) == 1395
    lines = rel.table(2)
    assert len(set(lines)) == 651 and all(lat7.contains(U, x) for x in lines)
    W = SubspaceId(4, 999)
    assert lat7.relative(W).count(2) == 35
    L = SubspaceId(2, 3)
    assert lat7.relative(L).count(2) == 1
    # the view is an isomorphism: incidence profile matches build_lattice(6)
    base = build_lattice(6)
    rng = random.Random(1)
    for _ in range(50):
        r = SubspaceId(3, rng.randrange(base.count(3)))
        parent = rel.to_parent(r)
        assert rel.from_parent(parent) == r
        ups_rel = {rel.to_parent(x) for x in base.superspaces(r, 5)}
        ups_par = {x for x in lat7.superspaces(parent, 5) if lat7.contains(U, x)}
        assert ups_rel == ups_par


def test_cache_roundtrip(tmp_path, lat5):
    path = save_lattice(lat5, tmp_path / "l5.gflt")
    loaded = load_lattice(path)
    assert loaded.counts() == lat5.counts()
    assert [s.basis for s in loaded.tables[2]] == [s.basis for s in lat5.tables[2]]
    assert loaded._down[(2, 3)] == lat5._down[(2, 3)]


def test_cache_rejects_corruption(tmp_path, lat4):
    path = save_lattice(lat4, tmp_path / "l4.gflt")
    raw = bytearray(path.read_bytes())
    raw[20] ^= 1
    path.write_bytes(bytes(raw))
    with pytest.raises(LatticeCacheError, match="checksum"):
        load_lattice(path)
    with pytest.raises(LatticeCacheError):
        get_lattice(4, path, strict=True)
    lat = get_lattice(4, path, strict=False)
    assert lat.counts() == [1, 15, 35, 15, 1]
    assert load_lattice(path).counts() == lat.counts()


def test_cache_rejects_version(tmp_path, lat4):
    import hashlib
    path = save_lattice(lat4, tmp_path / "l4.gflt")
    raw = bytearray(path.read_bytes()[:-8])
    raw[4] = 9
    path.write_bytes(bytes(raw) + hashlib.blake2b(bytes(raw), digest_size=8).digest())
    with pytest.raises(LatticeCacheError, match="version"):
        load_lattice(path)


def test_cache_rejects_garbage(tmp_path):
    path = tmp_path / "x.gflt"
    path.write_bytes(b"not a lattice")
    with pytest.raises(LatticeCacheError):
        load_lattice(path)
