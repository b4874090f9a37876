import numpy as np
import pytest

from ergmkit.graph import (
    Graph,
    SnapshotError,
    complete_graph,
    dominates,
    edge_index,
    edge_pair,
    from_edges,
    n_pairs,
    new_empty,
    sample_gnp,
    snapshot_read,
    snapshot_write,
)

from conftest import rng_for


def test_new_empty():
    g = new_empty(3)
    assert g.m == 0 and all(g.degree(u) == 0 for u in range(3))
    assert new_empty(1).n == 1
    with pytest.raises(ValueError):
        new_empty(0)


def test_edge_index_roundtrip():
    n = 40
    seen = set()
    for v in range(n):
        for u in range(v):
            idx = edge_index(u, v)
            assert edge_pair(idx) == (u, v)
            seen.add(idx)
    assert seen == set(range(n_pairs(n)))
    assert edge_index(5, 2) == edge_index(2, 5)
    with pytest.raises(ValueError):
        edge_index(3, 3)


def test_gnp_extremes():
    rng = rng_for(1)
    assert sample_gnp(12, 0.0, rng).m == 0
    g = sample_gnp(12, 1.0, rng)
    assert g.m == n_pairs(12)
    assert g == complete_graph(12)
    with pytest.raises(ValueError):
        sample_gnp(5, 1.5, rng)


def test_gnp_moments_small():
    rng = rng_for(2)
    reps = 1000
    ms = np.array([sample_gnp(100, 0.5, rng).m for _ in range(reps)])
    sd = np.sqrt(4950 * 0.25)
    assert abs(ms.mean() - 2475.0) <= 3.0 * sd / np.sqrt(reps)


def test_flip_involution_and_locality():
    rng = rng_for(3)
    g = sample_gnp(15, 0.4, rng)
    before = g.copy()
    degv = [g.degree(w) for w in range(15)]
    g.flip_edge(2, 9)
    assert g != before
    for w in range(15):
        if w not in (2, 9):
            assert g.degree(w) == degv[w]
    g.flip_edge(2, 9)
    assert g == before
    g.check()

    e = new_empty(4)
    e.flip_edge(0, 1)
    assert e.m == 1
    with pytest.raises(ValueError):
        e.flip_edge(2, 2)


def test_codegree_cases():
    path = from_edges(3, [(0, 2), (1, 2)])  # u - w - v
    assert path.codegree(0, 1) == 1
    k = complete_graph(7)
    for u in range(7):
        for v in range(u + 1, 7):
            assert k.codegree(u, v) == 5


def test_codegree_bruteforce():
    rng = rng_for(4)
    g = sample_gnp(50, 0.3, rng)
    dense = g.to_dense()
    for _ in range(300):
        u, v = rng.choice(50, size=2, replace=False)
        want = int(np.dot(dense[u].astype(int), dense[v].astype(int)))
        assert g.codegree(int(u), int(v)) == want


def test_dominates_basic():
    rng = rng_for(5)
    x = sample_gnp(10, 0.4, rng)
    assert dominates(new_empty(10), x)
    assert dominates(x, x)
    y = x.copy()
    added = False
    for v in range(10):
        for u in range(v):
            if not y.has_edge(u, v):
                y.flip_edge(u, v)
                added = True
                break
        if added:
            break
    assert dominates(x, y) and not dominates(y, x)
    with pytest.raises(ValueError):
        dominates(x, new_empty(9))


def test_dominates_partial_order():
    rng = rng_for(6)
    for _ in range(200):
        a = sample_gnp(8, float(rng.random()), rng)
        b = sample_gnp(8, float(rng.random()), rng)
        c = sample_gnp(8, float(rng.random()), rng)
        if dominates(a, b) and dominates(b, a):
            assert a == b  # antisymmetry
        if dominates(a, b) and dominates(b, c):
            assert dominates(a, c)  # transitivity


def test_snapshot_roundtrip():
    rng = rng_for(7)
    for _ in range(100):
        n = int(rng.integers(1, 33))
        g = sample_gnp(n, float(rng.random()), rng)
        assert snapshot_read(snapshot_write(g)) == g


def test_snapshot_format_layout():
    g = new_empty(5)
    blob = snapshot_write(g)
    assert blob[:4] == b"ERGX" and blob[4] == 1
    assert int.from_bytes(blob[5:9], "little") == 5
    assert blob[9:] == b"\x00\x00"  # ceil(10/8) = 2 zero payload bytes


def test_snapshot_errors():
    g = sample_gnp(6, 0.5, rng_for(8))
    blob = snapshot_write(g)
    with pytest.raises(SnapshotError):
        snapshot_read(blob[:8])  # truncated header
    with pytest.raises(SnapshotError):
        snapshot_read(b"NOPE" + blob[4:])
    with pytest.raises(SnapshotError):
        snapshot_read(blob + b"\x00")  # trailing garbage
    bad_n = blob[:5] + (99).to_bytes(4, "little") + blob[9:]
    with pytest.raises(SnapshotError):
        snapshot_read(bad_n)  # length field inconsistent with payload
    # nonzero trailing bits
    g7 = new_empty(7)  # 21 pairs -> 3 trailing bits in the last byte
    blob7 = bytearray(snapshot_write(g7))
    blob7[-1] |= 0x80
    with pytest.raises(SnapshotError):
        snapshot_read(bytes(blob7))


def test_resync_matches_flip_path():
    rng = rng_for(9)
    g = sample_gnp(20, 0.3, rng)
    h = g.copy()
    h.resync_from_rows()
    assert h == g and h.m == g.m
    assert np.array_equal(h.tri, g.tri)


def test_vertex_cap():
    with pytest.raises(ValueError):
        Graph((1 << 16) + 1)
