"""Dense simple graphs on labeled vertices, bit-packed for fast edge flips.

Adjacency is stored redundantly: as n bit-rows of 64-bit words (codegree is
a word-wise AND plus popcount, the hot query for triangle deltas) and as a
linear triangular bit array (the snapshot payload). Both are updated on
every flip.

Unordered pairs carry the canonical linear index e(u, v) = v(v-1)/2 + u for
u < v, so pair 0 is (0,1), pair 1 is (0,2), and so on.
"""

from __future__ import annotations

import math

import numpy as np

MAX_VERTICES = 1 << 16  # snapshot format stores n in 4 bytes; cap keeps files sane

_MAGIC = b"ERGX"
_VERSION = 1


def edge_index(u: int, v: int) -> int:
    """Linear index of the unordered pair {u, v}."""
    if u == v:
        raise ValueError("self-loops have no edge index")
    if u > v:
        u, v = v, u
    return v * (v - 1) // 2 + u


def edge_pair(idx: int) -> tuple[int, int]:
    """Inverse of edge_index; returns (u, v) with u < v."""
    if idx < 0:
        raise ValueError("edge index must be nonnegative")
    v = int((1 + math.isqrt(1 + 8 * idx)) // 2)
    while v * (v - 1) // 2 > idx:
        v -= 1
    while (v + 1) * v // 2 <= idx:
        v += 1
    u = idx - v * (v - 1) // 2
    return u, v


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


class Graph:
    """Simple undirected graph on n labeled vertices.

    Single-owner mutable: flip_edge mutates in place. Never mutate from two
    threads at once; snapshots and copies may be shared freely.
    """

    __slots__ = ("n", "nwords", "rows", "tri", "m")

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("vertex count must be positive")
        if n > MAX_VERTICES:
            raise ValueError(f"vertex count exceeds format cap {MAX_VERTICES}")
        self.n = n
        self.nwords = (n + 63) // 64
        self.rows = np.zeros((n, self.nwords), dtype=np.uint64)
        self.tri = np.zeros((n_pairs(n) + 7) // 8, dtype=np.uint8)
        self.m = 0

    # -- queries ---------------------------------------------------------

    def has_edge(self, u: int, v: int) -> bool:
        if u == v:
            return False
        return bool((self.rows[u, v >> 6] >> np.uint64(v & 63)) & np.uint64(1))

    def degree(self, u: int) -> int:
        return int(np.bitwise_count(self.rows[u]).sum())

    def degrees(self) -> np.ndarray:
        return np.bitwise_count(self.rows).sum(axis=1).astype(np.int64)

    def codegree(self, u: int, v: int) -> int:
        """Number of common neighbors of u and v (row AND + popcount)."""
        if u == v:
            raise ValueError("codegree needs two distinct vertices")
        return int(np.bitwise_count(self.rows[u] & self.rows[v]).sum())

    def density(self) -> float:
        return 2.0 * self.m / (self.n * self.n)

    def to_dense(self) -> np.ndarray:
        """Full symmetric 0/1 adjacency matrix (uint8), zero diagonal."""
        n = self.n
        bits = np.unpackbits(self.rows.view(np.uint8), bitorder="little", axis=1)
        return np.ascontiguousarray(bits[:, :n])

    # -- mutation --------------------------------------------------------

    def flip_edge(self, u: int, v: int) -> None:
        """Toggle the edge {u, v}; updates rows, triangular bits and m."""
        if u == v:
            raise ValueError("cannot flip a self-loop")
        one = np.uint64(1)
        bit_v = one << np.uint64(v & 63)
        was = bool(self.rows[u, v >> 6] & bit_v)
        self.rows[u, v >> 6] ^= bit_v
        self.rows[v, u >> 6] ^= one << np.uint64(u & 63)
        idx = edge_index(u, v)
        self.tri[idx >> 3] ^= np.uint8(1 << (idx & 7))
        self.m += -1 if was else 1

    def set_edge(self, u: int, v: int, bit: int) -> None:
        if self.has_edge(u, v) != bool(bit):
            self.flip_edge(u, v)

    def resync_from_rows(self) -> None:
        """Rebuild the triangular array and m from the bit-rows.

        Hot-loop kernels mutate rows directly and call this afterwards.
        """
        dense = self.to_dense()
        bits = dense[np.tril_indices(self.n, -1)]
        self.tri = np.packbits(bits, bitorder="little")
        self.m = int(bits.sum())

    def copy(self) -> "Graph":
        g = Graph.__new__(Graph)
        g.n = self.n
        g.nwords = self.nwords
        g.rows = self.rows.copy()
        g.tri = self.tri.copy()
        g.m = self.m
        return g

    # -- comparisons -----------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.rows, other.rows))

    def __hash__(self):
        raise TypeError("Graph is mutable and unhashable")

    def check(self) -> None:
        """Validate structural invariants (debug aid, O(n^2))."""
        dense = self.to_dense()
        assert np.array_equal(dense, dense.T), "adjacency not symmetric"
        assert not dense.diagonal().any(), "self-loop bit set"
        assert dense.sum() == 2 * self.m, "edge count out of sync"
        bits = np.unpackbits(self.tri, count=n_pairs(self.n), bitorder="little")
        assert np.array_equal(bits, dense[np.tril_indices(self.n, -1)]), (
            "triangular bits out of sync with rows"
        )


def new_empty(n: int) -> Graph:
    """Graph with no edges."""
    return Graph(n)


def from_dense(dense: np.ndarray) -> Graph:
    """Build a Graph from a symmetric 0/1 matrix (diagonal ignored)."""
    n = dense.shape[0]
    g = Graph(n)
    dense = (np.asarray(dense) != 0).astype(np.uint8)
    np.fill_diagonal(dense, 0)
    if not np.array_equal(dense, dense.T):
        raise ValueError("adjacency matrix must be symmetric")
    packed = np.packbits(dense, axis=1, bitorder="little")
    padded = np.zeros((n, g.nwords * 8), dtype=np.uint8)
    padded[:, : packed.shape[1]] = packed
    g.rows = padded.view(np.uint64).reshape(n, g.nwords)
    g.resync_from_rows()
    return g


def from_edges(n: int, edges) -> Graph:
    g = Graph(n)
    for u, v in edges:
        if not g.has_edge(u, v):
            g.flip_edge(u, v)
    return g


def complete_graph(n: int) -> Graph:
    dense = np.ones((n, n), dtype=np.uint8)
    np.fill_diagonal(dense, 0)
    return from_dense(dense)


def sample_gnp(n: int, p: float, rng: np.random.Generator) -> Graph:
    """Erdos-Renyi sample: each unordered pair present independently w.p. p.

    Draws exactly n(n-1)/2 uniforms in linear-index order, so the sample is
    reproducible for a given generator state.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    bits = (rng.random(n_pairs(n)) < p).astype(np.uint8)
    dense = np.zeros((n, n), dtype=np.uint8)
    dense[np.tril_indices(n, -1)] = bits
    dense |= dense.T
    return from_dense(dense)


def dominates(x: Graph, y: Graph) -> bool:
    """True iff every edge of x is an edge of y (x is edgewise below y)."""
    if x.n != y.n:
        raise ValueError("graphs must have the same vertex count")
    return not bool(np.any(x.rows & ~y.rows))


# -- snapshot format ------------------------------------------------------
#
# magic "ERGX", version byte 1, n as 4-byte little-endian, then
# ceil(n(n-1)/2 / 8) payload bytes. Bit i of the payload (LSB-first within
# each byte) is the edge with linear index i; trailing bits are zero.


class SnapshotError(ValueError):
    pass


def snapshot_write(g: Graph) -> bytes:
    header = _MAGIC + bytes([_VERSION]) + int(g.n).to_bytes(4, "little")
    return header + g.tri.tobytes()


def snapshot_read(data: bytes) -> Graph:
    if len(data) < 9:
        raise SnapshotError("snapshot shorter than header")
    if data[:4] != _MAGIC:
        raise SnapshotError("bad magic; not a graph snapshot")
    if data[4] != _VERSION:
        raise SnapshotError(f"unsupported snapshot version {data[4]}")
    n = int.from_bytes(data[5:9], "little")
    if n < 1 or n > MAX_VERTICES:
        raise SnapshotError(f"vertex count {n} out of range")
    npairs = n_pairs(n)
    payload_len = (npairs + 7) // 8
    payload = data[9:]
    if len(payload) != payload_len:
        raise SnapshotError(
            f"payload length {len(payload)} does not match n={n} (want {payload_len})"
        )
    raw = np.frombuffer(payload, dtype=np.uint8)
    if npairs % 8:
        tail = raw[-1] >> (npairs % 8)
        if tail:
            raise SnapshotError("nonzero trailing bits in payload")
    bits = np.unpackbits(raw, count=npairs, bitorder="little")
    dense = np.zeros((n, n), dtype=np.uint8)
    dense[np.tril_indices(n, -1)] = bits
    dense |= dense.T
    return from_dense(dense)
