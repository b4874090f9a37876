"""Small fixed template graphs whose homomorphism densities drive the model.

A template is a simple graph on at most MAX_TEMPLATE_VERTICES vertices with
a precomputed degree sequence and, for every edge (i, j), the table of
common-neighbor counts d_ij used by the density-increment approximation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

MAX_TEMPLATE_VERTICES = 8


@dataclass(frozen=True)
class TemplateGraph:
    k: int
    edges: tuple[tuple[int, int], ...]  # sorted pairs over range(k)
    name: str = ""
    degrees: tuple[int, ...] = field(init=False)
    d_ij: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.k < 1 or self.k > MAX_TEMPLATE_VERTICES:
            raise ValueError(f"template must have 1..{MAX_TEMPLATE_VERTICES} vertices")
        seen = set()
        for (i, j) in self.edges:
            if i == j:
                raise ValueError("template has a self-loop")
            if not (0 <= i < j < self.k):
                raise ValueError("template edge out of range or not sorted")
            if (i, j) in seen:
                raise ValueError("duplicate template edge")
            seen.add((i, j))
        deg = [0] * self.k
        for (i, j) in self.edges:
            deg[i] += 1
            deg[j] += 1
        object.__setattr__(self, "degrees", tuple(deg))
        adj = self.adjacency_sets()
        table = {}
        for (i, j) in self.edges:
            table[(i, j)] = len(adj[i] & adj[j] - {i, j})
        object.__setattr__(self, "d_ij", table)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def adjacency_sets(self) -> list[set]:
        adj = [set() for _ in range(self.k)]
        for (i, j) in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return adj

    def is_connected(self) -> bool:
        if self.k == 1:
            return True
        adj = self.adjacency_sets()
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for j in adj[i]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == self.k

    def canonical_form(self) -> tuple:
        """Lexicographically least edge tuple over all vertex relabelings."""
        best = None
        for perm in itertools.permutations(range(self.k)):
            relabeled = tuple(sorted(tuple(sorted((perm[i], perm[j]))) for i, j in self.edges))
            if best is None or relabeled < best:
                best = relabeled
        return (self.k, best)

    def common_neighbors(self, i: int, j: int) -> int:
        """d_ij for any vertex pair, not just edges."""
        adj = self.adjacency_sets()
        return len(adj[i] & adj[j] - {i, j})


def _star(k: int) -> TemplateGraph:
    if k < 1:
        raise ValueError("star needs at least one leaf")
    return TemplateGraph(k + 1, tuple((0, i) for i in range(1, k + 1)), name=f"k_star:{k}")


def _cycle(k: int) -> TemplateGraph:
    if k < 3:
        raise ValueError("cycle needs at least 3 vertices")
    edges = tuple(sorted(tuple(sorted((i, (i + 1) % k))) for i in range(k)))
    return TemplateGraph(k, edges, name=f"cycle:{k}")


def _path(k: int) -> TemplateGraph:
    if k < 2:
        raise ValueError("path needs at least 2 vertices")
    return TemplateGraph(k, tuple((i, i + 1) for i in range(k - 1)), name=f"path:{k}")


def make_template(spec) -> TemplateGraph:
    """Resolve a template spec: a builtin name or an explicit edge list.

    Builtin names: "edge", "two_star", "k_star:K", "triangle", "cycle:K",
    "path:K". An explicit spec is a dict {"k": int, "edges": [[i, j], ...]}.
    """
    if isinstance(spec, TemplateGraph):
        return spec
    if isinstance(spec, str):
        if spec == "edge":
            return TemplateGraph(2, ((0, 1),), name="edge")
        if spec == "two_star":
            return _star(2)
        if spec == "triangle":
            return TemplateGraph(3, ((0, 1), (0, 2), (1, 2)), name="triangle")
        if spec.startswith("k_star:"):
            return _star(int(spec.split(":")[1]))
        if spec.startswith("cycle:"):
            return _cycle(int(spec.split(":")[1]))
        if spec.startswith("path:"):
            return _path(int(spec.split(":")[1]))
        raise ValueError(f"unknown template name {spec!r}")
    if isinstance(spec, dict):
        extra = set(spec) - {"k", "edges", "name"}
        if extra:
            raise ValueError(f"unknown template keys {sorted(extra)}")
        edges = tuple(sorted(tuple(sorted(e)) for e in spec["edges"]))
        return TemplateGraph(int(spec["k"]), edges, name=spec.get("name", ""))
    raise TypeError(f"cannot interpret template spec {spec!r}")


EDGE = make_template("edge")
TRIANGLE = make_template("triangle")
TWO_STAR = make_template("two_star")


class TemplateFamily:
    """A list of templates under a vertex-count cap, no duplicate labelings."""

    def __init__(self, members, cap: int | None = None):
        self.members = [make_template(s) for s in members]
        if not self.members:
            raise ValueError("family must be nonempty")
        self.cap = cap if cap is not None else max(t.k for t in self.members)
        seen = set()
        for t in self.members:
            if t.k > self.cap:
                raise ValueError(f"template {t.name or t.edges} exceeds cap {self.cap}")
            key = (t.k, t.edges)
            if key in seen:
                raise ValueError("duplicate template in family")
            seen.add(key)

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


def default_family(cap: int) -> TemplateFamily:
    """All connected simple graphs on <= cap vertices with >= 2 edges, up to
    isomorphism.

    The one-edge graph is excluded; its normalized density increment has an
    undefined exponent and it is never part of the coupling-band check.
    """
    if cap < 3:
        raise ValueError("cap must be at least 3 to admit a two-edge graph")
    if cap > 6:
        raise ValueError("default family enumeration is practical only for cap <= 6")
    members = []
    seen = set()
    for k in range(3, cap + 1):
        pairs = list(itertools.combinations(range(k), 2))
        for mask in range(1 << len(pairs)):
            edges = tuple(pairs[i] for i in range(len(pairs)) if mask >> i & 1)
            if len(edges) < 2:
                continue
            t = TemplateGraph(k, edges)
            if not t.is_connected():
                continue
            canon = t.canonical_form()
            if canon in seen:
                continue
            seen.add(canon)
            members.append(TemplateGraph(k, canon[1], name=f"g{k}e{len(edges)}_{len(members)}"))
    return TemplateFamily(members, cap=cap)
