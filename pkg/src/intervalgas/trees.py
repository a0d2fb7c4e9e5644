"""Labeled trees and forests indexing the expansion terms.

Vertices are 0-based: a tree on n vertices lives on {0, ..., n-1} and has
exactly n-1 edges.  Enumeration and uniform sampling both go through the
Prufer bijection, so the full enumeration yields each of the n^{n-2}
labeled trees exactly once and the sampler is exactly uniform.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceededError, DegreeSequenceError, DisconnectedPairError

TREE_ENUM_CAP = 9
FOREST_ENUM_CAP = 5


def _normalize_edges(n, edges):
    out = []
    for i, j in edges:
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"invalid edge ({i},{j}) on {n} vertices")
        out.append((min(i, j), max(i, j)))
    out.sort()
    if len(set(out)) != len(out):
        raise ValueError("duplicate edges")
    return tuple(out)


def _components(n, edges):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    groups: dict[int, list[int]] = {}
    for v in range(n):
        groups.setdefault(find(v), []).append(v)
    return tuple(tuple(sorted(g)) for g in sorted(groups.values()))


@dataclass(frozen=True)
class Forest:
    """An acyclic graph on {0..n-1}; components may be single vertices."""

    n: int
    edges: tuple[tuple[int, int], ...]
    components: tuple[tuple[int, ...], ...] = field(init=False, compare=False)

    def __post_init__(self):
        edges = _normalize_edges(self.n, self.edges)
        object.__setattr__(self, "edges", edges)
        comps = _components(self.n, edges)
        if len(comps) != self.n - len(edges):
            raise ValueError("edge set contains a cycle")
        object.__setattr__(self, "components", comps)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj


@dataclass(frozen=True)
class Tree(Forest):
    """A connected forest: exactly n-1 edges, no cycles."""

    def __post_init__(self):
        super().__post_init__()
        if len(self.edges) != self.n - 1:
            raise ValueError(f"a tree on {self.n} vertices needs "
                             f"{self.n - 1} edges, got {len(self.edges)}")


def degrees(tree: Forest) -> tuple[int, ...]:
    """Vertex degree sequence; sums to 2(n-1) for a tree."""
    deg = [0] * tree.n
    for i, j in tree.edges:
        deg[i] += 1
        deg[j] += 1
    return tuple(deg)


def prufer_decode(seq: tuple[int, ...], n: int) -> Tree:
    """Decode a Prufer sequence of length n-2 into the labeled tree on [n]."""
    if n == 1:
        return Tree(1, ())
    if n == 2:
        return Tree(2, ((0, 1),))
    if len(seq) != n - 2:
        raise ValueError("sequence length must be n-2")
    deg = [1] * n
    for v in seq:
        deg[v] += 1
    edges = []
    # leaf = smallest label of degree 1 not yet used; ptr scan is O(n log n)
    import heapq

    leaves = [v for v in range(n) if deg[v] == 1]
    heapq.heapify(leaves)
    for v in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, v))
        deg[v] -= 1
        if deg[v] == 1:
            heapq.heappush(leaves, v)
    u = heapq.heappop(leaves)
    w = heapq.heappop(leaves)
    edges.append((u, w))
    return Tree(n, tuple(edges))


def prufer_encode(tree: Tree) -> tuple[int, ...]:
    """Inverse of prufer_decode (used to validate the bijection)."""
    n = tree.n
    if n <= 2:
        return ()
    import heapq

    adj = [set() for _ in range(n)]
    for i, j in tree.edges:
        adj[i].add(j)
        adj[j].add(i)
    leaves = [v for v in range(n) if len(adj[v]) == 1]
    heapq.heapify(leaves)
    seq = []
    for _ in range(n - 2):
        leaf = heapq.heappop(leaves)
        v = adj[leaf].pop()
        adj[v].discard(leaf)
        seq.append(v)
        if len(adj[v]) == 1:
            heapq.heappush(leaves, v)
    return tuple(seq)


def enumerate_trees(n: int):
    """Yield every labeled tree on n vertices exactly once (n <= 9)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > TREE_ENUM_CAP:
        raise CapExceededError(
            f"full tree enumeration capped at n={TREE_ENUM_CAP} "
            f"({n}^{n - 2} trees requested); use sample_tree_uniform")
    if n <= 2:
        yield prufer_decode((), n)
        return
    for seq in itertools.product(range(n), repeat=n - 2):
        yield prufer_decode(seq, n)


def sample_tree_uniform(n: int, rng: np.random.Generator) -> Tree:
    """Uniform labeled tree on n vertices via a uniform Prufer sequence.

    Replacing the sum over trees by sampling carries weight n^{n-2}.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n <= 2:
        return prufer_decode((), n)
    seq = tuple(int(v) for v in rng.integers(0, n, size=n - 2))
    return prufer_decode(seq, n)


def tree_count(n: int) -> int:
    """Cayley count n^{n-2} (1 for n in {1, 2})."""
    return 1 if n <= 2 else n ** (n - 2)


def enumerate_forests(n: int):
    """Yield every forest on n vertices, including the empty one (n <= 5)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > FOREST_ENUM_CAP:
        raise CapExceededError(f"full forest enumeration capped at "
                               f"n={FOREST_ENUM_CAP}")
    pairs = list(itertools.combinations(range(n), 2))
    for r in range(n):
        for subset in itertools.combinations(pairs, r):
            if len(_components(n, subset)) == n - r:  # acyclic
                yield Forest(n, subset)


def count_trees_with_degrees(degree_seq) -> int:
    """Number of labeled trees with the given degree sequence.

    Equals the multinomial (n-2)! / prod (d_i - 1)! when every d_i >= 1 and
    sum d_i = 2n - 2.
    """
    ds = list(degree_seq)
    n = len(ds)
    if n < 2:
        raise DegreeSequenceError("need at least two vertices")
    if any(d < 1 for d in ds) or sum(ds) != 2 * n - 2:
        raise DegreeSequenceError(
            f"degree sequence {tuple(ds)} is not realizable by a tree")
    out = math.factorial(n - 2)
    for d in ds:
        out //= math.factorial(d - 1)
    return out


def path_edges(forest: Forest, i: int, j: int) -> list[tuple[int, int]]:
    """Edges of the unique simple path from i to j, in path order."""
    if i == j:
        raise ValueError("endpoints must differ")
    adj = forest.adjacency()
    prev = {i: None}
    stack = [i]
    while stack:
        v = stack.pop()
        if v == j:
            break
        for w in adj[v]:
            if w not in prev:
                prev[w] = v
                stack.append(w)
    if j not in prev:
        raise DisconnectedPairError(
            f"vertices {i} and {j} lie in different components")
    out = []
    v = j
    while prev[v] is not None:
        u = prev[v]
        out.append((min(u, v), max(u, v)))
        v = u
    out.reverse()
    return out


def pair_paths(forest: Forest) -> list[tuple[int, int, np.ndarray]]:
    """(i, j, edge indices of the connecting path) for connected pairs i < j."""
    edge_index = {e: m for m, e in enumerate(forest.edges)}
    comp_of = {}
    for comp in forest.components:
        for v in comp:
            comp_of[v] = comp
    out = []
    for i in range(forest.n):
        for j in range(i + 1, forest.n):
            if comp_of[i] is comp_of[j]:
                idx = np.array([edge_index[e] for e in path_edges(forest, i, j)],
                               dtype=int)
                out.append((i, j, idx))
    return out


def bfs_order(tree: Tree, root: int = 0) -> tuple[list[int], list[int]]:
    """(order, parent) with parent[root] = -1; children follow parents."""
    adj = tree.adjacency()
    parent = [-2] * tree.n
    parent[root] = -1
    order = [root]
    head = 0
    while head < len(order):
        v = order[head]
        head += 1
        for w in adj[v]:
            if parent[w] == -2:
                parent[w] = v
                order.append(w)
    return order, parent
