"""Recursive trees, uniform-attachment growth and isomorphism classes.

A :class:`GrowthTree` stores a tree as a parent array in arrival order:
vertex 0 is the first seed vertex and ``parent[i] < i`` for every later
vertex. The first ``seed_size`` vertices form the seed. This representation
makes a growth step O(1) and subtree sizes a single reverse sweep.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from seedtrace import kernels


class TreeFormatError(ValueError):
    """Malformed tree or edge-list file; ``line`` is 1-based."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RngStream:
    """Reproducible random stream identified by ``(master_seed, stream_index)``.

    Stream derivation: ``SeedSequence(master_seed, spawn_key=(stream_index,))``
    feeding a PCG64 bit generator. Two streams built from the same pair yield
    identical draw sequences; distinct indices give statistically independent
    streams, so workers never share state.
    """

    def __init__(self, master_seed: int, stream_index: int = 0):
        if master_seed < 0 or stream_index < 0:
            raise ValueError("master_seed and stream_index must be nonnegative")
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index})"


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return RngStream(0 if rng is None else int(rng)).generator
    raise TypeError(f"cannot use {type(rng).__name__} as a random stream")


@dataclass(frozen=True)
class EdgeSplit:
    """Sizes of the two components left after cutting the edge above ``edge``."""

    edge: int
    size_child_side: int
    size_parent_side: int


class GrowthTree:
    """Immutable recursive tree with a distinguished seed prefix."""

    __slots__ = ("parent", "seed_size")

    def __init__(self, parent: Sequence[int], seed_size: int | None = None):
        par = np.array(parent, dtype=np.int64).reshape(-1)
        n = par.shape[0]
        if n < 2:
            raise ValueError("a GrowthTree needs at least 2 vertices")
        par[0] = -1
        idx = np.arange(1, n)
        if np.any(par[1:] < 0) or np.any(par[1:] >= idx):
            raise ValueError("parent[i] must satisfy 0 <= parent[i] < i")
        if seed_size is None:
            seed_size = n
        if not 2 <= seed_size <= n:
            raise ValueError(f"seed_size must lie in [2, {n}], got {seed_size}")
        par.setflags(write=False)
        object.__setattr__(self, "parent", par)
        object.__setattr__(self, "seed_size", int(seed_size))

    def __setattr__(self, name, value):
        raise AttributeError("GrowthTree is immutable")

    @property
    def n(self) -> int:
        return int(self.parent.shape[0])

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, GrowthTree):
            return NotImplemented
        return self.seed_size == other.seed_size and np.array_equal(self.parent, other.parent)

    def __hash__(self):
        return hash((self.seed_size, self.parent.tobytes()))

    def __repr__(self):
        return f"GrowthTree(n={self.n}, seed_size={self.seed_size}, parent={self.parent.tolist()})"

    def edges(self) -> list[tuple[int, int]]:
        """Edges as ``(parent, child)`` pairs, ordered by child."""
        return [(int(self.parent[i]), i) for i in range(1, self.n)]

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for p, c in self.edges():
            adj[c].append(p)
            adj[p].append(c)
        return adj

    def seed(self) -> "GrowthTree":
        return GrowthTree(self.parent[: self.seed_size], self.seed_size)

    def prefix(self, n: int) -> "GrowthTree":
        """The tree as it stood when it had ``n`` vertices."""
        if not self.seed_size <= n <= self.n:
            raise ValueError(f"prefix size {n} outside [{self.seed_size}, {self.n}]")
        return GrowthTree(self.parent[:n], self.seed_size)

    def attach(self, v: int) -> "GrowthTree":
        """Child tree obtained by attaching one new vertex to ``v``."""
        if not 0 <= v < self.n:
            raise ValueError(f"vertex {v} not in tree")
        return GrowthTree(np.append(self.parent, v), self.seed_size)

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]], n: int | None = None) -> "GrowthTree":
        """Root an arbitrary edge list at vertex 0 and relabel in BFS order.

        The whole tree becomes the seed.
        """
        edges = [(int(u), int(v)) for u, v in edges]
        if n is None:
            n = 1 + max((max(u, v) for u, v in edges), default=0)
        if len(edges) != n - 1:
            raise ValueError(f"a tree on {n} vertices has {n - 1} edges, got {len(edges)}")
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n) or u == v:
                raise ValueError(f"bad edge ({u}, {v})")
            adj[u].append(v)
            adj[v].append(u)
        order, par = _bfs_order(adj, 0)
        if len(order) != n:
            raise ValueError("edge list is not connected")
        new = {old: i for i, old in enumerate(order)}
        parent = [-1] + [new[par[old]] for old in order[1:]]
        return cls(parent)


def _bfs_order(adj, root):
    par = {root: -1}
    order = [root]
    q = deque([root])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if v not in par:
                par[v] = u
                order.append(v)
                q.append(v)
    return order, par


def path(n: int) -> GrowthTree:
    """Path on ``n`` vertices."""
    return GrowthTree([-1] + list(range(n - 1)))


def star(n: int) -> GrowthTree:
    """Star on ``n`` vertices with vertex 0 at the centre."""
    return GrowthTree([-1] + [0] * (n - 1))


# --------------------------------------------------------------------------
# growth


def grow(seed: GrowthTree, n: int, rng) -> GrowthTree:
    """Grow ``seed`` to ``n`` vertices by uniform attachment.

    Vertex ``i`` (for ``i >= |seed|``) attaches to a vertex drawn uniformly
    from ``0..i-1``.
    """
    if seed.n < 2:
        raise ValueError("seed must have at least 2 vertices")
    if n < seed.n:
        raise ValueError(f"target size {n} is below the seed size {seed.n}")
    gen = as_generator(rng)
    new = _draw_parents(gen, seed.n, n, None)
    return GrowthTree(np.concatenate([seed.parent, new]), seed.n)


def grow_many(seed: GrowthTree, n: int, count: int, rng) -> np.ndarray:
    """Parent arrays of ``count`` independent trees, shape ``(count, n)``."""
    if n < seed.n:
        raise ValueError(f"target size {n} is below the seed size {seed.n}")
    gen = as_generator(rng)
    out = np.empty((count, n), dtype=np.int64)
    out[:, : seed.n] = seed.parent
    out[:, seed.n :] = _draw_parents(gen, seed.n, n, count)
    return out


def _draw_parents(gen, start, stop, count):
    highs = np.arange(start, stop, dtype=np.int64)
    if highs.size == 0:
        return np.empty((0,) if count is None else (count, 0), dtype=np.int64)
    size = None if count is None else (count, highs.size)
    return gen.integers(0, highs, size=size, dtype=np.int64)


# --------------------------------------------------------------------------
# queries


def subtree_sizes(t: GrowthTree) -> dict[int, EdgeSplit]:
    """Split sizes of every edge, keyed by the child endpoint."""
    sz = kernels.subtree_sizes(t.parent)
    n = t.n
    return {i: EdgeSplit(i, int(sz[i]), n - int(sz[i])) for i in range(1, n)}


def diameter(t: GrowthTree) -> int:
    """Exact diameter (double breadth-first sweep)."""
    return int(kernels.diameter(t.parent))


# --------------------------------------------------------------------------
# isomorphism


def tree_centers(adj: Sequence[Sequence[int]]) -> list[int]:
    """One or two centre vertices, found by repeatedly peeling leaves."""
    n = len(adj)
    if n <= 2:
        return list(range(n))
    deg = [len(a) for a in adj]
    layer = [v for v in range(n) if deg[v] <= 1]
    remaining = n
    while remaining > 2:
        remaining -= len(layer)
        nxt = []
        for v in layer:
            for u in adj[v]:
                deg[u] -= 1
                if deg[u] == 1:
                    nxt.append(u)
        layer = nxt
    return sorted(layer)


def rooted_encoding(adj, root, labels=None) -> str:
    """AHU encoding of the tree rooted at ``root``; labels are written in."""
    order, par = _bfs_order(adj, root)
    code: dict[int, str] = {}
    for v in reversed(order):
        kids = sorted(code.pop(c) for c in adj[v] if c != par[v])
        head = "(" if labels is None else f"({labels[v]}"
        code[v] = head + "".join(kids) + ")"
    return code[root]


def canonical_encoding(adj, labels=None) -> str:
    """Isomorphism-invariant string; minimum over the rooted encodings at the centres."""
    return min(rooted_encoding(adj, c, labels) for c in tree_centers(adj))


def canonical_form(t) -> str:
    """Canonical id of an unlabeled tree (GrowthTree or adjacency lists)."""
    adj = t.adjacency() if isinstance(t, GrowthTree) else t
    return canonical_encoding(adj)


@lru_cache(maxsize=None)
def free_tree_parents(m: int) -> tuple[tuple[int, ...], ...]:
    """One parent array per isomorphism class of trees on ``m`` vertices."""
    if m < 1:
        raise ValueError("m must be positive")
    if m == 1:
        return ((-1,),)
    seen = {}
    for base in free_tree_parents(m - 1):
        for v in range(m - 1):
            cand = base + (v,)
            key = canonical_encoding(_adj_from_parents(cand))
            seen.setdefault(key, cand)
    return tuple(seen[k] for k in sorted(seen))


def all_trees(m: int) -> list[GrowthTree]:
    """Representatives of all unlabeled trees on ``m >= 2`` vertices."""
    return [GrowthTree(p) for p in free_tree_parents(m)]


def _adj_from_parents(parents):
    adj: list[list[int]] = [[] for _ in range(len(parents))]
    for i in range(1, len(parents)):
        p = parents[i]
        adj[i].append(p)
        adj[p].append(i)
    return adj


# --------------------------------------------------------------------------
# file formats


def format_tree(t: GrowthTree) -> str:
    """Text form: ``n seed_size`` then the parents of vertices 1..n-1."""
    return f"{t.n} {t.seed_size}\n" + " ".join(str(int(p)) for p in t.parent[1:]) + "\n"


def parse_tree(text: str) -> GrowthTree:
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise TreeFormatError("missing header `n seed_size`", 1)
    head = lines[0].split()
    if len(head) != 2:
        raise TreeFormatError("header must be `n seed_size`", 1)
    try:
        n, seed_size = int(head[0]), int(head[1])
    except ValueError:
        raise TreeFormatError("header values must be integers", 1) from None
    body = lines[1].split() if len(lines) > 1 else []
    try:
        parents = [int(x) for x in body]
    except ValueError:
        raise TreeFormatError("parent indices must be integers", 2) from None
    if len(parents) != n - 1:
        raise TreeFormatError(f"expected {n - 1} parent indices, got {len(parents)}", 2)
    try:
        return GrowthTree([-1] + parents, seed_size)
    except ValueError as exc:
        raise TreeFormatError(str(exc), 2) from None


def parse_edge_list(text: str) -> GrowthTree:
    """Lines ``u v`` with 0-based ids; blank lines and ``#`` comments skipped."""
    edges = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise TreeFormatError("expected `u v`", lineno)
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise TreeFormatError("vertex ids must be integers", lineno) from None
    try:
        return GrowthTree.from_edges(edges)
    except ValueError as exc:
        raise TreeFormatError(str(exc)) from None


def read_tree(path: str | os.PathLike) -> GrowthTree:
    """Read a tree file; falls back to the edge-list format when the header does not parse."""
    with open(path) as fh:
        text = fh.read()
    try:
        return parse_tree(text)
    except TreeFormatError as first:
        try:
            return parse_edge_list(text)
        except TreeFormatError:
            raise first from None


def write_tree(t: GrowthTree, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(format_tree(t))
