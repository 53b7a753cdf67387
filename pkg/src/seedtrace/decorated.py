"""Decorated trees and their embedding statistics.

A decorated tree is a small tree whose vertices carry nonnegative integer
labels. For a host tree ``T`` and an embedding ``phi`` of the shape into
``T``, cutting the images of the pattern's edges splits ``T`` into one
component per pattern vertex; ``f_v`` is the size of the component holding
``phi(v)``. The statistic ``F`` sums ``prod_v [f_v]_{label(v)}`` over all
embeddings, where ``[k]_j`` is the descending factorial.
"""

from __future__ import annotations

import itertools
import os
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Sequence

from seedtrace import kernels
from seedtrace.tree_model import (
    GrowthTree,
    TreeFormatError,
    canonical_encoding,
    free_tree_parents,
)


@dataclass(frozen=True)
class DecoratedTree:
    """Tree shape on vertices ``0..m-1`` (given by its edges) plus labels."""

    labels: tuple[int, ...]
    edges: tuple[tuple[int, int], ...] = ()
    _adj: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        labels = tuple(int(x) for x in self.labels)
        edges = tuple(tuple(sorted((int(u), int(v)))) for u, v in self.edges)
        m = len(labels)
        if m < 1:
            raise ValueError("a decorated tree needs at least one vertex")
        if any(x < 0 for x in labels):
            raise ValueError("labels must be nonnegative")
        if len(edges) != m - 1:
            raise ValueError(f"{m} vertices need {m - 1} edges, got {len(edges)}")
        adj: list[list[int]] = [[] for _ in range(m)]
        for u, v in edges:
            if not (0 <= u < m and 0 <= v < m) or u == v:
                raise ValueError(f"bad edge ({u}, {v})")
            adj[u].append(v)
            adj[v].append(u)
        seen = {0}
        q = deque([0])
        while q:
            for v in adj[q.popleft()]:
                if v not in seen:
                    seen.add(v)
                    q.append(v)
        if len(seen) != m:
            raise ValueError("shape is not connected")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "_adj", tuple(tuple(a) for a in adj))

    # -- constructors -----------------------------------------------------

    @classmethod
    def vertex(cls, label: int) -> "DecoratedTree":
        return cls((label,))

    @classmethod
    def edge(cls, a: int, b: int) -> "DecoratedTree":
        return cls((a, b), ((0, 1),))

    @classmethod
    def path(cls, *labels: int) -> "DecoratedTree":
        return cls(labels, tuple((i, i + 1) for i in range(len(labels) - 1)))

    @classmethod
    def star(cls, center: int, *leaves: int) -> "DecoratedTree":
        return cls((center,) + leaves, tuple((0, i) for i in range(1, len(leaves) + 1)))

    @classmethod
    def from_parents(cls, parents: Sequence[int], labels: Sequence[int]) -> "DecoratedTree":
        if len(parents) != len(labels):
            raise ValueError("parents and labels differ in length")
        return cls(tuple(labels), tuple((int(parents[i]), i) for i in range(1, len(parents))))

    @classmethod
    def from_tree(cls, t: GrowthTree, labels: Sequence[int] | int = 1) -> "DecoratedTree":
        if isinstance(labels, int):
            labels = [labels] * t.n
        return cls.from_parents(t.parent.tolist(), labels)

    # -- basic quantities -------------------------------------------------

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def weight(self) -> int:
        return sum(self.labels)

    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        return self._adj

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def leaves(self) -> list[int]:
        """Degree-one vertices (empty for a single vertex)."""
        return [v for v in range(self.size) if len(self._adj[v]) == 1]

    def leaves_with_label(self, *values: int) -> list[int]:
        return [v for v in self.leaves() if self.labels[v] in values]

    @property
    def in_dplus(self) -> bool:
        return all(x >= 1 for x in self.labels)

    @property
    def in_d0star(self) -> bool:
        return bool(self.leaves_with_label(0))

    @cached_property
    def canonical_id(self) -> str:
        return canonical_encoding(self._adj, self.labels)

    def order_key(self) -> tuple[int, int, str]:
        """Sort key of the fixed linear extension of the strict order."""
        return (self.size, self.weight, self.canonical_id)

    def isomorphic(self, other: "DecoratedTree") -> bool:
        return self.canonical_id == other.canonical_id

    def parent_form(self) -> tuple[list[int], list[int]]:
        """Relabel in BFS order from vertex 0: ``(parents, labels)`` with ``parents[i] < i``."""
        order = [0]
        par = {0: -1}
        q = deque([0])
        while q:
            u = q.popleft()
            for v in self._adj[u]:
                if v not in par:
                    par[v] = u
                    order.append(v)
                    q.append(v)
        new = {old: i for i, old in enumerate(order)}
        parents = [-1] + [new[par[old]] for old in order[1:]]
        return parents, [self.labels[old] for old in order]

    def __str__(self):
        return f"DecoratedTree{self.canonical_id}"


# ------------------------------------------------------------------------
# order and reductions


def partial_order_lt(a: DecoratedTree, b: DecoratedTree) -> bool:
    """Strict order: smaller in size without being heavier, or lighter without being larger."""
    return (a.size < b.size and a.weight <= b.weight) or (a.size <= b.size and a.weight < b.weight)


def partial_order_le(a: DecoratedTree, b: DecoratedTree) -> bool:
    return partial_order_lt(a, b) or a.isomorphic(b)


def reduce_leaf(tau: DecoratedTree, v: int) -> DecoratedTree:
    """Remove leaf ``v`` together with its label."""
    if tau.size < 2:
        raise ValueError("cannot remove a vertex from a single-vertex tree")
    if tau.degree(v) != 1:
        raise ValueError(f"vertex {v} is not a leaf")

    def re(x):
        return x - 1 if x > v else x

    labels = tau.labels[:v] + tau.labels[v + 1 :]
    edges = tuple((re(a), re(b)) for a, b in tau.edges if v not in (a, b))
    return DecoratedTree(labels, edges)


def reduce_label(tau: DecoratedTree, v: int) -> DecoratedTree:
    """Decrease the label of ``v`` by one; needs ``label(v) >= 2``."""
    if not 0 <= v < tau.size:
        raise ValueError(f"vertex {v} not in tree")
    if tau.labels[v] < 2:
        raise ValueError(f"label of vertex {v} is {tau.labels[v]}, need >= 2")
    labels = list(tau.labels)
    labels[v] -= 1
    return DecoratedTree(tuple(labels), tau.edges)


# ------------------------------------------------------------------------
# the statistic


def _host_parents(t) -> Sequence[int]:
    return t.parent if isinstance(t, GrowthTree) else t


def f_tau(tau: DecoratedTree, t) -> int:
    """Exact value of the decorated-embedding statistic on host tree ``t``."""
    par = _host_parents(t)
    if tau.size == 1:
        n = len(par)
        return n * kernels.falling(n, tau.labels[0])
    tp, tl = tau.parent_form()
    return kernels.f_tau_count(par, tp, tl)


def f_tau_float(tau: DecoratedTree, t) -> float:
    """Double-precision statistic through the selected kernel backend."""
    par = _host_parents(t)
    if tau.size == 1:
        n = len(par)
        return float(n) * float(kernels.falling(n, tau.labels[0]))
    tp, tl = tau.parent_form()
    return kernels.f_tau_float(par, tp, tl)


@lru_cache(maxsize=4096)
def _brute_embeddings(tau_edges: tuple, m: int, host: tuple) -> tuple:
    n = len(host)
    host_edges = {frozenset((i, host[i])) for i in range(1, n)}
    out = []
    for phi in itertools.permutations(range(n), m):
        if all(frozenset((phi[u], phi[v])) in host_edges for u, v in tau_edges):
            image = {frozenset((phi[u], phi[v])) for u, v in tau_edges}
            kept = host_edges - image
            adj: dict[int, list[int]] = {i: [] for i in range(n)}
            for e in kept:
                a, b = tuple(e)
                adj[a].append(b)
                adj[b].append(a)
            comps = []
            for v in range(m):
                seen = {phi[v]}
                stack = [phi[v]]
                while stack:
                    for y in adj[stack.pop()]:
                        if y not in seen:
                            seen.add(y)
                            stack.append(y)
                comps.append(frozenset(seen))
            out.append(tuple(comps))
    return tuple(out)


@lru_cache(maxsize=None)
def _arrow_assignments(size: int, arrows: int) -> int:
    # injective assignments of `arrows` ordered arrows into `size` vertices, by enumeration
    return sum(1 for _ in itertools.permutations(range(size), arrows))


def f_tau_oracle(tau: DecoratedTree, t) -> int:
    """Count decorated embeddings directly (small instances only).

    Embeddings are found by testing every injective vertex map; components
    are found by traversing the host with the image edges removed; arrow
    placements are enumerated.
    """
    host = tuple(int(p) for p in _host_parents(t))
    comps_per_embedding = _brute_embeddings(tau.edges, tau.size, host)
    total = 0
    for comps in comps_per_embedding:
        covered = set()
        for c in comps:
            if covered & c:
                raise AssertionError("components of the cut forest overlap")
            covered |= c
        count = 1
        for c, lab in zip(comps, tau.labels):
            count *= _arrow_assignments(len(c), lab)
        total += count
    return total


# ------------------------------------------------------------------------
# recurrence


def recurrence_expansion(tau: DecoratedTree) -> dict[str, tuple[DecoratedTree, int]]:
    """Lower-order terms of the one-step conditional expectation.

    Label reductions contribute ``l(v)(l(v)-1)`` each and removals of leaves
    labelled 0 or 1 contribute 1 each; isomorphic results are merged.
    """
    if tau.size < 2:
        raise ValueError("the recurrence needs at least two vertices")
    out: dict[str, tuple[DecoratedTree, int]] = {}

    def add(sigma, coeff):
        key = sigma.canonical_id
        prev = out.get(key)
        out[key] = (sigma, coeff + (prev[1] if prev else 0))

    for v, lab in enumerate(tau.labels):
        if lab >= 2:
            add(reduce_label(tau, v), lab * (lab - 1))
    for v in tau.leaves_with_label(0, 1):
        add(reduce_leaf(tau, v), 1)
    return out


def recurrence_terms(tau: DecoratedTree) -> dict[str, int]:
    """Coefficients keyed by canonical id of the reduced tree."""
    return {k: c for k, (_, c) in recurrence_expansion(tau).items()}


def recurrence_rhs(tau: DecoratedTree, t: GrowthTree) -> Fraction:
    n = t.n
    rhs = (1 + Fraction(tau.weight, n)) * f_tau(tau, t)
    lower = sum(c * f_tau(sigma, t) for sigma, c in recurrence_expansion(tau).values())
    return rhs + Fraction(lower, n)


def one_step_mean(tau: DecoratedTree, t: GrowthTree) -> Fraction:
    """Exact average of the statistic over the ``|t|`` equally likely one-vertex extensions."""
    return Fraction(sum(f_tau(tau, t.attach(v)) for v in range(t.n)), t.n)


def verify_recurrence_exact(tau: DecoratedTree, t: GrowthTree) -> bool:
    return one_step_mean(tau, t) == recurrence_rhs(tau, t)


# ------------------------------------------------------------------------
# enumeration of D+ below a tree


def _compositions(total_max: int, parts: int, cap: int | None):
    """Tuples of ``parts`` integers >= 1, each <= cap, summing to at most ``total_max``."""
    if parts == 0:
        yield ()
        return
    hi = total_max - (parts - 1)
    if cap is not None:
        hi = min(hi, cap)
    for first in range(1, hi + 1):
        for rest in _compositions(total_max - first, parts - 1, cap):
            yield (first,) + rest


def dplus_trees(max_size: int, max_weight: int, label_cap: int | None = None) -> list[DecoratedTree]:
    """All positive-label decorated trees within the size and weight bounds, up to isomorphism."""
    found: dict[str, DecoratedTree] = {}
    for m in range(1, max_size + 1):
        if m > max_weight:
            break
        for parents in free_tree_parents(m):
            for labels in _compositions(max_weight, m, label_cap):
                sigma = DecoratedTree.from_parents(parents, labels)
                found.setdefault(sigma.canonical_id, sigma)
    return sorted(found.values(), key=DecoratedTree.order_key)


def enumerate_dplus_below(tau: DecoratedTree, label_cap: int | None = None) -> list[DecoratedTree]:
    """Positive-label trees ``sigma`` with ``sigma <= tau``, in linear-extension order."""
    return [s for s in dplus_trees(tau.size, tau.weight, label_cap) if partial_order_le(s, tau)]


# ------------------------------------------------------------------------
# file format


def format_decorated(tau: DecoratedTree) -> str:
    """Three lines: ``m``, parents of vertices 1..m-1, the m labels."""
    parents, labels = tau.parent_form()
    return (
        f"{tau.size}\n"
        + " ".join(str(p) for p in parents[1:])
        + "\n"
        + " ".join(str(x) for x in labels)
        + "\n"
    )


def parse_decorated(text: str) -> DecoratedTree:
    lines = text.splitlines() + ["", "", ""]
    try:
        m = int(lines[0].strip())
    except ValueError:
        raise TreeFormatError("first line must be the vertex count", 1) from None
    if m < 1:
        raise TreeFormatError("vertex count must be positive", 1)
    try:
        parents = [int(x) for x in lines[1].split()]
    except ValueError:
        raise TreeFormatError("parent indices must be integers", 2) from None
    if len(parents) != m - 1:
        raise TreeFormatError(f"expected {m - 1} parent indices, got {len(parents)}", 2)
    for i, p in enumerate(parents, 1):
        if not 0 <= p < i:
            raise TreeFormatError(f"parent of vertex {i} must lie in [0, {i})", 2)
    try:
        labels = [int(x) for x in lines[2].split()]
    except ValueError:
        raise TreeFormatError("labels must be integers", 3) from None
    if len(labels) != m:
        raise TreeFormatError(f"expected {m} labels, got {len(labels)}", 3)
    try:
        return DecoratedTree.from_parents([-1] + parents, labels)
    except ValueError as exc:
        raise TreeFormatError(str(exc), 3) from None


def read_decorated(path: str | os.PathLike) -> DecoratedTree:
    with open(path) as fh:
        return parse_decorated(fh.read())


def write_decorated(tau: DecoratedTree, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(format_decorated(tau))


def all_decorated(max_size: int, max_label: int, min_label: int = 0) -> list[DecoratedTree]:
    """Every decorated tree with at most ``max_size`` vertices and labels in ``[min_label, max_label]``."""
    found: dict[str, DecoratedTree] = {}
    for m in range(1, max_size + 1):
        for parents in free_tree_parents(m):
            for labels in itertools.product(range(min_label, max_label + 1), repeat=m):
                sigma = DecoratedTree.from_parents(parents, labels)
                found.setdefault(sigma.canonical_id, sigma)
    return sorted(found.values(), key=DecoratedTree.order_key)

