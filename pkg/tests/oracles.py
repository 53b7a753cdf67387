"""Independent brute-force references used by the tests."""

import itertools
from collections import deque
from fractions import Fraction


def adjacency(parent):
    n = len(parent)
    adj = [set() for _ in range(n)]
    for i in range(1, n):
        adj[i].add(int(parent[i]))
        adj[int(parent[i])].add(i)
    return adj


def component_size(adj, start, removed_edge):
    a, b = removed_edge
    seen = {start}
    q = deque([start])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if {u, v} == {a, b} or v in seen:
                continue
            seen.add(v)
            q.append(v)
    return len(seen)


def child_side_sizes(parent):
    """Size of the child's component after deleting each edge, by BFS."""
    adj = adjacency(parent)
    return {i: component_size(adj, i, (i, int(parent[i]))) for i in range(1, len(parent))}


def distances(adj, src):
    d = {src: 0}
    q = deque([src])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if v not in d:
                d[v] = d[u] + 1
                q.append(v)
    return d


def diameter(parent):
    adj = adjacency(parent)
    return max(max(distances(adj, s).values()) for s in range(len(parent)))


def edge_set(parent):
    return {frozenset((i, int(parent[i]))) for i in range(1, len(parent))}


def isomorphic(pa, pb):
    if len(pa) != len(pb):
        return False
    ea, eb = edge_set(pa), edge_set(pb)
    n = len(pa)
    for perm in itertools.permutations(range(n)):
        if {frozenset((perm[u], perm[v])) for u, v in map(tuple, ea)} == eb:
            return True
    return False


def automorphisms(parent):
    e = edge_set(parent)
    n = len(parent)
    return sum(
        1 for perm in itertools.permutations(range(n))
        if {frozenset((perm[u], perm[v])) for u, v in map(tuple, e)} == e
    )


def urn_law(alpha, beta, n):
    """Law of the white count after ``n`` draws, by dynamic programming over urn states."""
    law = {alpha: Fraction(1)}
    for step in range(n):
        total = alpha + beta + step
        nxt = {}
        for w, p in law.items():
            nxt[w + 1] = nxt.get(w + 1, 0) + p * Fraction(w, total)
            nxt[w] = nxt.get(w, 0) + p * Fraction(total - w, total)
        law = nxt
    return law


def growth_law_by_paths(parent, n):
    """All attachment sequences from ``parent`` to ``n`` vertices, each with its weight."""
    out = [(list(parent), Fraction(1))]
    for m in range(len(parent), n):
        out = [(p + [v], w / m) for p, w in out for v in range(m)]
    return out
