"""Pure-Python kernels.

Reference implementations of the hot loops in ``_ckernels.pyx``. Every
function here performs the same floating-point operations in the same order
as its compiled twin, so the two backends agree bit for bit.

All trees are given as parent arrays in arrival order: ``parent[0]`` is
ignored (conventionally -1) and ``parent[i] < i`` for ``i >= 1``.
"""

from collections import deque

import numpy as np


def _as_list(parent):
    return [int(p) for p in parent]


def _adjacency(par):
    adj = [[] for _ in range(len(par))]
    for i in range(1, len(par)):
        p = par[i]
        adj[i].append(p)
        adj[p].append(i)
    return adj


def _sizes(par):
    sz = [1] * len(par)
    for i in range(len(par) - 1, 0, -1):
        sz[par[i]] += sz[i]
    return sz


def subtree_sizes(parent):
    """Number of descendants (inclusive) of every vertex, as int64 array."""
    return np.asarray(_sizes(_as_list(parent)), dtype=np.int64)


def g_total(parent):
    """Balancedness statistic summed over all edges, in double precision."""
    par = _as_list(parent)
    n = len(par)
    sz = _sizes(par)
    nf = float(n)
    acc = 0.0
    comp = 0.0
    for i in range(1, n):
        a = sz[i] / nf
        b = (n - sz[i]) / nf
        term = (a * a) * (b * b) - comp
        tmp = acc + term
        comp = (tmp - acc) - term
        acc = tmp
    return acc


def g_totals(parents):
    parents = np.asarray(parents)
    out = np.empty(parents.shape[0], dtype=np.float64)
    for r in range(parents.shape[0]):
        out[r] = g_total(parents[r])
    return out


def _bfs_far(adj, src):
    dist = [-1] * len(adj)
    dist[src] = 0
    q = deque([src])
    far = src
    while q:
        u = q.popleft()
        if dist[u] > dist[far]:
            far = u
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                q.append(v)
    return far, dist[far]


def diameter(parent):
    """Exact diameter by two breadth-first sweeps."""
    par = _as_list(parent)
    if len(par) < 2:
        return 0
    adj = _adjacency(par)
    u, _ = _bfs_far(adj, 0)
    _, d = _bfs_far(adj, u)
    return d


def _embedding_component_sizes(par, tau_par):
    """Yield, for every embedding of the pattern tree, the tuple of component sizes.

    The pattern is placed in index order (its parent array guarantees each
    vertex's parent is already placed); root candidates are scanned in
    increasing order and neighbours in adjacency-list order.
    """
    n = len(par)
    m = len(tau_par)
    adj = _adjacency(par)
    sz = _sizes(par)
    tau_adj = _adjacency(tau_par)
    tdeg = [len(a) for a in tau_adj]
    phi = [-1] * m
    used = [False] * n

    def side(a, b):
        # vertices on b's side once edge {a, b} is cut
        return sz[b] if par[b] == a else n - sz[a]

    def sizes():
        out = []
        for v in range(m):
            f = n
            a = phi[v]
            for x in tau_adj[v]:
                f -= side(a, phi[x])
            out.append(f)
        return out

    def place(i):
        if i == m:
            yield sizes()
            return
        for c in adj[phi[tau_par[i]]]:
            if not used[c] and len(adj[c]) >= tdeg[i]:
                phi[i] = c
                used[c] = True
                yield from place(i + 1)
                used[c] = False

    for r in range(n):
        if len(adj[r]) < tdeg[0]:
            continue
        phi[0] = r
        used[r] = True
        yield from place(1)
        used[r] = False


def falling(k, j):
    """Descending factorial k(k-1)...(k-j+1); equals 1 for j = 0."""
    out = 1
    for i in range(j):
        out *= k - i
    return out


def f_tau_count(parent, tau_parent, tau_labels):
    """Exact decorated-embedding statistic as a Python integer."""
    par = _as_list(parent)
    labels = [int(x) for x in tau_labels]
    total = 0
    for fs in _embedding_component_sizes(par, _as_list(tau_parent)):
        w = 1
        for f, lab in zip(fs, labels):
            w *= falling(f, lab)
            if w == 0:
                break
        total += w
    return total


def f_tau_float(parent, tau_parent, tau_labels):
    """Double-precision decorated-embedding statistic (Monte Carlo mode)."""
    par = _as_list(parent)
    labels = [int(x) for x in tau_labels]
    acc = 0.0
    for fs in _embedding_component_sizes(par, _as_list(tau_parent)):
        w = 1.0
        for f, lab in zip(fs, labels):
            d = 1.0
            for j in range(lab):
                d *= float(f - j)
            w *= d
        acc += w
    return acc
