# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t i64


cdef void _sizes(const i64[:] par, i64[:] sz) noexcept nogil:
    cdef Py_ssize_t n = par.shape[0]
    cdef Py_ssize_t i
    for i in range(n):
        sz[i] = 1
    for i in range(n - 1, 0, -1):
        sz[par[i]] += sz[i]


cdef void _csr(const i64[:] par, i64[:] off, i64[:] nbr) noexcept nogil:
    cdef Py_ssize_t n = par.shape[0]
    cdef Py_ssize_t i
    cdef i64 p
    for i in range(n + 1):
        off[i] = 0
    for i in range(1, n):
        off[i + 1] += 1
        off[par[i] + 1] += 1
    for i in range(n):
        off[i + 1] += off[i]
    # off[v] doubles as a fill cursor, restored afterwards
    for i in range(1, n):
        p = par[i]
        nbr[off[i]] = p
        off[i] += 1
        nbr[off[p]] = i
        off[p] += 1
    for i in range(n, 0, -1):
        off[i] = off[i - 1]
    off[0] = 0


def subtree_sizes(parent):
    cdef const i64[:] par = np.ascontiguousarray(parent, dtype=np.int64)
    out = np.empty(par.shape[0], dtype=np.int64)
    cdef i64[:] sz = out
    with nogil:
        _sizes(par, sz)
    return out


cdef double _g_total(const i64[:] par, i64[:] sz) noexcept nogil:
    cdef Py_ssize_t n = par.shape[0]
    cdef Py_ssize_t i
    cdef double nf = <double>n
    cdef double a, b, term, tmp
    cdef double acc = 0.0
    cdef double comp = 0.0
    _sizes(par, sz)
    for i in range(1, n):
        a = <double>sz[i] / nf
        b = <double>(n - sz[i]) / nf
        term = (a * a) * (b * b) - comp
        tmp = acc + term
        comp = (tmp - acc) - term
        acc = tmp
    return acc


def g_total(parent):
    cdef const i64[:] par = np.ascontiguousarray(parent, dtype=np.int64)
    cdef i64[:] sz = np.empty(par.shape[0], dtype=np.int64)
    cdef double r
    with nogil:
        r = _g_total(par, sz)
    return r


def g_totals(parents):
    cdef const i64[:, :] P = np.ascontiguousarray(parents, dtype=np.int64)
    cdef Py_ssize_t rows = P.shape[0]
    cdef Py_ssize_t r
    cdef i64[:] sz = np.empty(P.shape[1], dtype=np.int64)
    out = np.empty(rows, dtype=np.float64)
    cdef double[:] o = out
    with nogil:
        for r in range(rows):
            o[r] = _g_total(P[r], sz)
    return out


cdef i64 _bfs_far(const i64[:] off, const i64[:] nbr, i64 src, i64[:] dist,
                  i64[:] queue, i64* far_dist) noexcept nogil:
    cdef Py_ssize_t n = dist.shape[0]
    cdef Py_ssize_t i, head = 0, tail = 0
    cdef i64 u, v, far = src
    for i in range(n):
        dist[i] = -1
    dist[src] = 0
    queue[tail] = src
    tail += 1
    while head < tail:
        u = queue[head]
        head += 1
        if dist[u] > dist[far]:
            far = u
        for i in range(off[u], off[u + 1]):
            v = nbr[i]
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue[tail] = v
                tail += 1
    far_dist[0] = dist[far]
    return far


def diameter(parent):
    cdef const i64[:] par = np.ascontiguousarray(parent, dtype=np.int64)
    cdef Py_ssize_t n = par.shape[0]
    if n < 2:
        return 0
    cdef i64[:] off = np.empty(n + 1, dtype=np.int64)
    cdef i64[:] nbr = np.empty(2 * (n - 1), dtype=np.int64)
    cdef i64[:] dist = np.empty(n, dtype=np.int64)
    cdef i64[:] queue = np.empty(n, dtype=np.int64)
    cdef i64 u, d
    with nogil:
        _csr(par, off, nbr)
        u = _bfs_far(off, nbr, 0, dist, queue, &d)
        _bfs_far(off, nbr, u, dist, queue, &d)
    return int(d)


def f_tau_float(parent, tau_parent, tau_labels):
    cdef const i64[:] par = np.ascontiguousarray(parent, dtype=np.int64)
    cdef const i64[:] tpar = np.ascontiguousarray(tau_parent, dtype=np.int64)
    cdef const i64[:] lab = np.ascontiguousarray(tau_labels, dtype=np.int64)
    cdef Py_ssize_t n = par.shape[0]
    cdef Py_ssize_t m = tpar.shape[0]
    cdef i64[:] sz = np.empty(n, dtype=np.int64)
    cdef i64[:] off = np.empty(n + 1, dtype=np.int64)
    cdef i64[:] nbr = np.empty(max(2 * (n - 1), 1), dtype=np.int64)
    cdef i64[:] toff = np.empty(m + 1, dtype=np.int64)
    cdef i64[:] tnbr = np.empty(max(2 * (m - 1), 1), dtype=np.int64)
    cdef i64[:] phi = np.empty(m, dtype=np.int64)
    cdef i64[:] pos = np.zeros(m, dtype=np.int64)
    cdef cnp.uint8_t[:] used = np.zeros(n, dtype=np.uint8)
    cdef Py_ssize_t r, i, v, k, j
    cdef i64 p, c, a, b, f
    cdef bint found
    cdef double acc = 0.0, w, d
    with nogil:
        _sizes(par, sz)
        _csr(par, off, nbr)
        _csr(tpar, toff, tnbr)
        for r in range(n):
            if off[r + 1] - off[r] < toff[1] - toff[0]:
                continue
            phi[0] = r
            used[r] = 1
            i = 1
            if m > 1:
                pos[1] = 0
            while True:
                if i == m:
                    # complete embedding: component sizes and weight
                    w = 1.0
                    for v in range(m):
                        f = n
                        a = phi[v]
                        for k in range(toff[v], toff[v + 1]):
                            b = phi[tnbr[k]]
                            if par[b] == a:
                                f -= sz[b]
                            else:
                                f -= n - sz[a]
                        d = 1.0
                        for j in range(lab[v]):
                            d *= <double>(f - j)
                        w *= d
                    acc += w
                    i -= 1
                    if i < 1:
                        break
                    used[phi[i]] = 0
                    continue
                p = phi[tpar[i]]
                found = False
                while pos[i] < off[p + 1] - off[p]:
                    c = nbr[off[p] + pos[i]]
                    pos[i] += 1
                    if not used[c] and off[c + 1] - off[c] >= toff[i + 1] - toff[i]:
                        phi[i] = c
                        used[c] = 1
                        found = True
                        break
                if found:
                    i += 1
                    if i < m:
                        pos[i] = 0
                else:
                    i -= 1
                    if i < 1:
                        break
                    used[phi[i]] = 0
            used[r] = 0
    return acc
