"""Martingales built from decorated-embedding statistics.

For ``tau`` with positive labels the process::

    M(n) = beta_n(tau) * (F_tau(T_n) - sum_{sigma < tau} a_n(tau, sigma) F_sigma(T_n))

is a martingale under uniform attachment. ``beta_n`` removes the growth
factor ``(1 + w/n)`` of the one-step recurrence, and the correction
coefficients ``a_n`` are built bottom-up over all positive-label trees
below ``tau`` (in the fixed linear extension of the strict order) so that
the drift coming from lower-order terms is cancelled.

Tables are built either in exact rationals (small ``n``, used for exact
checks) or in double precision (Monte Carlo at large ``n``). The
construction code is shared; only the number type differs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from seedtrace import kernels
from seedtrace._stats import mean_var
from seedtrace.decorated import (
    DecoratedTree,
    enumerate_dplus_below,
    f_tau,
    f_tau_float,
    partial_order_lt,
    recurrence_expansion,
)
from seedtrace.simulate import run_blocks
from seedtrace.tree_model import GrowthTree, grow_many

TABLE_FORMAT_VERSION = 1


@dataclass
class MartingaleValue:
    n: int
    value: Fraction | float


@dataclass
class MartingaleTable:
    """Coefficient rows for every ``sigma <= tau``; ``order[-1]`` is ``tau``.

    ``rows[n - n0]`` holds ``beta`` (list), and the lower-triangular matrices
    ``abar``, ``a`` and ``b`` (lists of lists indexed like ``order``); ``b`` is
    the inverse of the unit lower-triangular ``A_n = I - a_n``.
    """

    tau: DecoratedTree
    n0: int
    n_max: int
    exact: bool
    order: list[DecoratedTree]
    c: list[list[int]]
    rows: list[dict] = field(repr=False)

    @property
    def ids(self) -> list[str]:
        return [s.canonical_id for s in self.order]

    def row(self, n: int) -> dict:
        if not self.n0 <= n <= self.n_max:
            raise ValueError(f"n={n} outside table range [{self.n0}, {self.n_max}]")
        return self.rows[n - self.n0]

    def beta(self, n: int, sigma: int = -1):
        return self.row(n)["beta"][sigma]

    def a(self, n: int, i: int = -1) -> dict[str, Fraction | float]:
        """Nonzero ``a_n(order[i], sigma)`` keyed by canonical id."""
        r = self.row(n)["a"][i]
        return {self.order[j].canonical_id: v for j, v in enumerate(r) if v != 0}

    def coefficients(self) -> dict[str, dict[str, int]]:
        """Recurrence coefficients ``c(sigma, sigma')`` by canonical id (seed independent)."""
        ids = self.ids
        return {
            ids[i]: {ids[j]: v for j, v in enumerate(row) if v}
            for i, row in enumerate(self.c)
        }

    # -- serialization ----------------------------------------------------

    def to_json(self) -> str:
        def enc(x):
            if isinstance(x, Fraction):
                return f"{x.numerator}/{x.denominator}"
            return float(x)

        def mat(m):
            return [[enc(v) for v in r] for r in m]

        doc = {
            "format": "seedtrace-martingale-table",
            "version": TABLE_FORMAT_VERSION,
            "exact": self.exact,
            "n0": self.n0,
            "n_max": self.n_max,
            "order": [
                {"id": s.canonical_id, "parents": s.parent_form()[0], "labels": s.parent_form()[1]}
                for s in self.order
            ],
            "c": self.c,
            "rows": [
                {"beta": [enc(v) for v in r["beta"]], "abar": mat(r["abar"]), "a": mat(r["a"]),
                 "b": mat(r["b"])}
                for r in self.rows
            ],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "MartingaleTable":
        doc = json.loads(text)
        if doc.get("format") != "seedtrace-martingale-table":
            raise ValueError("not a martingale table")
        if doc.get("version") != TABLE_FORMAT_VERSION:
            raise ValueError(f"unsupported table version {doc.get('version')}")
        exact = doc["exact"]

        def dec(x):
            return Fraction(x) if exact else float(x)

        def mat(m):
            return [[dec(v) for v in r] for r in m]

        order = [DecoratedTree.from_parents(o["parents"], o["labels"]) for o in doc["order"]]
        rows = [
            {"beta": [dec(v) for v in r["beta"]], "abar": mat(r["abar"]), "a": mat(r["a"]),
             "b": mat(r["b"])}
            for r in doc["rows"]
        ]
        return cls(order[-1], doc["n0"], doc["n_max"], exact, order, doc["c"], rows)

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "MartingaleTable":
        with open(path) as fh:
            return cls.from_json(fh.read())


def _falling(n: int, w: int) -> int:
    return kernels.falling(n, w)


def build_table(tau: DecoratedTree, n0: int, n_max: int, exact: bool = True) -> MartingaleTable:
    """Build coefficient rows for ``n0 <= n <= n_max``.

    ``n0`` is the size from which the process is a martingale; a table with
    a smaller ``n0`` also serves trees grown from larger seeds.
    """
    if not tau.in_dplus:
        raise ValueError("tau must have all labels >= 1")
    if n0 < 2:
        raise ValueError("n0 must be at least 2")
    if n_max < n0:
        raise ValueError("n_max must be at least n0")
    num = Fraction if exact else float
    zero, one = num(0), num(1)

    order = enumerate_dplus_below(tau)
    if not order[-1].isomorphic(tau):
        raise AssertionError("tau must be the last element of its down-set")
    order[-1] = tau
    K = len(order)
    index = {s.canonical_id: i for i, s in enumerate(order)}
    lt = [[partial_order_lt(order[j], order[i]) for j in range(K)] for i in range(K)]
    w = [s.weight for s in order]
    single = [s.size == 1 for s in order]

    c = [[0] * K for _ in range(K)]
    for i, s in enumerate(order):
        if s.size >= 2:
            for key, (_, coeff) in recurrence_expansion(s).items():
                c[i][index[key]] += coeff

    # between[i][s]: indices t with order[s] < order[t] < order[i]
    between = [[[t for t in range(K) if lt[i][t] and lt[t][s]] for s in range(K)] for i in range(K)]

    def single_beta(n, weight):
        # F of a single vertex is the deterministic n [n]_w; it vanishes for n < w,
        # where the accumulated drift is also zero, so the entry is stored as 0
        d = n * _falling(n, weight)
        return one / num(d) if d else zero

    def beta_at(n):
        out = []
        for i in range(K):
            if single[i]:
                out.append(single_beta(n, w[i]))
            else:
                prod = one
                for j in range(2, n):
                    prod = prod * num(j) / num(j + w[i])
                out.append(prod)
        return out

    def solve_a(beta, abar):
        a = [[zero] * K for _ in range(K)]
        for i in range(K):
            if single[i]:
                continue
            for s in range(K):
                if not lt[i][s]:
                    continue
                v = abar[i][s] * beta[s] / beta[i]
                for t in between[i][s]:
                    if a[t][s] != 0:
                        v -= abar[i][t] * a[t][s] * beta[t] / beta[i]
                a[i][s] = v
        return a

    def invert(a):
        b = [[zero] * K for _ in range(K)]
        for j in range(K):
            b[j][j] = one
            for i in range(j + 1, K):
                v = zero
                for k in range(j, i):
                    if a[i][k] != 0 and b[k][j] != 0:
                        v += a[i][k] * b[k][j]
                b[i][j] = v
        return b

    rows = []
    beta = beta_at(n0)
    abar = [[zero] * K for _ in range(K)]
    a = solve_a(beta, abar)
    rows.append({"beta": beta, "abar": abar, "a": a, "b": invert(a)})
    for n in range(n0 + 1, n_max + 1):
        prev = rows[-1]
        pb, pbeta = prev["b"], prev["beta"]
        j = n - 1
        new_abar = [r[:] for r in prev["abar"]]
        for i in range(K):
            if single[i]:
                continue
            for s in range(K):
                if not lt[i][s]:
                    continue
                inner = num(c[i][s])
                for t in between[i][s]:
                    if c[i][t]:
                        inner += c[i][t] * pb[t][s]
                if inner != 0 and pbeta[s] != 0:
                    new_abar[i][s] += inner / num(j + w[i]) * pbeta[i] / pbeta[s]
        # incremental beta update keeps exact mode linear in n_max
        beta = []
        for i in range(K):
            if single[i]:
                beta.append(single_beta(n, w[i]))
            else:
                beta.append(pbeta[i] * num(j) / num(j + w[i]))
        a = solve_a(beta, new_abar)
        rows.append({"beta": beta, "abar": new_abar, "a": a, "b": invert(a)})
    return MartingaleTable(tau, n0, n_max, exact, order, c, rows)


def _f_values(table: MartingaleTable, t, needed: list[int]):
    par = t.parent if isinstance(t, GrowthTree) else t
    fn = f_tau if table.exact else f_tau_float
    return {j: fn(table.order[j], par) for j in needed}


def evaluate(table: MartingaleTable, t, index: int = -1) -> MartingaleValue:
    """Value of the martingale for ``order[index]`` (default ``tau``) at ``n = |t|``."""
    par = t.parent if isinstance(t, GrowthTree) else t
    n = len(par)
    row = table.row(n)
    i = index % len(table.order)
    if table.order[i].size == 1:
        # beta * F == 1 identically wherever F is nonzero
        return MartingaleValue(n, Fraction(1) if table.exact else 1.0)
    coeffs = row["a"][i]
    needed = [i] + [j for j, v in enumerate(coeffs) if v != 0]
    F = _f_values(table, par, needed)
    acc = F[i]
    for j, v in enumerate(coeffs):
        if v != 0:
            acc = acc - v * F[j]
    return MartingaleValue(n, row["beta"][i] * acc)


def martingale_step_check(table: MartingaleTable, t: GrowthTree, index: int = -1) -> bool:
    """Exact check that the mean over all one-vertex extensions equals the current value."""
    if not table.exact:
        raise ValueError("step checks need an exact table")
    now = evaluate(table, t, index).value
    nxt = sum((evaluate(table, t.attach(v), index).value for v in range(t.n)), Fraction(0))
    return nxt / t.n == now


@dataclass
class L2Report:
    grid: list[int]
    samples: int
    means: list[float]
    variances: list[float]
    stderrs: list[float]
    plateau: bool

    def to_dict(self):
        return dict(self.__dict__)


@dataclass(frozen=True)
class MartingaleTask:
    """Martingale values along one growth history, evaluated at each grid size."""

    seed_parent: tuple
    grid: tuple
    table_json: str

    def __call__(self, gen, count):
        table = _table_cache(self.table_json)
        seed = GrowthTree(self.seed_parent)
        out = np.empty((count, len(self.grid)))
        for r in range(count):
            par = grow_many(seed, self.grid[-1], 1, gen)[0]
            for g, n in enumerate(self.grid):
                out[r, g] = float(evaluate(table, par[:n]).value)
        return out


_TABLES: dict[str, MartingaleTable] = {}


def _table_cache(text: str) -> MartingaleTable:
    tab = _TABLES.get(text)
    if tab is None:
        tab = _TABLES[text] = MartingaleTable.from_json(text)
    return tab


def martingale_samples(table: MartingaleTable, seed: GrowthTree, grid, samples: int,
                       master_seed: int, arm: int = 0, workers: int = 1) -> np.ndarray:
    """Array of shape ``(samples, len(grid))`` of martingale values."""
    grid = tuple(sorted(int(g) for g in grid))
    if grid[0] < max(seed.n, table.n0) or grid[-1] > table.n_max:
        raise ValueError("grid outside the table range or below the seed size")
    task = MartingaleTask(tuple(int(p) for p in seed.parent), grid, table.to_json())
    return run_blocks(task, samples, master_seed, arm=arm, workers=workers)


def l2_diagnostic(table: MartingaleTable, seed: GrowthTree, grid, samples: int,
                  master_seed: int, workers: int = 1) -> L2Report:
    """Monte Carlo variance trace of the martingale on a size grid.

    ``plateau`` is true when the variance at the last grid point is within a
    factor 2 of the variance at the middle grid point.
    """
    vals = martingale_samples(table, seed, grid, samples, master_seed, workers=workers)
    grid = sorted(int(g) for g in grid)
    means, variances = [], []
    for g in range(len(grid)):
        m, v = mean_var(vals[:, g])
        means.append(m)
        variances.append(v)
    stderrs = [(v / samples) ** 0.5 for v in variances]
    mid, last = variances[len(grid) // 2], variances[-1]
    plateau = last <= 2.0 * mid if mid > 0 else last == 0.0
    return L2Report(grid, samples, means, variances, stderrs, plateau)
