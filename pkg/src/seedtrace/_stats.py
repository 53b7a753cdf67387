"""Small numerical helpers shared by the Monte Carlo code."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats


def mean_var(x) -> tuple[float, float]:
    """Mean and unbiased variance with compensated (fsum) accumulation."""
    x = np.asarray(x, dtype=np.float64).ravel()
    n = x.size
    if n == 0:
        return float("nan"), float("nan")
    mu = math.fsum(x) / n
    if n == 1:
        return mu, 0.0
    return mu, math.fsum((x - mu) ** 2) / (n - 1)


def pz_bound(mu_a: float, mu_b: float, var_a: float, var_b: float) -> float:
    """Paley-Zygmund style lower bound on total variation from two means and variances."""
    gap2 = (mu_a - mu_b) ** 2
    den = 2.0 * var_a + 2.0 * var_b + gap2
    if den == 0.0:
        return 0.0
    return gap2 / den


def chisquare_gof(counts, probs, min_expected: float = 5.0):
    """Chi-square goodness of fit after pooling sparse bins.

    Adjacent bins are pooled left-to-right until each pooled bin expects at
    least ``min_expected`` observations; a short final group is merged into
    its neighbour. Returns ``(statistic, dof, p_value)``.
    """
    counts = np.asarray(counts, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    total = counts.sum()
    expected = probs / probs.sum() * total
    obs_groups, exp_groups = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(counts, expected):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs_groups.append(o_acc)
            exp_groups.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if exp_groups:
            obs_groups[-1] += o_acc
            exp_groups[-1] += e_acc
        else:
            obs_groups.append(o_acc)
            exp_groups.append(e_acc)
    obs = np.array(obs_groups)
    exp = np.array(exp_groups)
    dof = len(obs) - 1
    if dof < 1:
        return 0.0, 0, 1.0
    stat = float(((obs - exp) ** 2 / exp).sum())
    return stat, dof, float(stats.chi2.sf(stat, dof))


def bootstrap_pz(a, b, reps: int, seed: int, level: float = 0.95) -> tuple[float, float]:
    """Percentile bootstrap interval for the plug-in bound."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(2**40,))))
    vals = np.empty(reps)
    for r in range(reps):
        ra = a[gen.integers(0, a.size, a.size)]
        rb = b[gen.integers(0, b.size, b.size)]
        vals[r] = pz_bound(ra.mean(), rb.mean(), ra.var(ddof=1), rb.var(ddof=1))
    lo, hi = np.quantile(vals, [(1 - level) / 2, (1 + level) / 2])
    return float(lo), float(hi)
