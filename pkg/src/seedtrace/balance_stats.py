"""The balancedness statistic and its beta-binomial description.

For an edge ``e`` of a tree ``T`` on ``n`` vertices, with components of
sizes ``s`` and ``n - s`` after removing ``e``::

    g(T, e) = s^2 (n - s)^2 / n^4        G(T) = sum_e g(T, e)

Under uniform attachment the child-side size of a seed edge follows a
Pólya urn started from the two seed component sizes, and the edge added at
time ``j`` follows an urn started from ``(1, j)``. This gives exact means.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from seedtrace import kernels, polya
from seedtrace._stats import chisquare_gof, mean_var
from seedtrace.simulate import EdgeSideTask, GTask, run_blocks
from seedtrace.tree_model import GrowthTree, path, star, subtree_sizes


@dataclass
class GStatReport:
    g_per_edge: dict[int, Fraction]
    g_total: Fraction


def _edge_child(t: GrowthTree, e) -> int:
    if isinstance(e, (tuple, list)):
        u, v = int(e[0]), int(e[1])
        if 0 < v < t.n and t.parent[v] == u:
            return v
        if 0 < u < t.n and t.parent[u] == v:
            return u
        raise ValueError(f"({u}, {v}) is not an edge")
    c = int(e)
    if not 1 <= c < t.n:
        raise ValueError(f"no edge above vertex {c}")
    return c


def _g(s: int, n: int) -> Fraction:
    return Fraction(s * s * (n - s) * (n - s), n**4)


def g_edge(t: GrowthTree, e) -> Fraction:
    """Exact ``g`` of one edge, given as ``(u, v)`` or by its child endpoint."""
    c = _edge_child(t, e)
    return _g(subtree_sizes(t)[c].size_child_side, t.n)


def g_stat(t: GrowthTree) -> GStatReport:
    sz = kernels.subtree_sizes(t.parent)
    per = {i: _g(int(sz[i]), t.n) for i in range(1, t.n)}
    return GStatReport(per, sum(per.values(), Fraction(0)))


def g_total(t: GrowthTree) -> Fraction:
    """Exact ``G(T)``."""
    return g_stat(t).g_total


def g_total_float(t: GrowthTree) -> float:
    return float(kernels.g_total(t.parent))


# ------------------------------------------------------------------------
# exact means


def expected_edge_term(a: int, b: int, n: int) -> Fraction:
    """``E[B^2 (n-B)^2] / n^4`` for ``B = B_{a,b,n-a-b}``."""
    p = polya.BetaBinomialParams(a, b, n - a - b)
    return polya.expect(p, lambda x: x * x * (n - x) * (n - x)) / n**4


def expected_g(seed: GrowthTree, n: int) -> Fraction:
    """Exact ``E[G(UA(n, seed))]`` from seed-edge and late-edge urn laws."""
    if n < seed.n:
        raise ValueError("n is below the seed size")
    k = seed.n
    total = Fraction(0)
    for split in subtree_sizes(seed).values():
        total += expected_edge_term(split.size_child_side, split.size_parent_side, n)
    for j in range(k, n):
        total += expected_edge_term(1, j, n)
    return total


def mean_diff_closed_form(n: int) -> Fraction:
    return Fraction(2 * n**3 + 5 * n**2 + 8 * n + 5, 140 * n**3)


def exact_mean_diff_p4_s4(n: int) -> Fraction:
    """``E[G(UA(n,P4))] - E[G(UA(n,S4))]`` computed two independent ways.

    The urn computation uses only the middle edge of the path against one
    star edge (the other edges have identical laws on both sides); it must
    agree with the cubic closed form, otherwise ``ArithmeticError``.
    """
    if n < 4:
        raise ValueError("n must be at least 4")
    via_urns = expected_edge_term(2, 2, n) - expected_edge_term(1, 3, n)
    closed = mean_diff_closed_form(n)
    if via_urns != closed:
        raise ArithmeticError(f"n={n}: urn moments give {via_urns}, closed form {closed}")
    return via_urns


# ------------------------------------------------------------------------
# Monte Carlo


def g_samples(seed: GrowthTree, n: int, samples: int, master_seed: int, arm: int = 0,
              workers: int = 1) -> np.ndarray:
    return run_blocks(GTask.of(seed, n), samples, master_seed, arm=arm, workers=workers)


@dataclass
class EdgeLawReport:
    child_side: int
    parent_side: int
    n: int
    samples: int
    chi2: float
    dof: int
    p_value: float
    observed: np.ndarray = field(repr=False)
    expected: np.ndarray = field(repr=False)


def edge_split_law_check(seed: GrowthTree, e, n: int, samples: int, master_seed: int,
                         workers: int = 1) -> EdgeLawReport:
    """Compare simulated child-side sizes of a seed edge with the urn pmf."""
    c = _edge_child(seed, e)
    if n < seed.n:
        raise ValueError("n is below the seed size")
    split = subtree_sizes(seed)[c]
    params = polya.BetaBinomialParams(split.size_child_side, split.size_parent_side, n - seed.n)
    task = EdgeSideTask(tuple(int(p) for p in seed.parent), c, n)
    sizes = run_blocks(task, samples, master_seed, workers=workers)
    observed = np.bincount(sizes - params.alpha, minlength=params.n + 1)
    if observed.size != params.n + 1:
        raise AssertionError("simulated size outside the urn support")
    probs = polya.pmf_float(params)
    chi2, dof, pval = chisquare_gof(observed, probs)
    return EdgeLawReport(split.size_child_side, split.size_parent_side, n, samples, chi2, dof,
                         pval, observed, probs * samples)


@dataclass
class StarTestReport:
    k: int
    n: int
    samples: int
    threshold: float
    star_tail: float  # P(G(star arm) >= threshold)
    other_tail: float  # P(G(other arm) < threshold)
    accuracy: float
    star_mean: float
    other_mean: float

    def to_dict(self):
        return dict(self.__dict__)


def star_threshold_test(k: int, t: GrowthTree, n: int, samples: int, master_seed: int,
                        workers: int = 1) -> StarTestReport:
    """Threshold test separating growth from the ``k``-star and from ``t``.

    The threshold is the midpoint of the two empirical medians; trees with
    ``G`` below it are called star-grown.
    """
    if k < 3:
        raise ValueError("k must be at least 3")
    if n < max(k, t.n):
        raise ValueError("n must be at least max(k, |t|)")
    gs = g_samples(star(k), n, samples, master_seed, arm=0, workers=workers)
    gt = g_samples(t, n, samples, master_seed, arm=1, workers=workers)
    theta = 0.5 * (float(np.median(gs)) + float(np.median(gt)))
    star_tail = float(np.mean(gs >= theta))
    other_tail = float(np.mean(gt < theta))
    return StarTestReport(
        k, n, samples, theta, star_tail, other_tail,
        1.0 - 0.5 * (star_tail + other_tail),
        mean_var(gs)[0], mean_var(gt)[0],
    )


P4 = path(4)
S4 = star(4)
