"""Named self-verification suites used by the command line and the tests.

Each suite returns a :class:`SuiteReport`; ``passed`` is false as soon as
any single check fails. Exact suites compare rationals with ``==``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from seedtrace import balance_stats, polya
from seedtrace._stats import chisquare_gof
from seedtrace.decorated import DecoratedTree, all_decorated, verify_recurrence_exact
from seedtrace.martingale import build_table, evaluate, martingale_step_check
from seedtrace.simulate import DiameterTask, run_blocks
from seedtrace.tree_model import GrowthTree, RngStream, canonical_form, grow, path, star

SUITES = ("recurrence", "martingale", "polya", "edge-law", "diameter", "p4s4")


@dataclass
class SuiteReport:
    suite: str
    passed: bool
    checks: int
    failures: int
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.suite}: {status} ({self.checks - self.failures}/{self.checks})"


def reachable_trees(seed: GrowthTree, max_size: int) -> list[GrowthTree]:
    """One representative per isomorphism class reachable from ``seed`` by growth."""
    out = []
    layer = {canonical_form(seed): seed}
    for _ in range(seed.n, max_size + 1):
        out.extend(layer.values())
        nxt: dict[str, GrowthTree] = {}
        for t in layer.values():
            for v in range(t.n):
                c = t.attach(v)
                nxt.setdefault(canonical_form(c), c)
        layer = nxt
    return out


def recurrence_suite(instances: int = 200, max_tree: int = 12, master_seed: int = 0) -> SuiteReport:
    """Exact one-step recurrence on random (tau, t) pairs.

    ``tau`` ranges over decorated trees with 2 to 4 vertices and labels at
    most 3, ``t`` over uniform-attachment trees from ``P2`` with at most
    ``max_tree`` vertices.
    """
    gen = RngStream(master_seed, 0).generator
    corpus = [x for x in all_decorated(4, 3) if x.size >= 2]
    bad = []
    for k in range(instances):
        tau = corpus[int(gen.integers(0, len(corpus)))]
        m = int(gen.integers(2, max_tree + 1))
        t = grow(path(2), m, gen)
        if not verify_recurrence_exact(tau, t):
            bad.append({"tau": tau.canonical_id, "tree": [int(p) for p in t.parent]})
    return SuiteReport("recurrence", not bad, instances, len(bad), {"failed": bad[:10]})


MARTINGALE_TAUS = (
    DecoratedTree.vertex(1),
    DecoratedTree.vertex(2),
    DecoratedTree.edge(1, 1),
    DecoratedTree.edge(1, 2),
    DecoratedTree.path(1, 1, 1),
)


def martingale_suite(max_size: int = 10, taus=MARTINGALE_TAUS,
                     seeds=(path(2), path(3), star(4))) -> SuiteReport:
    """Exact martingale step checks on every reachable tree up to ``max_size``.

    Tables start at the seed size. Also checks the deterministic start
    ``M(2) = M(3) = 2`` for ``edge(1,1)`` from ``P2``.
    """
    checks = failures = 0
    bad = []
    for seed in seeds:
        trees = reachable_trees(seed, max_size)
        for tau in taus:
            table = build_table(tau, seed.n, max_size + 1)
            for t in trees:
                checks += 1
                if not martingale_step_check(table, t):
                    failures += 1
                    bad.append({"seed": canonical_form(seed), "tau": tau.canonical_id,
                                "tree": [int(p) for p in t.parent]})
    table = build_table(DecoratedTree.edge(1, 1), 2, 3)
    chain = [evaluate(table, path(2)).value, evaluate(table, path(3)).value]
    checks += 1
    if chain != [2, 2]:
        failures += 1
    return SuiteReport("martingale", failures == 0, checks, failures,
                       {"failed": bad[:10], "edge_chain": [str(v) for v in chain]})


CHI2_PARAMS = ((1, 1, 20), (2, 3, 30), (5, 1, 50), (3, 6, 100), (6, 6, 200))


def polya_suite(max_ab: int = 6, max_n: int = 200, chi2_samples: int = 10**6,
                chi2_params=CHI2_PARAMS, master_seed: int = 0, p_min: float = 1e-3) -> SuiteReport:
    """Exact pmf normalization and moment / tail bounds over a grid, plus urn chi-square."""
    checks = failures = 0
    bad = []
    for a in range(1, max_ab + 1):
        for b in range(1, max_ab + 1):
            for n in range(0, max_n + 1):
                p = polya.BetaBinomialParams(a, b, n)
                nums, den = polya._numerators(a, b, n)
                results = {
                    "pmf_sum": sum(nums) == den,
                    "tail": polya.tail_bound_holds(p, 8),
                }
                for order in range(1, 5):
                    results[f"moment{order}"] = polya.moment_bound_check(p, order)
                for name, ok in results.items():
                    checks += 1
                    if not ok:
                        failures += 1
                        bad.append([a, b, n, name])
    chi = []
    for i, (a, b, n) in enumerate(chi2_params):
        p = polya.BetaBinomialParams(a, b, n)
        draws = polya.sample(p, RngStream(master_seed, i).generator, size=chi2_samples)
        counts = np.bincount(draws - a, minlength=n + 1)
        stat, dof, pval = chisquare_gof(counts, polya.pmf_float(p))
        checks += 1
        if not pval > p_min:
            failures += 1
        chi.append({"params": [a, b, n], "chi2": stat, "dof": dof, "p": pval})
    return SuiteReport("polya", failures == 0, checks, failures, {"failed": bad[:10], "chi2": chi})


def edge_law_suite(n: int = 200, samples: int = 20_000, master_seed: int = 0, workers: int = 1,
                   p_min: float = 1e-3) -> SuiteReport:
    """Simulated child-side sizes of seed edges against the urn law."""
    cases = [(path(4), 2), (path(4), 1), (star(4), 1), (path(2), 1), (star(6), 3)]
    out = []
    failures = 0
    for seed, child in cases:
        r = balance_stats.edge_split_law_check(seed, child, n, samples, master_seed, workers)
        ok = r.p_value > p_min
        failures += not ok
        out.append({"seed": canonical_form(seed), "edge_child": child, "chi2": r.chi2,
                    "dof": r.dof, "p": r.p_value})
    return SuiteReport("edge-law", failures == 0, len(cases), failures, {"cases": out})


def diameter_suite(n: int = 10**5, samples: int = 100, master_seed: int = 0,
                   workers: int = 1) -> SuiteReport:
    """Every sampled tree from ``P2`` has diameter at most ``20 log n``."""
    d = run_blocks(DiameterTask((-1, 0), n), samples, master_seed, workers=workers, block_size=10)
    bound = 20 * math.log(n)
    failures = int(np.sum(d > bound))
    return SuiteReport("diameter", failures == 0, samples, failures,
                       {"n": n, "bound": bound, "mean": float(d.mean()), "max": int(d.max())})


def p4s4_suite(n: int = 1000) -> SuiteReport:
    """Urn-moment mean gap equals the cubic closed form for every ``4 <= m <= n``."""
    failures = 0
    for m in range(4, n + 1):
        try:
            balance_stats.exact_mean_diff_p4_s4(m)
        except ArithmeticError:
            failures += 1
    direct = balance_stats.g_total(path(4)) - balance_stats.g_total(star(4))
    checks = n - 2
    if direct != Fraction(7, 256) or balance_stats.exact_mean_diff_p4_s4(4) != direct:
        failures += 1
    return SuiteReport("p4s4", failures == 0, checks, failures,
                       {"n": n, "value_at_n": str(balance_stats.mean_diff_closed_form(n)),
                        "direct_n4": str(direct)})


def run_suite(name: str, n: int | None = None, samples: int | None = None, master_seed: int = 0,
              workers: int = 1) -> SuiteReport:
    """Dispatch by suite name; ``n`` and ``samples`` override suite defaults where meaningful."""
    kw = {}
    if name == "recurrence":
        if samples is not None:
            kw["instances"] = samples
        return recurrence_suite(master_seed=master_seed, **kw)
    if name == "martingale":
        if n is not None:
            kw["max_size"] = n
        return martingale_suite(**kw)
    if name == "polya":
        if samples is not None:
            kw["chi2_samples"] = samples
        if n is not None:
            kw["max_n"] = n
        return polya_suite(master_seed=master_seed, **kw)
    if name == "edge-law":
        if n is not None:
            kw["n"] = n
        if samples is not None:
            kw["samples"] = samples
        return edge_law_suite(master_seed=master_seed, workers=workers, **kw)
    if name == "diameter":
        if n is not None:
            kw["n"] = n
        if samples is not None:
            kw["samples"] = samples
        return diameter_suite(master_seed=master_seed, workers=workers, **kw)
    if name == "p4s4":
        if n is not None:
            kw["n"] = n
        return p4s4_suite(**kw)
    raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
