"""Telling two seeds apart from the grown tree.

Three layers:

* exact means of ``F_tau`` under growth from a seed, by enumerating growth
  paths (aggregated over isomorphism classes), and the search for the first
  positive-label ``tau`` whose means differ;
* Monte Carlo Paley-Zygmund lower bounds on total variation for a scalar
  statistic (``G`` or a martingale ``M_tau``);
* a calibrated two-seed classifier.
"""

from __future__ import annotations

import hashlib
import math
import os
import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from seedtrace import kernels
from seedtrace._stats import bootstrap_pz, mean_var, pz_bound
from seedtrace.balance_stats import g_samples
from seedtrace.decorated import DecoratedTree, dplus_trees, f_tau
from seedtrace.martingale import MartingaleTable, build_table, evaluate, martingale_samples
from seedtrace.tree_model import GrowthTree, RngStream, as_generator, canonical_form

DEFAULT_BUDGET = 10**7

# arms reserved for trial trees in accuracy runs; reference samples use hashed arms above
_TRIAL_ARM = 7
_TIE_ARM = 8
_REF_ARM_BASE = 1 << 10


class BudgetExceededError(RuntimeError):
    """Exact enumeration would need more growth paths than allowed."""

    def __init__(self, required: int, budget: int):
        super().__init__(f"enumeration needs {required} growth paths, budget is {budget}")
        self.required = required
        self.budget = budget


def path_count(seed_size: int, n: int) -> int:
    """Number of attachment sequences from ``seed_size`` to ``n`` vertices."""
    return math.prod(range(seed_size, n))


def growth_distribution(seed: GrowthTree, n: int,
                        budget: int = DEFAULT_BUDGET) -> dict[str, tuple[GrowthTree, Fraction]]:
    """Exact law of the isomorphism class of ``UA(n, seed)``.

    Every attachment sequence has the same weight; sequences are merged by
    isomorphism class after each step, so the work is far below the raw
    path count, but the budget is still checked against that count.
    """
    if n < seed.n:
        raise ValueError("n is below the seed size")
    need = path_count(seed.n, n)
    if need > budget:
        raise BudgetExceededError(need, budget)
    cur = {canonical_form(seed): (seed, Fraction(1))}
    for m in range(seed.n, n):
        nxt: dict[str, tuple[GrowthTree, Fraction]] = {}
        for rep, p in cur.values():
            q = p / m
            for v in range(m):
                child = rep.attach(v)
                key = canonical_form(child)
                if key in nxt:
                    nxt[key] = (nxt[key][0], nxt[key][1] + q)
                else:
                    nxt[key] = (child, q)
        cur = nxt
    return cur


def _expect_over(dist, tau: DecoratedTree) -> Fraction:
    return sum((p * f_tau(tau, rep) for rep, p in dist.values()), Fraction(0))


def exact_expected_f(seed: GrowthTree, n: int, tau: DecoratedTree,
                     budget: int = DEFAULT_BUDGET) -> Fraction:
    """``E[F_tau(UA(n, seed))]`` as an exact rational."""
    return _expect_over(growth_distribution(seed, n, budget), tau)


def witness(s: GrowthTree, t: GrowthTree) -> DecoratedTree:
    """All-ones labelling of the larger seed (ties broken by canonical form)."""
    big = max((s, t), key=lambda x: (x.n, canonical_form(x)))
    return DecoratedTree.from_tree(big, 1)


def mean_gap(s: GrowthTree, t: GrowthTree, tau: DecoratedTree, n: int | None = None,
             budget: int = DEFAULT_BUDGET) -> Fraction:
    """``E[F_tau]`` under seed ``t`` minus the same under seed ``s``, at ``n``."""
    n = max(s.n, t.n) if n is None else n
    return exact_expected_f(t, n, tau, budget) - exact_expected_f(s, n, tau, budget)


@dataclass
class SeparationResult:
    tau: DecoratedTree | None
    gap: Fraction | None
    mean_s: Fraction | None
    mean_t: Fraction | None
    n0: int
    searched: int
    label_cap: int | None
    cap_binds: bool

    def to_dict(self) -> dict:
        return {
            "tau": None if self.tau is None else self.tau.canonical_id,
            "gap": None if self.gap is None else str(self.gap),
            "mean_s": None if self.mean_s is None else str(self.mean_s),
            "mean_t": None if self.mean_t is None else str(self.mean_t),
            "n0": self.n0,
            "searched": self.searched,
            "label_cap": self.label_cap,
            "cap_binds": self.cap_binds,
        }


def separation_search(s: GrowthTree, t: GrowthTree, label_cap: int | None = None,
                      budget: int = DEFAULT_BUDGET) -> SeparationResult:
    """Scan positive-label trees in linear-extension order up to the witness.

    Means are compared at ``n0 = max(|s|, |t|)``. ``cap_binds`` is set when
    the label cap removed candidates that lie before the witness.
    """
    if canonical_form(s) == canonical_form(t):
        raise ValueError("seeds are isomorphic; nothing to separate")
    if s.n < 3 or t.n < 3:
        raise ValueError("seeds need at least 3 vertices")
    n0 = max(s.n, t.n)
    ds = growth_distribution(s, n0, budget)
    dt = growth_distribution(t, n0, budget)
    wit = witness(s, t)
    stop = wit.order_key()
    full = [x for x in dplus_trees(wit.size, wit.weight) if x.order_key() <= stop]
    cands = full if label_cap is None else [x for x in full if max(x.labels) <= label_cap]
    cap_binds = len(cands) < len(full)
    for k, tau in enumerate(cands, 1):
        ms, mt = _expect_over(ds, tau), _expect_over(dt, tau)
        if ms != mt:
            return SeparationResult(tau, mt - ms, ms, mt, n0, k, label_cap, cap_binds)
    return SeparationResult(None, None, None, None, n0, len(cands), label_cap, cap_binds)


def find_separating_tau(s: GrowthTree, t: GrowthTree, label_cap: int | None = None,
                        budget: int = DEFAULT_BUDGET) -> DecoratedTree | None:
    return separation_search(s, t, label_cap, budget).tau


# ------------------------------------------------------------------------
# statistics


class Statistic:
    """A scalar tree statistic that can be evaluated and sampled."""

    ident: str

    def value(self, tree) -> float:
        raise NotImplementedError

    def sample(self, seed: GrowthTree, n: int, samples: int, master_seed: int, arm: int,
               workers: int) -> np.ndarray:
        raise NotImplementedError


class GStatistic(Statistic):
    ident = "G"

    def value(self, tree) -> float:
        par = tree.parent if isinstance(tree, GrowthTree) else tree
        return float(kernels.g_total(np.asarray(par, dtype=np.int64)))

    def sample(self, seed, n, samples, master_seed, arm, workers):
        return g_samples(seed, n, samples, master_seed, arm=arm, workers=workers)


class MartingaleStatistic(Statistic):
    def __init__(self, table: MartingaleTable):
        self.table = table
        self.ident = f"M{table.tau.canonical_id}"

    def value(self, tree) -> float:
        return float(evaluate(self.table, tree).value)

    def sample(self, seed, n, samples, master_seed, arm, workers):
        return martingale_samples(self.table, seed, [n], samples, master_seed, arm=arm,
                                  workers=workers)[:, 0]


def make_statistic(statistic, seeds: list[GrowthTree], n: int) -> Statistic:
    """``"G"``, a ``DecoratedTree`` (float table built on demand) or a table."""
    if isinstance(statistic, Statistic):
        return statistic
    if statistic is None or statistic == "G":
        return GStatistic()
    if isinstance(statistic, DecoratedTree):
        if not statistic.in_dplus:
            raise ValueError("martingale statistics need positive labels")
        statistic = build_table(statistic, min(x.n for x in seeds), n, exact=False)
    if isinstance(statistic, MartingaleTable):
        if statistic.n0 > min(x.n for x in seeds) or statistic.n_max < n:
            raise ValueError("table range does not cover the seeds and n")
        return MartingaleStatistic(statistic)
    raise ValueError(f"unknown statistic {statistic!r}")


# ------------------------------------------------------------------------
# TV lower bound


@dataclass
class TVReport:
    statistic: str
    seed_s: str
    seed_t: str
    n: int
    samples: int
    mean_s: float
    mean_t: float
    var_s: float
    var_t: float
    pz_lower_bound: float
    pz_ci: tuple[float, float]
    classifier_accuracy: float
    warnings: list[str] = field(default_factory=list)

    def recomputed_bound(self) -> float:
        return pz_bound(self.mean_s, self.mean_t, self.var_s, self.var_t)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["pz_ci"] = list(self.pz_ci)
        d["pz_is_estimate"] = True
        return d


def _threshold_accuracy(a: np.ndarray, b: np.ndarray) -> float:
    """Empirical accuracy of the midpoint-of-medians threshold test, oriented by the means."""
    theta = 0.5 * (float(np.median(a)) + float(np.median(b)))
    if a.mean() <= b.mean():
        acc = 0.5 * (np.mean(a < theta) + np.mean(b >= theta))
    else:
        acc = 0.5 * (np.mean(a >= theta) + np.mean(b < theta))
    return float(max(acc, 0.5))


def tv_lower_bound(s: GrowthTree, t: GrowthTree, statistic="G", n: int = 1000,
                   samples: int = 10_000, master_seed: int = 0, workers: int = 1,
                   bootstrap: int = 200) -> TVReport:
    """Plug-in Paley-Zygmund bound on ``TV(UA(n,s), UA(n,t))``.

    The bound uses empirical moments, so it is an estimate of a lower bound;
    a percentile bootstrap interval is attached.
    """
    if n < max(s.n, t.n):
        raise ValueError("n must be at least the larger seed size")
    if samples < 100:
        raise ValueError("need at least 100 samples per seed")
    stat = make_statistic(statistic, [s, t], n)
    xs = stat.sample(s, n, samples, master_seed, 0, workers)
    xt = stat.sample(t, n, samples, master_seed, 1, workers)
    ms, vs = mean_var(xs)
    mt, vt = mean_var(xt)
    notes = []
    if canonical_form(s) == canonical_form(t):
        notes.append("seeds are isomorphic; the bound only reflects sampling noise")
    ci = bootstrap_pz(xs, xt, bootstrap, master_seed) if bootstrap > 0 else (float("nan"),) * 2
    return TVReport(stat.ident, canonical_form(s), canonical_form(t), n, samples, ms, mt, vs, vt,
                    pz_bound(ms, mt, vs, vt), ci, _threshold_accuracy(xs, xt), notes)


# ------------------------------------------------------------------------
# classification


def _ref_arm(stat_id: str, seed_id: str) -> int:
    return _REF_ARM_BASE + zlib.crc32(f"{stat_id}|{seed_id}".encode()) % (1 << 20)


def reference_samples(stat: Statistic, seed: GrowthTree, n: int, calibration: int,
                      master_seed: int, workers: int = 1,
                      cache_dir: str | os.PathLike | None = None) -> np.ndarray:
    """Sorted reference draws of the statistic under growth from ``seed``.

    Cached as ``.npy`` under ``cache_dir`` (default ``$SEEDTRACE_CACHE_DIR``)
    keyed by seed class, ``n``, statistic, master seed and sample count.
    """
    seed_id = canonical_form(seed)
    cache_dir = cache_dir if cache_dir is not None else os.environ.get("SEEDTRACE_CACHE_DIR")
    path = None
    if cache_dir:
        key = f"{seed_id}|{n}|{stat.ident}|{master_seed}|{calibration}"
        path = Path(cache_dir) / f"ref-{hashlib.sha256(key.encode()).hexdigest()[:24]}.npy"
        if path.exists():
            return np.load(path)
    ref = np.sort(stat.sample(seed, n, calibration, master_seed, _ref_arm(stat.ident, seed_id),
                              workers))
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp.npy")
        np.save(tmp, ref)
        os.replace(tmp, path)
    return ref


def mid_cdf(ref: np.ndarray, x) -> np.ndarray:
    """``P(X < x) + P(X = x) / 2`` under the sorted empirical sample ``ref``."""
    lo = np.searchsorted(ref, x, side="left")
    hi = np.searchsorted(ref, x, side="right")
    return (lo + hi) / (2.0 * ref.size)


@dataclass
class ClassifyReport:
    statistic: str
    value: float
    choice: int  # 0 for s, 1 for t
    chosen_seed: str
    mid_cdf_s: float
    mid_cdf_t: float
    tail_s: float  # two-sided empirical tail probability under s
    tail_t: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _decide(us: np.ndarray, ut: np.ndarray, coins: np.ndarray) -> np.ndarray:
    ds = np.abs(us - 0.5)
    dt = np.abs(ut - 0.5)
    return np.where(ds < dt, 0, np.where(dt < ds, 1, coins))


def classify(sample_tree: GrowthTree, s: GrowthTree, t: GrowthTree, statistic="G",
             calibration: int = 10_000, master_seed: int = 0, workers: int = 1,
             rng=None, cache_dir=None) -> ClassifyReport:
    """Pick the seed under which the observed statistic sits nearest the median.

    Each candidate's reference distribution gives the empirical mid-CDF of
    the observed value; the candidate whose mid-CDF is closer to 1/2 wins,
    exact ties are broken by a fair coin from ``rng``.
    """
    n = sample_tree.n
    stat = make_statistic(statistic, [s, t], n)
    rs = reference_samples(stat, s, n, calibration, master_seed, workers, cache_dir)
    rt = reference_samples(stat, t, n, calibration, master_seed, workers, cache_dir)
    x = stat.value(sample_tree)
    us, ut = float(mid_cdf(rs, x)), float(mid_cdf(rt, x))
    gen = RngStream(master_seed, _TIE_ARM).generator if rng is None else as_generator(rng)
    choice = int(_decide(np.array([us]), np.array([ut]), gen.integers(0, 2, 1))[0])
    return ClassifyReport(stat.ident, x, choice, canonical_form((s, t)[choice]), us, ut,
                          2 * min(us, 1 - us), 2 * min(ut, 1 - ut))


@dataclass
class AccuracyReport:
    statistic: str
    true_seed: str
    n: int
    trials: int
    calibration: int
    correct: int
    accuracy: float
    stderr: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def classification_accuracy(true_seed: GrowthTree, s: GrowthTree, t: GrowthTree, n: int,
                            trials: int, calibration: int = 10_000, master_seed: int = 0,
                            statistic="G", workers: int = 1, cache_dir=None) -> AccuracyReport:
    """Fraction of trees grown from ``true_seed`` that ``classify`` assigns correctly.

    A choice counts as correct when the chosen candidate is isomorphic to
    ``true_seed``; with ``s`` and ``t`` isomorphic, choosing ``s`` counts.
    """
    stat = make_statistic(statistic, [s, t, true_seed], n)
    rs = reference_samples(stat, s, n, calibration, master_seed, workers, cache_dir)
    rt = reference_samples(stat, t, n, calibration, master_seed, workers, cache_dir)
    xs = stat.sample(true_seed, n, trials, master_seed, _TRIAL_ARM, workers)
    coins = RngStream(master_seed, _TIE_ARM).generator.integers(0, 2, trials)
    choice = _decide(mid_cdf(rs, xs), mid_cdf(rt, xs), coins)
    truth = canonical_form(true_seed)
    if canonical_form(s) == truth:
        correct = int(np.sum(choice == 0))
    elif canonical_form(t) == truth:
        correct = int(np.sum(choice == 1))
    else:
        raise ValueError("true seed matches neither candidate")
    acc = correct / trials
    return AccuracyReport(stat.ident, truth, n, trials, calibration, correct, acc,
                          math.sqrt(max(acc * (1 - acc), 0.25 / trials) / trials))
