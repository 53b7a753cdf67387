from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import growth_law_by_paths
from seedtrace._stats import pz_bound
from seedtrace.decorated import DecoratedTree as D, f_tau
from seedtrace.distinguish import (
    BudgetExceededError,
    classification_accuracy,
    classify,
    exact_expected_f,
    find_separating_tau,
    growth_distribution,
    mean_gap,
    reference_samples,
    separation_search,
    tv_lower_bound,
    witness,
    GStatistic,
)
from seedtrace.martingale import build_table
from seedtrace.tree_model import GrowthTree, canonical_form, path, star


class TestExactMeans:
    def test_examples(self):
        assert exact_expected_f(path(2), 3, D.edge(1, 1)) == 8
        assert exact_expected_f(path(3), 4, D.edge(1, 1)) == Fraction(58, 3)
        t = GrowthTree([-1, 0, 0, 2, 2])
        assert exact_expected_f(t, 5, D.path(1, 2, 1)) == f_tau(D.path(1, 2, 1), t)

    def test_class_law(self):
        law = growth_distribution(path(3), 4)
        assert law[canonical_form(path(4))][1] == Fraction(2, 3)
        assert law[canonical_form(star(4))][1] == Fraction(1, 3)
        assert sum(p for _, p in growth_distribution(star(4), 8).values()) == 1

    @pytest.mark.parametrize("seed,n,tau", [
        (path(3), 7, D.path(1, 2, 1)),
        (star(4), 7, D.edge(2, 1)),
        (path(2), 7, D.star(1, 1, 1, 1)),
    ])
    def test_matches_raw_path_enumeration(self, seed, n, tau):
        ref = sum(w * f_tau(tau, GrowthTree(p)) for p, w in growth_law_by_paths(seed.parent.tolist(), n))
        assert exact_expected_f(seed, n, tau) == ref

    def test_budget(self):
        with pytest.raises(BudgetExceededError) as exc:
            exact_expected_f(path(3), 12, D.edge(1, 1), budget=1000)
        assert exc.value.required == 3 * 4 * 5 * 6 * 7 * 8 * 9 * 10 * 11

    def test_monte_carlo_agreement(self):
        from seedtrace.decorated import f_tau_float
        from seedtrace.tree_model import RngStream, grow_many

        tau = D.path(1, 1, 1)
        batch = grow_many(path(3), 9, 20_000, RngStream(3))
        vals = np.array([f_tau_float(tau, r) for r in batch])
        exact = float(exact_expected_f(path(3), 9, tau))
        assert abs(vals.mean() - exact) < 4 * vals.std(ddof=1) / np.sqrt(vals.size)


class TestSeparation:
    def test_witness_gaps(self):
        assert mean_gap(path(3), path(4), witness(path(3), path(4))) == Fraction(2, 3)
        w = witness(path(4), star(4))
        assert exact_expected_f(star(4), 4, w) == 6  # automorphisms of S4
        assert exact_expected_f(path(4), 4, w) == 0

    @pytest.mark.parametrize("s,t", [(path(4), star(4)), (path(3), path(4)), (path(3), star(4)),
                                     (path(5), star(5)), (star(4), path(6))])
    def test_search_returns_exact_gap(self, s, t):
        r = separation_search(s, t)
        assert r.tau is not None and r.tau.in_dplus
        assert isinstance(r.gap, Fraction) and r.gap != 0
        assert r.gap == mean_gap(s, t, r.tau)
        assert r.tau.order_key() <= witness(s, t).order_key()

    def test_earlier_candidates_agree(self):
        from seedtrace.decorated import dplus_trees

        s, t = path(5), star(5)
        r = separation_search(s, t)
        for x in dplus_trees(r.tau.size, r.tau.weight):
            if x.order_key() < r.tau.order_key():
                assert mean_gap(s, t, x) == 0

    def test_isomorphic_rejected(self):
        with pytest.raises(ValueError):
            find_separating_tau(path(4), GrowthTree([-1, 0, 0, 1]))
        with pytest.raises(ValueError):
            find_separating_tau(path(2), path(3))

    def test_cap_reported(self):
        r = separation_search(path(3), path(4), label_cap=1)
        assert r.cap_binds
        assert r.tau is not None
        assert not separation_search(path(3), path(4), label_cap=4).cap_binds


class TestTV:
    def test_formula_properties(self):
        assert pz_bound(1.0, 2.0, 0.0, 0.0) == 1.0
        assert pz_bound(1.0, 1.0, 0.3, 0.2) == 0.0
        base = pz_bound(0.3, 0.5, 0.04, 0.09)
        assert 0 <= base <= 1
        a, b = 7.5, -3.0
        assert pz_bound(a * 0.3 + b, a * 0.5 + b, a * a * 0.04, a * a * 0.09) == pytest.approx(base, rel=1e-12)

    def test_degenerate_zero_variance(self):
        r = tv_lower_bound(path(4), star(4), "G", 4, 100, master_seed=0, bootstrap=0)
        assert r.var_s == r.var_t == 0
        assert r.pz_lower_bound == 1.0
        assert r.classifier_accuracy == 1.0

    def test_same_seed_near_zero(self):
        r = tv_lower_bound(path(4), GrowthTree([-1, 0, 0, 1]), "G", 300, 5000, master_seed=1)
        assert r.pz_lower_bound < 0.005
        assert r.warnings
        assert r.pz_lower_bound == r.recomputed_bound()

    def test_report_fields(self):
        r = tv_lower_bound(path(4), star(4), "G", 200, 2000, master_seed=2, bootstrap=50)
        d = r.to_dict()
        assert d["pz_is_estimate"] and 0 <= d["pz_lower_bound"] <= 1
        assert 0.5 <= d["classifier_accuracy"] <= 1
        lo, hi = r.pz_ci
        assert lo <= hi

    def test_martingale_statistic(self):
        r = tv_lower_bound(path(4), star(4), D.edge(1, 1), 100, 300, master_seed=3, bootstrap=20)
        assert r.statistic.startswith("M")
        table = build_table(D.edge(1, 1), 4, 100, exact=False)
        r2 = tv_lower_bound(path(4), star(4), table, 100, 300, master_seed=3, bootstrap=20)
        assert (r.mean_s, r.mean_t) == (r2.mean_s, r2.mean_t)

    def test_argument_checks(self):
        with pytest.raises(ValueError):
            tv_lower_bound(path(4), star(4), "G", 3, 1000)
        with pytest.raises(ValueError):
            tv_lower_bound(path(4), star(4), "G", 10, 50)
        with pytest.raises(ValueError):
            tv_lower_bound(path(4), star(4), "X", 10, 100)


class TestClassify:
    def test_at_seed_size(self):
        rep = classify(path(4), path(4), star(4), calibration=200, master_seed=0)
        assert rep.choice == 0
        rep = classify(star(4), path(4), star(4), calibration=200, master_seed=0)
        assert rep.choice == 1
        acc = classification_accuracy(path(4), path(4), star(4), 4, 100, 200, master_seed=0)
        assert acc.accuracy == 1.0

    def test_same_candidates_half(self):
        acc = classification_accuracy(path(4), path(4), path(4), 200, 4000, 2000, master_seed=1)
        assert abs(acc.accuracy - 0.5) < 4 * np.sqrt(0.25 / 4000)

    def test_cache(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SEEDTRACE_CACHE_DIR", str(tmp_path))
        a = reference_samples(GStatistic(), path(4), 100, 300, 5)
        files = list(tmp_path.glob("ref-*.npy"))
        assert len(files) == 1
        b = reference_samples(GStatistic(), path(4), 100, 300, 5)
        assert np.array_equal(a, b)
        assert np.all(np.diff(a) >= 0)

    def test_report_tails(self):
        rep = classify(GrowthTree([-1, 0, 1, 2, 3, 2]), path(4), star(4), calibration=500, master_seed=2)
        assert 0 <= rep.tail_s <= 1 and 0 <= rep.tail_t <= 1
        assert rep.chosen_seed in (canonical_form(path(4)), canonical_form(star(4)))

    @given(st.floats(0, 1), st.floats(0, 1))
    @settings(max_examples=50, deadline=None)
    def test_decision_rule_symmetric(self, us, ut):
        from seedtrace.distinguish import _decide

        c = _decide(np.array([us]), np.array([ut]), np.array([0]))[0]
        d = _decide(np.array([ut]), np.array([us]), np.array([1]))[0]
        assert c == 1 - d

    def test_unknown_truth(self):
        with pytest.raises(ValueError):
            classification_accuracy(star(5), path(4), star(4), 20, 10, 10)

    @pytest.mark.slow
    def test_star_vs_path(self):
        acc = classification_accuracy(star(200), star(200), path(4), 2000, 1000, 10_000, master_seed=4)
        assert acc.accuracy > 0.9
