from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import child_side_sizes, growth_law_by_paths
from seedtrace import balance_stats as bs
from seedtrace._stats import mean_var
from seedtrace.tree_model import GrowthTree, RngStream, grow, path, star


@st.composite
def recursive_trees(draw, max_n=40):
    n = draw(st.integers(2, max_n))
    return GrowthTree([-1] + [draw(st.integers(0, i - 1)) for i in range(1, n)])


def brute_g(parent) -> Fraction:
    n = len(parent)
    return sum((Fraction(s * s * (n - s) * (n - s), n**4)
                for s in child_side_sizes(parent).values()), Fraction(0))


class TestStatistic:
    def test_edge_examples(self):
        assert bs.g_edge(path(4), (1, 2)) == Fraction(1, 16)
        assert bs.g_edge(path(4), 2) == Fraction(1, 16)
        assert all(bs.g_edge(star(4), c) == Fraction(9, 256) for c in (1, 2, 3))
        assert bs.g_edge(path(2), (0, 1)) == Fraction(1, 16)

    def test_non_edge(self):
        with pytest.raises(ValueError):
            bs.g_edge(path(4), (0, 2))
        with pytest.raises(ValueError):
            bs.g_edge(path(4), 4)

    def test_total_examples(self):
        assert bs.g_total(path(4)) == Fraction(17, 128)
        assert bs.g_total(star(4)) == Fraction(27, 256)
        assert bs.g_total(path(2)) == Fraction(1, 16)

    @given(recursive_trees())
    @settings(max_examples=100, deadline=None)
    def test_report_invariants(self, t):
        rep = bs.g_stat(t)
        assert all(0 <= v <= Fraction(1, 16) for v in rep.g_per_edge.values())
        assert rep.g_total == sum(rep.g_per_edge.values())
        assert rep.g_total == brute_g(t.parent)
        assert bs.g_total_float(t) == pytest.approx(float(rep.g_total), rel=1e-14)

    @given(recursive_trees(), st.randoms(use_true_random=False))
    @settings(max_examples=50, deadline=None)
    def test_isomorphism_invariant(self, t, rnd):
        perm = list(range(t.n))
        rnd.shuffle(perm)
        u = GrowthTree.from_edges([(perm[a], perm[b]) for a, b in t.edges()], t.n)
        assert bs.g_total(u) == bs.g_total(t)


class TestExactMeans:
    def test_anchor_values(self):
        assert bs.exact_mean_diff_p4_s4(4) == Fraction(7, 256) == bs.g_total(path(4)) - bs.g_total(star(4))
        assert bs.exact_mean_diff_p4_s4(10) == Fraction(2585, 140000)

    def test_integer_identity(self):
        for n in range(4, 1001):
            assert bs.exact_mean_diff_p4_s4(n) * 140 * n**3 == 2 * n**3 + 5 * n**2 + 8 * n + 5

    def test_limit(self):
        assert abs(bs.mean_diff_closed_form(10**6) - Fraction(1, 70)) < Fraction(1, 10**7)

    def test_small_n_rejected(self):
        with pytest.raises(ValueError):
            bs.exact_mean_diff_p4_s4(3)

    @pytest.mark.parametrize("seed,n", [(path(2), 7), (path(4), 8), (star(4), 8), (star(5), 8)])
    def test_expected_g_matches_path_enumeration(self, seed, n):
        ref = sum(w * brute_g(p) for p, w in growth_law_by_paths(seed.parent.tolist(), n))
        assert bs.expected_g(seed, n) == ref

    def test_expected_g_difference(self):
        for n in (4, 9, 57):
            assert bs.expected_g(path(4), n) - bs.expected_g(star(4), n) == bs.mean_diff_closed_form(n)


class TestMonteCarlo:
    def test_samples_match_exact_mean(self):
        x = bs.g_samples(path(4), 300, 20_000, master_seed=4)
        m, v = mean_var(x)
        assert abs(m - float(bs.expected_g(path(4), 300))) < 4 * np.sqrt(v / x.size)

    def test_samples_match_direct_growth(self):
        x = bs.g_samples(star(4), 50, 10, master_seed=1)
        assert x.shape == (10,)
        assert np.all((x > 0) & (x < 50 / 16))

    def test_edge_law_p2_three(self):
        r = bs.edge_split_law_check(path(2), (0, 1), 3, 4000, master_seed=2)
        assert set(np.nonzero(r.observed)[0]) <= {0, 1}
        assert r.p_value > 1e-3

    @pytest.mark.slow
    @pytest.mark.parametrize("seed,child", [(star(4), 1), (path(4), 2)])
    def test_edge_law_seed_edges(self, seed, child):
        r = bs.edge_split_law_check(seed, child, 100, 10**5, master_seed=3)
        assert r.p_value > 1e-3

    def test_star_same_law_half(self):
        r = bs.star_threshold_test(6, star(6), 300, 4000, master_seed=5)
        assert abs(r.accuracy - 0.5) < 0.03

    @pytest.mark.slow
    def test_star_means_decrease(self):
        means = [bs.star_threshold_test(k, path(4), 2000, 4000, master_seed=6).star_mean
                 for k in (10, 50, 200)]
        assert means[0] > means[1] > means[2]

    @pytest.mark.slow
    def test_variance_not_exploding(self):
        var = [mean_var(bs.g_samples(path(4), n, 10_000, master_seed=7))[1]
               for n in (100, 1000, 10_000)]
        assert all(v <= 3 * var[0] for v in var)

    def test_star_argument_checks(self):
        with pytest.raises(ValueError):
            bs.star_threshold_test(2, path(4), 100, 100, 0)
        with pytest.raises(ValueError):
            bs.star_threshold_test(10, path(4), 5, 100, 0)


def test_g_samples_worker_invariant():
    a = bs.g_samples(path(3), 200, 2500, master_seed=9, workers=1)
    b = bs.g_samples(path(3), 200, 2500, master_seed=9, workers=3)
    assert a.tobytes() == b.tobytes()


def test_direct_growth_agrees_with_task():
    # the block runner draws block 0 from stream (master, 0): first tree identical to grow()
    x = bs.g_samples(path(2), 40, 1, master_seed=12)
    t = grow(path(2), 40, RngStream(12, 0))
    assert x[0] == bs.g_total_float(t)
