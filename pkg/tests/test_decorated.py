from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import automorphisms, isomorphic
from seedtrace.decorated import (
    DecoratedTree as D,
    all_decorated,
    dplus_trees,
    enumerate_dplus_below,
    f_tau,
    f_tau_float,
    f_tau_oracle,
    format_decorated,
    one_step_mean,
    parse_decorated,
    partial_order_le,
    partial_order_lt,
    read_decorated,
    recurrence_rhs,
    recurrence_terms,
    reduce_label,
    reduce_leaf,
    verify_recurrence_exact,
    write_decorated,
)
from seedtrace.tree_model import GrowthTree, RngStream, TreeFormatError, all_trees, grow, grow_many, path, star

SMALL_CORPUS = all_decorated(3, 2)


class TestBasics:
    def test_weight_size_classes(self):
        tau = D.path(1, 0, 2)
        assert (tau.size, tau.weight) == (3, 3)
        assert not tau.in_dplus and not tau.in_d0star
        assert D.path(0, 1, 1).in_d0star
        assert D.edge(1, 1).in_dplus

    def test_invalid(self):
        with pytest.raises(ValueError):
            D((1, -1), ((0, 1),))
        with pytest.raises(ValueError):
            D((1, 1, 1), ((0, 1),))
        with pytest.raises(ValueError):
            D((), ())

    def test_canonical_id_label_sensitive(self):
        assert D.path(1, 2, 1).isomorphic(D.from_parents([-1, 0, 0], [2, 1, 1]))
        assert not D.path(2, 1, 1).isomorphic(D.path(1, 2, 1))
        assert D.edge(1, 2).isomorphic(D.edge(2, 1))

    def test_leaves(self):
        assert sorted(D.star(1, 2, 3, 4).leaves()) == [1, 2, 3]
        assert D.vertex(3).leaves() == []


class TestOrder:
    def test_examples(self):
        assert partial_order_lt(D.vertex(1), D.edge(1, 1))
        assert not partial_order_lt(D.edge(1, 1), D.edge(1, 1))
        a = D.path(1, 2, 2)  # size 3, weight 5
        b = D.edge(4, 5)  # size 2, weight 9
        assert not partial_order_lt(a, b) and not partial_order_lt(b, a)

    @given(st.sampled_from(all_decorated(3, 3)), st.data())
    @settings(max_examples=100, deadline=None)
    def test_reductions_go_down(self, tau, data):
        for v in tau.leaves():
            assert partial_order_lt(reduce_leaf(tau, v), tau)
        for v in range(tau.size):
            if tau.labels[v] >= 2:
                assert partial_order_lt(reduce_label(tau, v), tau)


class TestReductions:
    def test_leaf_examples(self):
        assert reduce_leaf(D.edge(1, 1), 0).isomorphic(D.vertex(1))
        assert reduce_leaf(D.edge(1, 1), 1).isomorphic(D.vertex(1))
        assert reduce_leaf(D.path(1, 2, 1), 0).isomorphic(D.edge(2, 1))
        with pytest.raises(ValueError):
            reduce_leaf(D.star(1, 1, 1), 0)

    def test_label_examples(self):
        assert reduce_label(D.vertex(2), 0).isomorphic(D.vertex(1))
        assert reduce_label(D.edge(2, 1), 0).isomorphic(D.edge(1, 1))
        with pytest.raises(ValueError):
            reduce_label(D.edge(1, 1), 0)


class TestStatistic:
    def test_examples(self):
        assert f_tau(D.vertex(2), star(4)) == 48
        assert f_tau(D.vertex(2), path(4)) == 48
        assert f_tau(D.edge(1, 1), path(3)) == 8
        assert f_tau(D.from_tree(star(4), 1), path(4)) == 0
        assert f_tau_oracle(D.edge(1, 1), path(3)) == 8
        assert f_tau_oracle(D.vertex(2), path(3)) == 18
        assert f_tau_oracle(D.vertex(4), path(3)) == 0

    def test_label_above_host_size(self):
        assert f_tau(D.edge(1, 5), path(4)) == 0

    def test_oracle_equivalence_small(self):
        for m in range(2, 7):
            for t in all_trees(m):
                for tau in SMALL_CORPUS:
                    assert f_tau(tau, t) == f_tau_oracle(tau, t)

    @given(st.sampled_from(all_decorated(3, 2)), st.integers(3, 9), st.integers(0, 10**6))
    @settings(max_examples=60, deadline=None)
    def test_oracle_on_grown_trees(self, tau, n, seed):
        t = grow(path(2), n, RngStream(seed))
        assert f_tau(tau, t) == f_tau_oracle(tau, t)

    def test_float_agrees(self):
        t = grow(path(2), 150, RngStream(3))
        for tau in (D.vertex(3), D.edge(1, 2), D.path(1, 1, 1), D.star(2, 1, 1)):
            assert f_tau_float(tau, t) == pytest.approx(f_tau(tau, t), rel=1e-12)

    def test_isomorphism_invariant(self):
        t = grow(path(2), 12, RngStream(1))
        perm = np.random.default_rng(0).permutation(t.n)
        u = GrowthTree.from_edges([(perm[a], perm[b]) for a, b in t.edges()], t.n)
        for tau in all_decorated(3, 2):
            assert f_tau(tau, t) == f_tau(tau, u)

    def test_automorphism_identity(self):
        for m in range(3, 8):
            trees = all_trees(m)
            for t in trees:
                tau = D.from_tree(t, 1)
                aut = automorphisms(t.parent)
                for u in trees:
                    expect = aut if isomorphic(t.parent, u.parent) else 0
                    assert f_tau(tau, u) == expect


class TestRecurrence:
    def test_terms(self):
        assert recurrence_terms(D.edge(1, 1)) == {D.vertex(1).canonical_id: 2}
        assert recurrence_terms(D.edge(2, 2)) == {D.edge(2, 1).canonical_id: 4}
        assert recurrence_terms(D.path(1, 1, 1)) == {D.edge(1, 1).canonical_id: 2}
        with pytest.raises(ValueError):
            recurrence_terms(D.vertex(2))

    def test_zero_labelled_leaf(self):
        # a label-0 leaf is removed with coefficient 1, like a label-1 leaf
        terms = recurrence_terms(D.edge(0, 3))
        assert terms == {D.edge(0, 2).canonical_id: 6, D.vertex(3).canonical_id: 1}

    def test_p3_example(self):
        tau = D.edge(1, 1)
        assert one_step_mean(tau, path(3)) == Fraction(58, 3)
        assert recurrence_rhs(tau, path(3)) == Fraction(58, 3)
        assert verify_recurrence_exact(tau, path(2))

    def test_exhaustive_small(self):
        for m in range(2, 7):
            for t in all_trees(m):
                for tau in all_decorated(3, 2):
                    if tau.size >= 2:
                        assert verify_recurrence_exact(tau, t)

    def test_no_embedding(self):
        assert verify_recurrence_exact(D.from_tree(star(5), 1), path(3))


class TestEnumeration:
    def test_below(self):
        ids = lambda xs: [x.canonical_id for x in xs]
        assert ids(enumerate_dplus_below(D.vertex(1))) == ids([D.vertex(1)])
        assert ids(enumerate_dplus_below(D.edge(1, 1))) == ids([D.vertex(1), D.vertex(2), D.edge(1, 1)])
        assert ids(enumerate_dplus_below(D.vertex(3))) == ids([D.vertex(1), D.vertex(2), D.vertex(3)])

    def test_below_is_down_set_in_order(self):
        tau = D.path(1, 2, 1)
        below = enumerate_dplus_below(tau)
        assert below[-1].isomorphic(tau)
        assert all(partial_order_le(x, tau) and x.in_dplus for x in below)
        keys = [x.order_key() for x in below]
        assert keys == sorted(keys)
        for i, x in enumerate(below):
            assert not any(partial_order_lt(y, x) for y in below[i + 1 :])

    def test_dplus_counts(self):
        # sizes/weights: vertex(1..3), edge(1,1), edge(1,2), path(1,1,1)
        assert len(dplus_trees(3, 3)) == 6
        assert all(max(x.labels) <= 1 for x in dplus_trees(4, 6, label_cap=1))

    def test_all_decorated_unique(self):
        corpus = all_decorated(4, 3)
        assert len({x.canonical_id for x in corpus}) == len(corpus)


class TestFormat:
    def test_round_trip(self, tmp_path):
        tau = D.star(2, 1, 0, 3)
        f = tmp_path / "tau.dt"
        write_decorated(tau, f)
        assert read_decorated(f).isomorphic(tau)
        assert parse_decorated(format_decorated(D.vertex(4))).isomorphic(D.vertex(4))

    @pytest.mark.parametrize("text,line", [("x\n", 1), ("2\n0 0\n1 1\n", 2), ("2\n0\n1\n", 3),
                                           ("2\n0\n1 -1\n", 3), ("3\n0 5\n1 1 1\n", 2)])
    def test_errors(self, text, line):
        with pytest.raises(TreeFormatError) as exc:
            parse_decorated(text)
        assert exc.value.line == line


class TestMomentScaling:
    @pytest.mark.slow
    def test_first_and_second_moment_bands(self):
        tau = D.edge(1, 1)
        first, second = [], []
        for n in (100, 1000, 10_000):
            batch = grow_many(path(2), n, 200, RngStream(n))
            vals = np.array([f_tau_float(tau, row) for row in batch])
            first.append(vals.mean() / n ** tau.weight)
            second.append((vals**2).mean() / n ** (2 * tau.weight))
        assert max(first) / min(first) < 10
        assert max(second) / min(second) < 10
