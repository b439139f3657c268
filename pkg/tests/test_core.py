import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wmtest.core import (
    Dataset,
    DimensionError,
    MetricError,
    MetricSpec,
    SupportMismatchError,
    as_distribution,
    cost_matrix,
    optimal_simple_test,
    pool,
    risk,
    simple_risk,
    total_variation,
)


def test_pool_toy():
    s = pool(Dataset.h0([-2.0]), Dataset.h1([1.0, 3.0]))
    assert s.n == 3
    np.testing.assert_array_equal(s.q1, [1, 0, 0])
    np.testing.assert_array_equal(s.q2, [0, 0.5, 0.5])
    np.testing.assert_array_equal(s.origin1, [0, -1, -1])
    np.testing.assert_array_equal(s.origin2, [-1, 0, 1])


def test_pool_merges_cross_class_duplicates():
    s = pool(Dataset.h0([0.0]), Dataset.h1([0.0]))
    assert s.n == 1
    assert s.q1.tolist() == [1.0] and s.q2.tolist() == [1.0]

    s = pool(Dataset.h0([0.0, 1.0]), Dataset.h1([1.0, 2.0]))
    assert s.n == 3
    np.testing.assert_array_equal(s.q1, [0.5, 0.5, 0])
    np.testing.assert_array_equal(s.q2, [0, 0.5, 0.5])


def test_pool_signed_zero_and_within_class_duplicates():
    s = pool(Dataset.h0([0.0, -0.0]), Dataset.h1([1.0]))
    assert s.n == 2
    np.testing.assert_array_equal(s.q1, [1.0, 0.0])


def test_pool_errors():
    with pytest.raises(DimensionError):
        pool(Dataset.h0([[0.0, 1.0]]), Dataset.h1([[1.0]]))
    with pytest.raises(ValueError):
        Dataset.h0(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        Dataset.h0([np.nan])


def test_pool_permutation_invariance():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(6, 2)), rng.normal(size=(5, 2))
    s = pool(Dataset.h0(a), Dataset.h1(b))
    pa, pb = rng.permutation(6), rng.permutation(5)
    t = pool(Dataset.h0(a[pa]), Dataset.h1(b[pb]))
    key = lambda sup: sorted(zip(map(tuple, sup.points), sup.q1, sup.q2))
    assert key(s) == key(t)


def test_cost_matrix_examples():
    s = pool(Dataset.h0([-2.0]), Dataset.h1([1.0, 3.0]))
    c = cost_matrix(s)
    assert (c[0, 1], c[0, 2], c[1, 2]) == (3.0, 5.0, 2.0)
    assert cost_matrix(pool(Dataset.h0([4.0]), Dataset.h1([4.0]))).tolist() == [[0.0]]
    c = cost_matrix(pool(Dataset.h0([[0.0, 0.0]]), Dataset.h1([[3.0, 4.0]])))
    assert c[0, 1] == 5.0
    assert not c.flags.writeable


def test_cost_matrix_metric_axioms_exhaustive():
    rng = np.random.default_rng(1)
    s = pool(Dataset.h0(rng.normal(size=(25, 3))), Dataset.h1(rng.normal(size=(25, 3))))
    c = cost_matrix(s)
    assert np.all(c >= 0) and np.all(np.diag(c) == 0) and np.array_equal(c, c.T)
    n = s.n
    for i, j, k in itertools.product(range(n), repeat=3):
        assert c[i, k] <= c[i, j] + c[j, k] + 1e-12


def test_cost_matrix_rejects_bad_metrics():
    s = pool(Dataset.h0([0.0]), Dataset.h1([1.0]))
    with pytest.raises(MetricError):
        cost_matrix(s, MetricSpec("neg", lambda x, y: -np.abs(x - y.T)))
    with pytest.raises(MetricError):
        cost_matrix(s, MetricSpec("nan", lambda x, y: np.full((len(x), len(y)), np.nan)))
    with pytest.raises(MetricError):
        cost_matrix(s, MetricSpec("asym", lambda x, y: np.array([[0.0, 1.0], [2.0, 0.0]])))


def test_tv_and_simple_risk_examples():
    p, q = [0.69, 0.28, 0.03], [0.29, 0.28, 0.43]
    assert total_variation(p, p) == 0
    assert total_variation([1, 0], [0, 1]) == 1
    assert total_variation(p, q) == pytest.approx(0.40, abs=1e-12)
    assert simple_risk(p, q) == pytest.approx(0.60, abs=1e-12)
    assert simple_risk(p, p) == pytest.approx(1.0)
    assert simple_risk([1, 0], [0, 1]) == 0
    with pytest.raises(SupportMismatchError):
        total_variation([1.0], [0.5, 0.5])


def test_risk_examples():
    p, q = np.array([0.5, 0.3, 0.2]), np.array([0.1, 0.3, 0.6])
    assert risk(np.ones(3), p, q) == pytest.approx(1.0)
    assert risk(np.zeros(3), p, q) == pytest.approx(1.0)
    assert risk(optimal_simple_test(p, q), p, q) == pytest.approx(simple_risk(p, q))
    with pytest.raises(ValueError):
        risk([1.2, 0, 0], p, q)


def test_as_distribution():
    np.testing.assert_allclose(as_distribution([0.5, 0.5 + 1e-10]).sum(), 1.0)
    with pytest.raises(ValueError):
        as_distribution([0.5, 0.6])
    with pytest.raises(SupportMismatchError):
        as_distribution([1.0], n=2)


dists = st.integers(1, 8).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(0, 1), min_size=n, max_size=n),
        st.lists(st.floats(0, 1), min_size=n, max_size=n),
        st.lists(st.floats(0, 1), min_size=n, max_size=n),
    )
)


@settings(max_examples=200, deadline=None)
@given(dists)
def test_tv_identity_and_likelihood_test_optimality(data):
    a, b, pi = (np.asarray(v) for v in data)
    if a.sum() == 0 or b.sum() == 0:
        return
    p, q = a / a.sum(), b / b.sum()
    assert abs(simple_risk(p, q) + total_variation(p, q) - 1.0) <= 1e-12
    assert risk(pi, p, q) >= simple_risk(p, q) - 1e-12
