import math

import numpy as np
import pytest

from oracles import brute_nn_statistic
from wmtest.core import Dataset
from wmtest.radius import (
    DensityOracle,
    Method,
    RadiusReport,
    Region,
    RegionMassError,
    ThresholdOracle,
    UndefinedStatisticError,
    asymptotic_constant,
    cv_select_radius,
    default_grid,
    nn_cross_statistic,
    nn_prefactor,
    nn_radius_report,
    stratified_folds,
    unit_ball_volume,
)
from wmtest.robust import KernelSpec


def _uniform(rng, size):
    return rng.random((size, 1))


def _unit_density(x):
    return np.ones(len(x))


def test_spec_example():
    d1, d2 = Dataset.h0([-1.0, 0.5]), Dataset.h1([1.0, 2.0])
    assert nn_cross_statistic(d1, d2, ThresholdOracle(0.0)) == 0.25


def test_no_misplaced_points():
    assert nn_cross_statistic(Dataset.h0([-1.0, -2.0]), Dataset.h1([1.0]), ThresholdOracle(0.0)) == 0.0


def test_undefined_statistic():
    with pytest.raises(UndefinedStatisticError):
        nn_cross_statistic(Dataset.h0([1.0]), Dataset.h1([-1.0]), ThresholdOracle(0.0))


def test_oracle_callable_without_many():
    def plain(omega):
        return Region.REGION1 if omega[0] < 0 else Region.REGION2

    d1, d2 = Dataset.h0([-1.0, 0.5]), Dataset.h1([1.0, 2.0])
    assert nn_cross_statistic(d1, d2, plain) == 0.25
    with pytest.raises(ValueError):
        nn_cross_statistic(d1, d2, lambda w: 3)


def test_matches_brute_force():
    rng = np.random.default_rng(2024)
    done = 0
    while done < 200:
        d = int(rng.integers(1, 6))
        x1 = rng.normal(size=(rng.integers(1, 31), d))
        x2 = rng.normal(size=(rng.integers(1, 31), d)) + rng.normal(scale=0.5)
        oracle = ThresholdOracle(float(rng.normal(scale=0.3)), int(rng.integers(d)))
        r1 = oracle.many(x1)
        r2 = oracle.many(x2)
        if ((r1 == 2).any() and not (r2 == 2).any()) or ((r2 == 1).any() and not (r1 == 1).any()):
            continue
        dist = lambda a, b: math.sqrt(math.fsum((a - b) ** 2))
        want = brute_nn_statistic(x1, x2, r1, r2, dist)
        got = nn_cross_statistic(Dataset.h0(x1), Dataset.h1(x2), oracle)
        assert got == pytest.approx(want, rel=1e-12, abs=1e-15)
        done += 1


def test_identical_datasets_split_evenly():
    x = np.array([[-1.5], [-0.5], [0.5], [1.5]])
    got = nn_cross_statistic(Dataset.h0(x), Dataset.h1(x), ThresholdOracle(0.0))
    dist = lambda a, b: abs(float(a[0] - b[0]))
    r = ThresholdOracle(0.0).many(x)
    assert got == brute_nn_statistic(x, x, r, r, dist) == 0.0


def test_scaling():
    rng = np.random.default_rng(5)
    x1, x2 = rng.normal(size=(20, 3)), rng.normal(size=(15, 3)) + 0.3
    base = nn_cross_statistic(Dataset.h0(x1), Dataset.h1(x2), ThresholdOracle(0.0))
    for s in (0.25, 3.0, 10.0):
        v = nn_cross_statistic(Dataset.h0(s * x1), Dataset.h1(s * x2), ThresholdOracle(0.0))
        assert v == pytest.approx(s * base, rel=1e-12)


def test_decay_in_sample_size():
    rng = np.random.default_rng(11)
    oracle = ThresholdOracle(0.5)
    means = []
    for n in (10, 40, 160):
        vals = []
        for _ in range(200):
            x1 = rng.random(n)
            x2 = rng.random(n)
            try:
                vals.append(nn_cross_statistic(Dataset.h0(x1), Dataset.h1(x2), oracle))
            except UndefinedStatisticError:
                continue
        means.append(np.mean(vals))
    assert means[0] >= means[1] >= means[2]


def test_prefactor_closed_forms():
    assert nn_prefactor(1) == pytest.approx(0.5, abs=1e-12)
    assert nn_prefactor(2) == pytest.approx(0.5, abs=1e-12)
    v3 = 4.0 / 3.0 * math.pi
    assert nn_prefactor(3) == pytest.approx(math.gamma(4 / 3) / v3 ** (1 / 3), abs=1e-12)
    assert unit_ball_volume(2) == pytest.approx(math.pi, abs=1e-14)
    with pytest.raises(ValueError):
        nn_prefactor(0)


def test_asymptotic_constant_uniform():
    oracle = ThresholdOracle(0.5)
    v, se = asymptotic_constant(1, 1.0, _unit_density, _unit_density, oracle, _uniform, _uniform,
                                mc_samples=10_000, seed=3, return_stderr=True)
    assert abs(v - 0.5) <= 3 * se + 1e-12


def test_asymptotic_constant_errors():
    oracle = ThresholdOracle(0.5)
    with pytest.raises(ValueError):
        asymptotic_constant(1, 1.0, _unit_density, _unit_density, oracle, _uniform, _uniform, mc_samples=100)
    with pytest.raises(ValueError):
        asymptotic_constant(1, 1.0, _unit_density, lambda x: np.zeros(len(x)), oracle, _uniform, _uniform)
    with pytest.raises(RegionMassError):
        asymptotic_constant(1, 1.0, _unit_density, _unit_density, ThresholdOracle(-1.0), _uniform, _uniform)


def test_density_oracle():
    oracle = DensityOracle(lambda x: np.exp(-x[:, 0] ** 2), lambda x: np.exp(-(x[:, 0] - 2) ** 2))
    assert oracle([0.0]) is Region.REGION1 and oracle([2.0]) is Region.REGION2
    assert oracle([1.0]) is Region.REGION1  # equal densities go to region 1


def test_report_and_ratio_flag():
    r = nn_radius_report(Dataset.h0([-1.0, 0.5]), Dataset.h1([1.0, 2.0]), ThresholdOracle(0.0))
    assert r.method is Method.NN_STATISTIC and r.suggested_theta == r.g_sup == 0.25 and not r.ratio_flagged
    r = nn_radius_report(Dataset.h0(np.linspace(-2, -1, 20)), Dataset.h1([1.0, 2.0]), ThresholdOracle(0.0))
    assert r.ratio == pytest.approx(0.1) and r.ratio_flagged
    with pytest.raises(ValueError):
        RadiusReport(1.0, Method.NN_STATISTIC, g_sup=-1.0)


def _gauss_pair(seed, n=15, gap=4.0):
    rng = np.random.default_rng(seed)
    return Dataset.h0(rng.normal(size=n)), Dataset.h1(rng.normal(size=n) + gap)


def test_cv_singleton_grid():
    d1, d2 = _gauss_pair(0, n=6)
    r = cv_select_radius(d1, d2, [0.37], folds=3)
    assert r.suggested_theta == 0.37 and r.method is Method.CROSS_VALIDATION and r.g_sup is None


def test_cv_errors():
    d1, d2 = _gauss_pair(0, n=4)
    with pytest.raises(ValueError):
        cv_select_radius(d1, d2, [], folds=2)
    with pytest.raises(ValueError):
        cv_select_radius(d1, d2, [0.1], folds=5)
    with pytest.raises(ValueError):
        cv_select_radius(d1, d2, [0.1], folds=1)
    with pytest.raises(ValueError):
        cv_select_radius(d1, d2, [-0.1], folds=2)


def test_folds_are_stratified_and_order_free():
    d1, d2 = _gauss_pair(1, n=13)
    a1, a2 = stratified_folds(d1, d2, 4, seed=9)
    assert sorted(np.bincount(a1)) == [3, 3, 3, 4] and sorted(np.bincount(a2)) == [3, 3, 3, 4]
    perm = np.random.default_rng(0).permutation(13)
    b1, _ = stratified_folds(Dataset.h0(d1.samples[perm]), d2, 4, seed=9)
    np.testing.assert_array_equal(b1, a1[perm])


def test_cv_well_separated_and_deterministic():
    d1, d2 = _gauss_pair(2)
    grid = [0.01, 0.1, 1.0, 10.0]
    k = KernelSpec("gaussian", 0.5)
    r = cv_select_radius(d1, d2, grid, folds=3, seed=4, kernel=k)
    table = dict(r.cv_table)
    assert table[r.suggested_theta] <= table[10.0]
    assert r.suggested_theta < 10.0
    perm = np.random.default_rng(1).permutation(d1.n)
    r2 = cv_select_radius(Dataset.h0(d1.samples[perm]), d2, grid[::-1], folds=3, seed=4, kernel=k)
    assert r2.suggested_theta == r.suggested_theta and r2.cv_table == r.cv_table
    r3 = cv_select_radius(d1, d2, grid, folds=3, seed=4, kernel=k, workers=3)
    assert r3.cv_table == r.cv_table


def test_default_grid():
    g = default_grid(Dataset.h0([0.0]), Dataset.h1([2.0]))
    assert len(g) == 8 and g[0] == pytest.approx(2e-3) and g[-1] == pytest.approx(20.0)
