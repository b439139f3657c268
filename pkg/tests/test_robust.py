
import numpy as np
import pytest
from scipy.integrate import quad

from oracles import dual_by_breakpoints, random_feasible_pair
from wmtest.core import Dataset, cost_matrix, pool, risk
from wmtest.lfd import Radii, solve_lfds
from wmtest.lp import NumericalError
from wmtest.robust import (
    ExtendedTest,
    KernelSpec,
    ModelFormatError,
    bounds,
    fit,
    silverman_bandwidth,
    smooth_lfds,
    solve_support_test,
)


def toy(w2):
    s = pool(Dataset.h0([-2.0]), Dataset.h1([w2, 3.0]))
    return s, cost_matrix(s)


@pytest.mark.parametrize("w2,expected", [(1.0, 0.4), (2.0, 0.2)])
def test_toy_support_test(w2, expected):
    s, C = toy(w2)
    t = solve_support_test(s, C, Radii.equal(1.0))
    assert t.pi_hat[1] == pytest.approx(expected, abs=1e-9)
    assert t.pi_hat[0] == pytest.approx(1.0) and t.pi_hat[2] == pytest.approx(0.0, abs=1e-12)


def test_zero_radius_disjoint():
    s = pool(Dataset.h0([[0.0, 0.0], [1.0, 0.0]]), Dataset.h1([[5.0, 5.0]]))
    t = solve_support_test(s, cost_matrix(s), Radii.equal(0.0))
    np.testing.assert_allclose(t.pi_hat, [1, 1, 0], atol=1e-12)
    assert t.eps_star == pytest.approx(0.0, abs=1e-12)


def test_duality_gap_is_checked():
    s, C = toy(1.0)
    bad = solve_lfds(s, C, Radii.equal(0.1))
    with pytest.raises(NumericalError):
        solve_support_test(s, C, Radii.equal(1.0), lfds=bad)


@pytest.mark.parametrize("seed", range(8))
def test_eq10_and_saddle(seed):
    rng = np.random.default_rng(100 + seed)
    d = 1 + seed % 2
    s = pool(Dataset.h0(rng.normal(size=(rng.integers(2, 7), d))),
             Dataset.h1(rng.normal(size=(rng.integers(2, 7), d)) + 0.8))
    C = cost_matrix(s)
    r = Radii(rng.uniform(0.01, 1.0), rng.uniform(0.01, 1.0))
    f = solve_lfds(s, C, r)
    t = solve_support_test(s, C, r, lfds=f)
    pi = t.pi_hat
    assert abs(t.eps_star - f.psi_star) <= 1e-6
    assert risk(pi, f.p1, f.p2) == pytest.approx(f.psi_star, abs=1e-6)
    lhs1 = float(((1 - pi) * f.p1).sum())
    lhs2 = float((pi * f.p2).sum())
    assert lhs1 == pytest.approx(dual_by_breakpoints(1 - pi, s.q1, C, r.theta1), abs=1e-6)
    assert lhs2 == pytest.approx(dual_by_breakpoints(pi, s.q2, C, r.theta2), abs=1e-6)
    for _ in range(100):
        p1, p2 = random_feasible_pair(rng, s.q1, s.q2, C, r.theta1, r.theta2)
        assert risk(pi, p1, p2) <= t.eps_star + 1e-6


def test_kernel_spec():
    with pytest.raises(ValueError):
        KernelSpec("gaussian", 0.0)
    with pytest.raises(ValueError):
        KernelSpec("boxcar", 1.0)
    for fam in ("gaussian", "epanechnikov"):
        k = KernelSpec(fam, 0.7)
        g = lambda u: float(np.exp(k.log_g(np.array([u]))[0]))
        assert quad(g, -np.inf, np.inf)[0] == pytest.approx(1.0, abs=1e-8)


def test_smoothing_single_bump_and_decay():
    s, C = toy(1.0)
    f = solve_lfds(s, C, Radii.equal(1.0))

    class Point:
        p1 = np.array([1.0, 0.0, 0.0])
        p2 = f.p2

    k = KernelSpec("gaussian", 0.3)
    d1, _ = smooth_lfds(Point, s, k, [-1.7])
    assert d1 == pytest.approx(np.exp(-0.5) / (0.3 * np.sqrt(2 * np.pi)), rel=1e-12)
    far = smooth_lfds(f, s, k, [100.0])
    assert far[0] < 1e-300 and far[1] < 1e-300


def test_smoothed_densities_integrate_to_one():
    s, C = toy(1.0)
    f = solve_lfds(s, C, Radii.equal(1.0))
    for fam in ("gaussian", "epanechnikov"):
        k = KernelSpec(fam, 0.3)
        for idx in (0, 1):
            val = quad(lambda w: smooth_lfds(f, s, k, [w])[idx], -10, 10, points=[-2, 1, 3], limit=200)[0]
            assert val == pytest.approx(1.0, abs=1e-6)


def test_toy_smoothing_is_bimodal():
    s, C = toy(1.0)
    f = solve_lfds(s, C, Radii.equal(1.0))
    k = KernelSpec("gaussian", 0.3)
    grid = np.linspace(-4, 5, 901)
    d2 = np.array([smooth_lfds(f, s, k, [w])[1] for w in grid])
    peaks = np.flatnonzero((d2[1:-1] > d2[:-2]) & (d2[1:-1] > d2[2:]))
    assert len(peaks) >= 2


def test_bounds_examples():
    s, C = toy(1.0)
    t = solve_support_test(s, C, Radii.equal(1.0))
    for m in range(s.n):
        ell, u = bounds(t, s, C, s.points[m])
        assert ell - 1e-12 <= t.pi_hat[m] <= u + 1e-12
    # lambda = 0 collapses both bounds to constants
    from wmtest.robust import SupportTest

    t0 = SupportTest(pi_hat=np.array([0.9, 0.3, 0.1]), lambda1=0.0, lambda2=0.0, eps_star=0.5)
    for w in (-10.0, 0.0, 7.0):
        ell, u = bounds(t0, s, C, [w])
        assert ell == pytest.approx(0.1) and u == pytest.approx(0.9)


def test_bounds_piecewise_linear_and_lipschitz():
    s, C = toy(1.0)
    t = solve_support_test(s, C, Radii.equal(1.0))
    grid = np.linspace(-4, 5, 901)
    lu = np.array([bounds(t, s, C, [w]) for w in grid])
    assert np.all(lu[:, 0] <= lu[:, 1] + 1e-12)
    lam = max(t.lambda1, t.lambda2)
    steps = np.abs(np.diff(lu, axis=0)).max(axis=0)
    assert np.all(steps <= lam * (grid[1] - grid[0]) + 1e-12)
    # piecewise linear: second differences vanish except at a few kinks
    kinks = (np.abs(np.diff(lu[:, 0], 2)) > 1e-9).sum() + (np.abs(np.diff(lu[:, 1], 2)) > 1e-9).sum()
    assert kinks <= 12


def test_evaluate_semantics():
    m = fit(Dataset.h0([-2.0]), Dataset.h1([1.0, 3.0]), Radii.equal(1.0), KernelSpec("gaussian", 0.3))
    assert m.evaluate([1.0]) == m.support_test.pi_hat[1]
    assert m.evaluate([-2.0]) == m.support_test.pi_hat[0]
    # strongly class-1 region with u = 1
    assert m.evaluate([-3.0]) == 1.0
    grid = np.linspace(-4, 5, 500)[:, None]
    v = m.evaluate_many(grid)
    ell, u = m.bounds(grid)
    assert np.all((ell <= v) & (v <= u))


def test_evaluate_clamps_to_upper_bound():
    m = fit(Dataset.h0([-2.0]), Dataset.h1([1.0, 3.0]), Radii.equal(1.0), KernelSpec("gaussian", 5.0))
    # wide kernel: class 1 dominates near 0, but the envelope caps the value
    w = [0.0]
    d1, d2 = m.smoothed(w)
    ell, u = m.bounds(np.array([w]))
    assert d1 > d2 and u[0] < 1
    assert m.evaluate(w) == pytest.approx(u[0])


def test_evaluate_exact_tie_gives_half():
    m = fit(Dataset.h0([-1.0]), Dataset.h1([1.0]), Radii.equal(0.0), KernelSpec("gaussian", 1.0))
    d1, d2 = m.smoothed([0.0])
    assert d1 == d2
    ell, u = m.bounds(np.array([[0.0]]))
    assert ell[0] <= 0.5 <= u[0]
    assert m.evaluate([0.0]) == 0.5


def test_roundtrip_is_lossless(tmp_path):
    rng = np.random.default_rng(9)
    m = fit(Dataset.h0(rng.normal(size=(6, 2))), Dataset.h1(rng.normal(size=(5, 2)) + 1), Radii(0.3, 0.5))
    path = tmp_path / "model.json"
    m.save(path)
    back = ExtendedTest.load(path)
    x = rng.normal(size=(50, 2))
    assert np.array_equal(back.evaluate_many(x), m.evaluate_many(x))
    assert np.array_equal(back.support_test.pi_hat, m.support_test.pi_hat)
    assert back.kernel == m.kernel and back.radii == m.radii


def test_loader_rejects_unknown_schema():
    m = fit(Dataset.h0([0.0]), Dataset.h1([1.0]), Radii.equal(0.1))
    doc = m.to_dict()
    doc["schema"] = 2
    with pytest.raises(ModelFormatError):
        ExtendedTest.from_dict(doc)
    doc["schema"] = "1.3"
    ExtendedTest.from_dict(doc)
    with pytest.raises(ModelFormatError):
        ExtendedTest.from_json("{not json")
    del doc["support"]
    with pytest.raises(ModelFormatError):
        ExtendedTest.from_dict(doc)


def test_silverman_bandwidth():
    x = np.arange(10.0)[:, None]
    assert silverman_bandwidth(x) == pytest.approx(1.06 * np.std(x, ddof=1) * 10 ** (-1 / 5))
    assert silverman_bandwidth(np.zeros((4, 2))) == 1.0
