import math
from fractions import Fraction

import numpy as np
import pytest

from oracles import bernoulli_kl, binomial_tail_exact
from wmtest.batch import (
    Decision,
    batch_decide,
    bernoulli_kl_half,
    binomial_risk_bound,
    chernoff_risk_bound,
    vote,
)
from wmtest.core import Dataset
from wmtest.lfd import Radii
from wmtest.robust import KernelSpec, fit


def test_vote_examples():
    d = vote([0.4, 0.6, 0.6])
    assert d.vote_fraction == pytest.approx(1.6 / 3) and d.decision is Decision.ACCEPT_H0 and d.m == 3
    assert vote([1.0, 1.0]).vote_fraction == 1.0
    assert vote([0.5]).decision is Decision.ACCEPT_H0
    assert vote([0.49]).decision is Decision.ACCEPT_H1
    with pytest.raises(ValueError):
        vote([])


def test_batch_of_one_thresholds_evaluate():
    m = fit(Dataset.h0([-2.0]), Dataset.h1([1.0, 3.0]), Radii.equal(1.0), KernelSpec("gaussian", 0.3))
    for w in (-2.0, 1.0, 3.0, 0.2):
        d = batch_decide(m, [[w]])
        assert d.vote_fraction == m.evaluate([w])
        assert (d.decision is Decision.ACCEPT_H0) == (m.evaluate([w]) >= 0.5)
    with pytest.raises(ValueError):
        batch_decide(m, np.empty((0, 1)))


def test_binomial_examples():
    assert binomial_risk_bound(0.3, 1) == pytest.approx(0.3, abs=1e-15)
    assert binomial_risk_bound(0.5, 2) == 0.75
    assert all(binomial_risk_bound(0.0, m) == 0.0 for m in range(1, 20))
    expected = sum(math.comb(5, i) * 0.2145**i * 0.7855 ** (5 - i) for i in range(3, 6))
    assert binomial_risk_bound(0.2145, 5) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("eps", [Fraction(1, 20), Fraction(1, 5), Fraction(9, 20), Fraction(1, 2), Fraction(7, 10)])
def test_binomial_matches_exact_rationals(eps):
    for m in range(1, 61):
        assert binomial_risk_bound(float(eps), m) == pytest.approx(float(binomial_tail_exact(eps, m)), rel=1e-11, abs=1e-300)


def test_binomial_large_m_is_finite():
    v = binomial_risk_bound(0.3, 5000)
    assert 0.0 <= v < 1e-100


def test_binomial_below_chernoff():
    for eps in np.arange(0.05, 0.46, 0.01):
        for m in range(1, 51):
            assert binomial_risk_bound(eps, m) <= chernoff_risk_bound(eps, m) + 1e-15


def test_parity_monotone():
    for eps in (0.1, 0.25, 0.4, 0.49):
        vals = [binomial_risk_bound(eps, m) for m in range(1, 101)]
        odd, even = vals[0::2], vals[1::2]
        assert all(b <= a + 1e-15 for a, b in zip(odd, odd[1:]))
        assert all(b <= a + 1e-15 for a, b in zip(even, even[1:]))


def test_chernoff():
    assert bernoulli_kl_half(0.25) == pytest.approx(bernoulli_kl(0.5, 0.25), rel=1e-14)
    # exp(-D(1/2 || 1/4)) = sqrt(3)/2
    assert chernoff_risk_bound(0.25, 1) == pytest.approx(math.sqrt(3) / 2, rel=1e-14)
    assert chernoff_risk_bound(0.5 - 1e-9, 3) == pytest.approx(1.0, abs=1e-12)
    for bad in (0.0, 0.5, 0.7, -0.1):
        with pytest.raises(ValueError):
            chernoff_risk_bound(bad, 3)


def test_domain_errors():
    for eps, m in ((-0.1, 3), (1.1, 3), (0.2, 0), (0.2, 2.5), (0.2, True)):
        with pytest.raises(ValueError):
            binomial_risk_bound(eps, m)
