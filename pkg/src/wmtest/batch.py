"""Majority-vote batch tests and their risk bounds."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .core import as_samples
from .robust import ExtendedTest


class Decision(enum.Enum):
    ACCEPT_H0 = "H0"
    ACCEPT_H1 = "H1"


@dataclass(frozen=True)
class BatchDecision:
    vote_fraction: float
    decision: Decision
    m: int


def vote(values) -> BatchDecision:
    """Majority rule on per-sample test values; a tie (fraction exactly 1/2) accepts H0."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("batch must contain at least one sample")
    frac = float(v.mean())
    return BatchDecision(frac, Decision.ACCEPT_H0 if frac >= 0.5 else Decision.ACCEPT_H1, int(v.size))


def batch_decide(test: ExtendedTest, batch) -> BatchDecision:
    x = as_samples(batch)
    if x.shape[0] == 0:
        raise ValueError("batch must contain at least one sample")
    return vote(test.evaluate_many(x))


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not (0.0 <= eps <= 1.0):
        raise ValueError(f"worst-case risk must lie in [0, 1], got {eps!r}")
    return eps


def _check_m(m: int) -> int:
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise ValueError(f"batch size must be a positive integer, got {m!r}")
    return int(m)


def binomial_risk_bound(eps_star: float, m: int) -> float:
    """``P(Bin(m, eps) >= ceil(m/2))``: chance that at least half of the votes err.

    The ``i = m/2`` term is kept at even ``m`` since a tied vote accepts H0
    and so counts as an error under H1.
    """
    eps = _check_eps(eps_star)
    m = _check_m(m)
    lo = (m + 1) // 2
    if eps == 0.0:
        return 0.0
    if eps == 1.0:
        return 1.0
    i = np.arange(lo, m + 1)
    logc = gammaln(m + 1) - gammaln(i + 1) - gammaln(m - i + 1)
    terms = np.exp(logc + i * math.log(eps) + (m - i) * math.log1p(-eps))
    return float(min(1.0, terms.sum()))


def bernoulli_kl_half(eps: float) -> float:
    """Relative entropy D(1/2 || eps) between Bernoulli laws."""
    return 0.5 * math.log(1.0 / (2.0 * eps)) + 0.5 * math.log(1.0 / (2.0 * (1.0 - eps)))


def chernoff_risk_bound(eps_star: float, m: int) -> float:
    """``exp(-m * D(1/2 || eps))``, valid for ``0 < eps < 1/2``."""
    eps = float(eps_star)
    if not (0.0 < eps < 0.5):
        raise ValueError(f"the exponential bound needs 0 < eps* < 1/2, got {eps!r}")
    m = _check_m(m)
    return math.exp(-m * bernoulli_kl_half(eps))
