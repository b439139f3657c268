"""Online change detection with a sliding-window LFD statistic.

At candidate time ``t`` the ``w`` samples before ``t`` are treated as
pre-change (class 1) data and the ``w`` samples after ``t`` as post-change
(class 2) data. The LFDs of that two-sample problem are kernel-smoothed and
compared at ``omega_t``; the difference feeds a CUSUM recursion. Because the
post window looks ``w`` samples ahead, the decision for time ``t`` is only
available once sample ``t + w`` has arrived.

Times are 1-indexed throughout, matching row numbers of a stream file.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import EUCLIDEAN, Dataset, MetricSpec, PooledSupport, as_sample, as_samples, cost_matrix, pool
from .lfd import Radii, solve_lfds
from .robust import KernelSpec, _log_smoothed

log = logging.getLogger(__name__)

MAX_CONDITION = 1e12
RIDGE = 1e-6


class SingularCovarianceError(ValueError):
    """The covariance estimate is too ill-conditioned to invert."""


@dataclass(frozen=True)
class DetectorConfig:
    window: int = 10
    radii: Radii = field(default_factory=lambda: Radii.equal(0.3))
    kernel: KernelSpec = field(default_factory=lambda: KernelSpec("gaussian", 0.5))
    threshold: float = 1.0
    metric: MetricSpec = EUCLIDEAN
    backend: str = "simplex"
    # any optimal LFD pair gives a valid statistic; the basic one is cheapest
    selection: str = "vertex"
    # reuse pairwise costs where consecutive windows overlap
    incremental: bool = True

    def __post_init__(self):
        if int(self.window) != self.window or self.window < 2:
            raise ValueError(f"window must be an integer >= 2, got {self.window!r}")
        if not (self.threshold > 0 and math.isfinite(self.threshold)):
            raise ValueError(f"threshold must be positive and finite, got {self.threshold!r}")


@dataclass(frozen=True)
class CusumState:
    S: float = 0.0
    t: int = 0
    alarm: int | None = None

    def __post_init__(self):
        if not self.S >= 0:
            raise ValueError(f"CUSUM statistic must be nonnegative, got {self.S!r}")


def cusum_step(state: CusumState, increment: float, b: float) -> CusumState:
    """``S' = max(0, S + increment)``; records the first time ``S' >= b``."""
    s = max(0.0, state.S + float(increment))
    t = state.t + 1
    alarm = state.alarm
    if alarm is None and s >= b:
        alarm = t
    return CusumState(S=s, t=t, alarm=alarm)


def _statistic_from_support(support: PooledSupport, cost: np.ndarray, omega: np.ndarray, cfg: DetectorConfig) -> float:
    lfds = solve_lfds(support, cost, cfg.radii, backend=cfg.backend, selection=cfg.selection)
    x = omega[None, :]
    l1 = _log_smoothed(lfds.p1, support.points, cfg.kernel, x)[0]
    l2 = _log_smoothed(lfds.p2, support.points, cfg.kernel, x)[0]
    return float(np.exp(l2) - np.exp(l1))


def lfd_statistic(window_pre, window_post, omega_t, cfg: DetectorConfig) -> float:
    """Smoothed ``P2(omega_t) - P1(omega_t)`` for the LFDs of pre vs. post windows."""
    pre = as_samples(window_pre)
    post = as_samples(window_post)
    if pre.shape[0] != cfg.window or post.shape[0] != cfg.window:
        raise ValueError(f"both windows must hold {cfg.window} samples (got {pre.shape[0]} and {post.shape[0]})")
    support = pool(Dataset.h0(pre), Dataset.h1(post))
    omega = as_sample(omega_t, support.dim)
    return _statistic_from_support(support, cost_matrix(support, cfg.metric), omega, cfg)


class _SlidingCost:
    """Pairwise costs among stream samples, kept for the current span only."""

    def __init__(self, stream: np.ndarray, metric: MetricSpec):
        self.stream = stream
        self.metric = metric
        self.idx = np.zeros(0, dtype=int)
        self.D = np.zeros((0, 0))

    def costs(self, idx: np.ndarray) -> np.ndarray:
        pos = {int(j): k for k, j in enumerate(self.idx)}
        known = np.array([pos.get(int(j), -1) for j in idx])
        have = known >= 0
        D = np.empty((idx.size, idx.size))
        D[np.ix_(have, have)] = self.D[np.ix_(known[have], known[have])]
        new = ~have
        if new.any():
            block = self.metric(self.stream[idx[new]], self.stream[idx])
            D[new, :] = block
            D[:, new] = block.T
        self.idx, self.D = idx, D
        return D


def _pooled_cost(D: np.ndarray, support: PooledSupport, w: int) -> np.ndarray:
    # map pooled points back to positions in the (pre + post) index list
    rows = np.where(support.origin1 >= 0, support.origin1, w + support.origin2)
    c = D[np.ix_(rows, rows)]
    # same finishing as cost_matrix: validated there on first use
    c = 0.5 * (c + c.T)
    np.fill_diagonal(c, 0.0)
    return c


@dataclass(frozen=True)
class DetectionTrace:
    t: np.ndarray
    statistic: np.ndarray
    S: np.ndarray
    threshold: float
    alarm: int | None

    def first_crossing(self, b: float, start: int | None = None) -> int | None:
        """First time ``>= start`` with ``S_t >= b``."""
        ok = self.S >= b
        if start is not None:
            ok &= self.t >= start
        hits = np.flatnonzero(ok)
        return int(self.t[hits[0]]) if hits.size else None

    @property
    def max_statistic(self) -> float:
        return float(self.S.max(initial=0.0))

    def to_csv(self) -> str:
        lines = ["t,statistic,S_t,alarm_flag"]
        for t, z, s in zip(self.t, self.statistic, self.S):
            lines.append(f"{int(t)},{float(z)!r},{float(s)!r},{int(s >= self.threshold)}")
        return "\n".join(lines) + "\n"


def run_detector(stream, cfg: DetectorConfig, stop_after_alarm_from: int | None = None) -> DetectionTrace:
    """LFD-CUSUM over ``t = w+1, ..., T-w``.

    With ``stop_after_alarm_from`` set, the run ends at the first alarm at or
    after that time (the trace is truncated there).
    """
    x = as_samples(stream)
    T, w = x.shape[0], cfg.window
    if T < 2 * w + 1:
        raise ValueError(f"stream has {T} samples; window {w} needs at least {2 * w + 1}")
    cache = _SlidingCost(x, cfg.metric) if cfg.incremental else None
    state = CusumState(t=w)
    ts, zs, ss = [], [], []
    for t in range(w + 1, T - w + 1):
        pre = x[t - 1 - w:t - 1]
        post = x[t:t + w]
        support = pool(Dataset.h0(pre), Dataset.h1(post))
        if cache is not None:
            idx = np.concatenate([np.arange(t - 1 - w, t - 1), np.arange(t, t + w)])
            cost = _pooled_cost(cache.costs(idx), support, w)
            if t == w + 1:
                cost_matrix(support, cfg.metric)  # validates the metric once
        else:
            cost = cost_matrix(support, cfg.metric)
        z = _statistic_from_support(support, cost, x[t - 1], cfg)
        state = cusum_step(state, z, cfg.threshold)
        ts.append(t); zs.append(z); ss.append(state.S)
        if stop_after_alarm_from is not None and state.S >= cfg.threshold and t >= stop_after_alarm_from:
            break
    return DetectionTrace(np.array(ts, dtype=int), np.array(zs), np.array(ss), cfg.threshold, state.alarm)


# ---------------------------------------------------------------------------
# Hotelling baseline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HotellingModel:
    mu: np.ndarray
    sigma_inv: np.ndarray


def fit_hotelling(history) -> HotellingModel:
    """Mean and inverse covariance of pre-change samples, ridge-regularized when near-singular."""
    x = as_samples(history)
    n, d = x.shape
    if n < 2:
        raise ValueError("need at least 2 historical samples")
    mu = x.mean(axis=0)
    sigma = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
    if np.linalg.cond(sigma) > MAX_CONDITION:
        tr = float(np.trace(sigma))
        if not tr > 0:
            raise SingularCovarianceError("historical samples are constant; covariance is zero")
        sigma = sigma + RIDGE * tr / d * np.eye(d)
    if np.linalg.cond(sigma) > MAX_CONDITION:
        raise SingularCovarianceError("covariance estimate is singular even after ridge regularization")
    return HotellingModel(mu=mu, sigma_inv=np.linalg.inv(sigma))


def hotelling_step(state: CusumState, omega_t, mu_hat, sigma_hat_inv, b: float, drift: float = 0.0) -> CusumState:
    """CUSUM on ``(omega - mu)' Sigma^-1 (omega - mu) - drift``."""
    omega = as_sample(omega_t)
    mu = as_sample(mu_hat, omega.size)
    P = np.atleast_2d(np.asarray(sigma_hat_inv, dtype=np.float64))
    if P.shape != (omega.size, omega.size):
        raise ValueError(f"inverse covariance has shape {P.shape}, expected {(omega.size, omega.size)}")
    if np.linalg.cond(P) > MAX_CONDITION:
        raise SingularCovarianceError("covariance condition number exceeds 1e12; regularize it first")
    r = omega - mu
    return cusum_step(state, float(r @ P @ r) - drift, b)


def run_hotelling(stream, threshold: float, burn_in: int = 10, drift: float = 0.0,
                  stop_after_alarm_from: int | None = None) -> DetectionTrace:
    """Hotelling CUSUM over ``t = burn_in+1, ..., T`` with the first ``burn_in`` samples as history."""
    x = as_samples(stream)
    if x.shape[0] <= burn_in:
        raise ValueError(f"stream has {x.shape[0]} samples, burn-in needs more than {burn_in}")
    model = fit_hotelling(x[:burn_in])
    state = CusumState(t=burn_in)
    ts, ss = [], []
    for t in range(burn_in + 1, x.shape[0] + 1):
        state = hotelling_step(state, x[t - 1], model.mu, model.sigma_inv, threshold, drift)
        ts.append(t); ss.append(state.S)
        if stop_after_alarm_from is not None and state.S >= threshold and t >= stop_after_alarm_from:
            break
    r = x[burn_in:burn_in + len(ts)] - model.mu
    inc = np.einsum("ij,jk,ik->i", r, model.sigma_inv, r) - drift
    return DetectionTrace(np.array(ts, dtype=int), inc, np.array(ss), threshold, state.alarm)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def calibrate_threshold(null_traces: Sequence[DetectionTrace], type1: float) -> float:
    """Smallest threshold whose false-alarm frequency on the null traces is at most ``type1``."""
    if not null_traces:
        raise ValueError("need at least one null stream")
    if not 0 <= type1 < 1:
        raise ValueError(f"type-I level must lie in [0, 1), got {type1!r}")
    maxima = np.sort([tr.max_statistic for tr in null_traces])[::-1]
    k = int(math.floor(type1 * len(maxima) + 1e-9))
    b = float(np.nextafter(maxima[k], np.inf)) if k < len(maxima) else float(np.nextafter(0.0, 1.0))
    return max(b, float(np.nextafter(0.0, 1.0)))


@dataclass(frozen=True)
class EddRow:
    threshold: float
    type1: float
    edd: float | None
    detected: int
    n_change: int


def evaluate_edd(procedure: Callable[[np.ndarray], DetectionTrace], null_streams, change_streams,
                 thresholds: Sequence[float]) -> list[EddRow]:
    """Type-I frequency and mean delay per threshold.

    ``change_streams`` holds ``(stream, change_time)`` pairs. On change
    streams, crossings before the change time are false alarms and are
    skipped; the delay is measured to the first crossing at or after it.
    """
    null_tr = [procedure(s) for s in null_streams]
    change_tr = [(procedure(s), int(tau)) for s, tau in change_streams]
    return edd_table(null_tr, change_tr, thresholds)


def edd_table(null_traces, change_traces, thresholds) -> list[EddRow]:
    rows = []
    for b in sorted(float(v) for v in thresholds):
        t1 = float(np.mean([tr.max_statistic >= b for tr in null_traces])) if null_traces else float("nan")
        delays = []
        for tr, tau in change_traces:
            hit = tr.first_crossing(b, start=tau)
            if hit is not None:
                delays.append(hit - tau)
        edd = float(np.mean(delays)) if delays else None
        rows.append(EddRow(b, t1, edd, len(delays), len(change_traces)))
    return rows


def edd_csv(rows: Sequence[EddRow]) -> str:
    lines = ["threshold,type1,edd"]
    for r in rows:
        lines.append(f"{r.threshold!r},{r.type1!r},{'' if r.edd is None else repr(r.edd)}")
    return "\n".join(lines) + "\n"
