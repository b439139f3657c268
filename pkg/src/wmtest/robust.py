"""The robust minimax test: support values, off-support envelope, smoothing.

On the pooled support the test ``pi_hat`` and the multipliers ``lambda1``,
``lambda2`` come from one linear program that minimizes the worst-case risk
over both Wasserstein balls, written through the dual of the inner
suprema::

    min  lambda1*theta1 + sum_l q1[l]*s[l] + lambda2*theta2 + sum_l q2[l]*t[l]
    s.t. s[l] >= 1 - pi[m] - lambda1*c[l, m]      (l with q1[l] > 0, all m)
         t[l] >= pi[m] - lambda2*c[l, m]          (l with q2[l] > 0, all m)
         0 <= pi <= 1,  lambda >= 0

Its optimal value must agree with the LFD program's (strong duality); a gap
above ``DUALITY_TOL`` is reported as a numerical failure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .core import (
    EUCLIDEAN, Dataset, DimensionError, MetricSpec, PooledSupport, as_sample, as_samples, cost_matrix,
    get_metric, pool,
)
from .lfd import LfdSolution, Radii, solve_lfds
from .lp import GE, LE, LinearProgram, LpStatus, NumericalError, solve

DUALITY_TOL = 1e-5


@dataclass(frozen=True)
class SupportTest:
    pi_hat: np.ndarray
    lambda1: float
    lambda2: float
    eps_star: float


def build_support_test_lp(support: PooledSupport, cost: np.ndarray, radii: Radii) -> LinearProgram:
    """Variables: ``pi`` (n), ``lambda1``, ``lambda2``, ``s`` (class-1 rows), ``t`` (class-2 rows)."""
    n = support.n
    rows1 = np.flatnonzero(support.q1 > 0)
    rows2 = np.flatnonzero(support.q2 > 0)
    k1, k2 = rows1.size, rows2.size
    nv = n + 2 + k1 + k2
    i_l1, i_l2 = n, n + 1
    s0, t0 = n + 2, n + 2 + k1
    c = np.zeros(nv)
    c[i_l1] = radii.theta1
    c[i_l2] = radii.theta2
    c[s0:s0 + k1] = support.q1[rows1]
    c[t0:t0 + k2] = support.q2[rows2]
    A = np.zeros(((k1 + k2) * n, nv))
    b = np.zeros((k1 + k2) * n)
    ar = np.arange(n)
    r = 0
    # s[l] + pi[m] + lambda1 c[l,m] >= 1
    for a, l in enumerate(rows1):
        blk = slice(r, r + n)
        A[blk, :n][ar, ar] = 1.0
        A[blk, i_l1] = cost[l]
        A[blk, s0 + a] = 1.0
        b[blk] = 1.0
        r += n
    # t[l] - pi[m] + lambda2 c[l,m] >= 0
    for a, l in enumerate(rows2):
        blk = slice(r, r + n)
        A[blk, :n][ar, ar] = -1.0
        A[blk, i_l2] = cost[l]
        A[blk, t0 + a] = 1.0
        r += n
    hi = np.full(nv, np.inf)
    hi[:n] = 1.0
    # s, t >= 0 is implied by the m = l rows
    return LinearProgram(c=c, A=A, rel=[GE] * A.shape[0], b=b, lo=np.zeros(nv), hi=hi, sense="min")


def solve_support_test(
    support: PooledSupport,
    cost: np.ndarray,
    radii: Radii,
    lfds: LfdSolution | None = None,
    backend: str = "simplex",
) -> SupportTest:
    """Robust optimal test values on the pooled support, checked against the LFD value.

    The minimax-optimal ``pi_hat`` is often not unique. Among the optimal
    tests this returns one minimizing ``sum |pi_hat - 1/2|``, found by a
    second program with the worst-case risk capped at its optimum.
    """
    lp = build_support_test_lp(support, cost, radii)
    sol = solve(lp, backend=backend)
    if sol.status is not LpStatus.OPTIMAL:
        raise NumericalError(f"support-test program returned status {sol.status.value}")
    eps_star = float(sol.objective)
    x = _closest_to_half(lp, support.n, eps_star, backend)
    if x is None:
        x = sol.x
    n = support.n
    pi = np.clip(x[:n], 0.0, 1.0)
    pi.setflags(write=False)
    test = SupportTest(pi_hat=pi, lambda1=float(max(x[n], 0.0)), lambda2=float(max(x[n + 1], 0.0)),
                       eps_star=eps_star)
    if lfds is None:
        lfds = solve_lfds(support, cost, radii)
    gap = abs(test.eps_star - lfds.psi_star)
    if gap > DUALITY_TOL:
        raise NumericalError(f"duality gap {gap:.3e} between worst-case risk and LFD value exceeds {DUALITY_TOL}")
    return test


def _closest_to_half(lp: LinearProgram, n: int, eps_star: float, backend: str) -> np.ndarray | None:
    nv = lp.num_vars
    # extra variables d[m] >= |pi[m] - 1/2|
    A = np.hstack([lp.A, np.zeros((lp.num_constraints, n))])
    cap = np.concatenate([lp.c, np.zeros(n)])[None, :]
    dev = np.zeros((2 * n, nv + n))
    ar = np.arange(n)
    dev[ar, ar] = -1.0
    dev[ar, nv + ar] = 1.0
    dev[n + ar, ar] = 1.0
    dev[n + ar, nv + ar] = 1.0
    c2 = np.zeros(nv + n)
    c2[nv:] = 1.0
    lp2 = LinearProgram(
        c=c2,
        A=np.vstack([A, cap, dev]),
        rel=list(lp.rel) + [LE] + [GE] * (2 * n),
        b=np.concatenate([lp.b, [eps_star + 1e-10 * (1.0 + abs(eps_star))], np.full(n, -0.5), np.full(n, 0.5)]),
        lo=np.concatenate([lp.lo, np.zeros(n)]),
        hi=np.concatenate([lp.hi, np.full(n, np.inf)]),
    )
    # an exact cap keeps the worst-case risk untouched; relax it only if rounding makes it infeasible
    for slack in (0.0, 1e-10 * (1.0 + abs(eps_star))):
        lp2.b[lp.num_constraints] = eps_star + slack
        sol = solve(lp2, backend=backend)
        if sol.status is LpStatus.OPTIMAL:
            return sol.x[:nv]
    return None


# ---------------------------------------------------------------------------
# kernels and the whole-space extension
# ---------------------------------------------------------------------------

KERNEL_FAMILIES = ("gaussian", "epanechnikov")
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class KernelSpec:
    """Product kernel ``G_h(x) = h^-d * prod_i g(x_i / h)``."""

    family: str = "gaussian"
    h: float = 1.0

    def __post_init__(self):
        fam = str(self.family).lower()
        if fam not in KERNEL_FAMILIES:
            raise ValueError(f"kernel family must be one of {KERNEL_FAMILIES}, got {self.family!r}")
        h = float(self.h)
        if not np.isfinite(h) or h <= 0:
            raise ValueError(f"bandwidth must be positive and finite, got {self.h!r}")
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "h", h)

    def log_g(self, u: np.ndarray) -> np.ndarray:
        """Log of the 1-D kernel, elementwise."""
        u = np.asarray(u, dtype=np.float64)
        if self.family == "gaussian":
            return -0.5 * u * u - _LOG_SQRT_2PI
        with np.errstate(divide="ignore"):
            return np.where(np.abs(u) < 1.0, np.log(0.75 * np.clip(1.0 - u * u, 0.0, None)), -np.inf)

    def log_density(self, diffs: np.ndarray) -> np.ndarray:
        """``log G_h`` for each row of ``diffs`` (shape ``(..., d)``)."""
        diffs = np.asarray(diffs, dtype=np.float64)
        d = diffs.shape[-1]
        return self.log_g(diffs / self.h).sum(axis=-1) - d * math.log(self.h)


def silverman_bandwidth(points) -> float:
    """``1.06 * sigma * n^(-1/(d+4))`` per coordinate, averaged over coordinates."""
    x = as_samples(points)
    n, d = x.shape
    sigma = x.std(axis=0, ddof=1) if n > 1 else np.zeros(d)
    h = float(np.mean(1.06 * sigma * n ** (-1.0 / (d + 4))))
    # degenerate spread: fall back to unit bandwidth
    return h if h > 0 and np.isfinite(h) else 1.0


def _log_smoothed(weights: np.ndarray, points: np.ndarray, kernel: KernelSpec, omegas: np.ndarray) -> np.ndarray:
    # (k, n) matrix of log G_h(omega_k - point_l), then log sum_l p_l G_h
    lg = kernel.log_density(omegas[:, None, :] - points[None, :, :])
    with np.errstate(divide="ignore"):
        lw = np.log(weights)
    return logsumexp(lg + lw[None, :], axis=1)


def smooth_lfds(lfds: LfdSolution, support: PooledSupport, kernel: KernelSpec, omega) -> tuple[float, float]:
    """Kernel-smoothed LFD densities ``(P1^h(omega), P2^h(omega))``."""
    x = as_sample(omega, support.dim)[None, :]
    l1 = _log_smoothed(lfds.p1, support.points, kernel, x)[0]
    l2 = _log_smoothed(lfds.p2, support.points, kernel, x)[0]
    return float(np.exp(l1)), float(np.exp(l2))


# ---------------------------------------------------------------------------
# off-support envelope
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OffSupportBounds:
    """Admissible range ``[ell(omega), u(omega)]`` for the test off the support.

    ``ell(omega) = max(max_i [a_i - lambda1 c(omega, x1_i)], 0)`` with
    ``a_i = min_m (pi_m + lambda1 c(x_m, x1_i))`` over class-1 points ``x1_i``;
    ``u(omega) = min(min_j [b_j + lambda2 c(omega, x2_j)], 1)`` with
    ``b_j = max_m (pi_m - lambda2 c(x_m, x2_j))`` over class-2 points ``x2_j``.
    """

    anchors1: np.ndarray
    a: np.ndarray
    lambda1: float
    anchors2: np.ndarray
    b: np.ndarray
    lambda2: float
    metric: MetricSpec = EUCLIDEAN

    @classmethod
    def build(cls, test: SupportTest, support: PooledSupport, cost: np.ndarray,
              metric: MetricSpec = EUCLIDEAN) -> "OffSupportBounds":
        i1 = np.flatnonzero(support.q1 > 0)
        i2 = np.flatnonzero(support.q2 > 0)
        pi = test.pi_hat
        a = np.min(pi[:, None] + test.lambda1 * cost[:, i1], axis=0)
        b = np.max(pi[:, None] - test.lambda2 * cost[:, i2], axis=0)
        return cls(support.points[i1], a, test.lambda1, support.points[i2], b, test.lambda2, metric)

    def __call__(self, omegas) -> tuple[np.ndarray, np.ndarray]:
        x = as_samples(omegas)
        ell = np.max(self.a[None, :] - self.lambda1 * self.metric(x, self.anchors1), axis=1)
        u = np.min(self.b[None, :] + self.lambda2 * self.metric(x, self.anchors2), axis=1)
        u = np.minimum(u, 1.0)
        # the bounds are ordered in exact arithmetic; where the envelope
        # pinches to a point rounding can flip them by an ulp
        return np.minimum(np.maximum(ell, 0.0), u), u


def bounds(test: SupportTest, support: PooledSupport, cost: np.ndarray, omega,
           metric: MetricSpec = EUCLIDEAN) -> tuple[float, float]:
    """``(ell(omega), u(omega))`` for a single sample."""
    env = OffSupportBounds.build(test, support, cost, metric)
    ell, u = env(as_sample(omega, support.dim)[None, :])
    return float(ell[0]), float(u[0])


# ---------------------------------------------------------------------------
# the fitted test
# ---------------------------------------------------------------------------

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ExtendedTest:
    """Robust test on the pooled support, extended to the whole space.

    Immutable once built; ``evaluate`` may be called concurrently.
    """

    support_test: SupportTest
    lfds: LfdSolution
    kernel: KernelSpec
    pooled: PooledSupport
    radii: Radii
    metric: MetricSpec = EUCLIDEAN
    bounds: OffSupportBounds = field(init=False, repr=False, compare=False)
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        cost = cost_matrix(self.pooled, self.metric)
        object.__setattr__(self, "bounds", OffSupportBounds.build(self.support_test, self.pooled, cost, self.metric))
        index = {(row + 0.0).tobytes(): m for m, row in enumerate(self.pooled.points)}
        object.__setattr__(self, "_index", index)

    @property
    def dim(self) -> int:
        return self.pooled.dim

    @property
    def eps_star(self) -> float:
        return self.support_test.eps_star

    def evaluate(self, omega) -> float:
        return float(self.evaluate_many(as_sample(omega, self.dim)[None, :])[0])

    def evaluate_many(self, omegas) -> np.ndarray:
        """Test values at each row of ``omegas``.

        Pooled points get their support value exactly. Elsewhere the smoothed
        likelihood comparison (1, 0, or 1/2 on an exact tie) is clamped into
        the admissible envelope.
        """
        x = as_samples(omegas)
        if x.shape[1] != self.dim:
            raise DimensionError(f"samples have dimension {x.shape[1]}, model expects {self.dim}")
        out = np.empty(x.shape[0])
        hit = np.array([self._index.get((row + 0.0).tobytes(), -1) for row in x], dtype=int)
        on = hit >= 0
        out[on] = self.support_test.pi_hat[hit[on]]
        off = ~on
        if off.any():
            xo = x[off]
            l1 = _log_smoothed(self.lfds.p1, self.pooled.points, self.kernel, xo)
            l2 = _log_smoothed(self.lfds.p2, self.pooled.points, self.kernel, xo)
            raw = np.where(l1 > l2, 1.0, np.where(l1 < l2, 0.0, 0.5))
            ell, u = self.bounds(xo)
            out[off] = np.minimum(np.maximum(raw, ell), u)
        return out

    def smoothed(self, omega) -> tuple[float, float]:
        return smooth_lfds(self.lfds, self.pooled, self.kernel, omega)

    # -- persistence -----------------------------------------------------

    def to_dict(self) -> dict:
        s, t, f = self.pooled, self.support_test, self.lfds
        return {
            "schema": SCHEMA_VERSION,
            "metric": self.metric.name,
            "kernel": {"family": self.kernel.family, "h": self.kernel.h},
            "radii": {"theta1": self.radii.theta1, "theta2": self.radii.theta2},
            "support": {
                "points": s.points.tolist(),
                "origin1": s.origin1.tolist(),
                "origin2": s.origin2.tolist(),
                "q1": s.q1.tolist(),
                "q2": s.q2.tolist(),
                "n1": s.n1,
                "n2": s.n2,
            },
            "test": {"pi_hat": t.pi_hat.tolist(), "lambda1": t.lambda1, "lambda2": t.lambda2,
                     "eps_star": t.eps_star},
            "lfds": {"p1": f.p1.tolist(), "p2": f.p2.tolist(), "gamma1": f.gamma1.tolist(),
                     "gamma2": f.gamma2.tolist(), "psi_star": f.psi_star,
                     "budget_duals": list(f.budget_duals)},
        }

    def to_json(self) -> str:
        # float repr round-trips exactly, so the document is lossless
        return json.dumps(self.to_dict(), indent=1)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def from_dict(cls, doc: dict) -> "ExtendedTest":
        if not isinstance(doc, dict) or "schema" not in doc:
            raise ModelFormatError("model document has no 'schema' field")
        try:
            major = int(str(doc["schema"]).split(".")[0])
        except ValueError:
            raise ModelFormatError(f"unreadable schema version {doc['schema']!r}") from None
        if major != SCHEMA_VERSION:
            raise ModelFormatError(f"unsupported model schema version {doc['schema']!r} (expected {SCHEMA_VERSION})")
        try:
            s, t, f = doc["support"], doc["test"], doc["lfds"]
            arr = lambda v: _frozen(np.asarray(v, dtype=np.float64))
            points = arr(s["points"])
            support = PooledSupport(
                points=points.reshape(len(s["points"]), -1),
                origin1=np.asarray(s["origin1"], dtype=int), origin2=np.asarray(s["origin2"], dtype=int),
                q1=arr(s["q1"]), q2=arr(s["q2"]), n1=int(s["n1"]), n2=int(s["n2"]),
            )
            test = SupportTest(pi_hat=arr(t["pi_hat"]), lambda1=float(t["lambda1"]),
                               lambda2=float(t["lambda2"]), eps_star=float(t["eps_star"]))
            lfds = LfdSolution(p1=arr(f["p1"]), p2=arr(f["p2"]), gamma1=arr(f["gamma1"]), gamma2=arr(f["gamma2"]),
                               psi_star=float(f["psi_star"]), budget_duals=tuple(f.get("budget_duals", (0.0, 0.0))))
            kernel = KernelSpec(doc["kernel"]["family"], doc["kernel"]["h"])
            radii = Radii(doc["radii"]["theta1"], doc["radii"]["theta2"])
            metric = get_metric(doc.get("metric", "euclid"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"malformed model document: {exc}") from exc
        n = support.n
        if test.pi_hat.size != n or lfds.p1.size != n or lfds.p2.size != n:
            raise ModelFormatError("model vectors do not match the support size")
        return cls(support_test=test, lfds=lfds, kernel=kernel, pooled=support, radii=radii, metric=metric)

    @classmethod
    def from_json(cls, text: str) -> "ExtendedTest":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path) -> "ExtendedTest":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


class ModelFormatError(ValueError):
    """A serialized model could not be read."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def evaluate(test: ExtendedTest, omega) -> float:
    return test.evaluate(omega)


def fit(
    d1: Dataset,
    d2: Dataset,
    radii: Radii,
    kernel: KernelSpec | None = None,
    metric: MetricSpec = EUCLIDEAN,
    backend: str = "simplex",
    selection: str = "center",
) -> ExtendedTest:
    """Pool the data, solve the LFDs and the support test, and wrap them up."""
    support = pool(d1, d2)
    cost = cost_matrix(support, metric)
    lfds = solve_lfds(support, cost, radii, backend=backend, selection=selection)
    test = solve_support_test(support, cost, radii, lfds=lfds, backend=backend)
    if kernel is None:
        kernel = KernelSpec("gaussian", silverman_bandwidth(support.points))
    return ExtendedTest(support_test=test, lfds=lfds, kernel=kernel, pooled=support, radii=radii, metric=metric)
