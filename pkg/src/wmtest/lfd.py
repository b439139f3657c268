"""Least favorable distributions over the pooled support.

The pair ``(p1, p2)`` maximizes the overlap ``sum_m min(p1[m], p2[m])`` while
each ``pk`` stays within Wasserstein-1 distance ``theta_k`` of the empirical
distribution ``qk``. The minimum is linearized with auxiliary variables
``t[m] <= p1[m]``, ``t[m] <= p2[m]``, giving a linear program with
``2 n^2 + 3 n`` variables.

Optimal LFD pairs are generally not unique. By default the solver returns the
analytic center of the optimal face in transport-plan coordinates, which is
unique; callers should still treat it as one optimum among many.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .core import PooledSupport
from .lp import EQ, LE, LinearProgram, LpStatus, NumericalError, solve

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Radii:
    theta1: float
    theta2: float

    def __post_init__(self):
        for name in ("theta1", "theta2"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be a finite nonnegative number, got {v!r}")
            object.__setattr__(self, name, v)

    @classmethod
    def equal(cls, theta: float) -> "Radii":
        return cls(theta, theta)

    def __iter__(self):
        return iter((self.theta1, self.theta2))


@dataclass(frozen=True)
class LfdSolution:
    p1: np.ndarray
    p2: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    psi_star: float
    # sensitivities of psi_star to theta1, theta2
    budget_duals: tuple[float, float] = (0.0, 0.0)


class LfdLayout:
    """Column offsets of the LFD program variables for a support of size ``n``."""

    def __init__(self, n: int):
        self.n = n
        nn = n * n
        self.gamma1 = slice(0, nn)
        self.gamma2 = slice(nn, 2 * nn)
        self.p1 = slice(2 * nn, 2 * nn + n)
        self.p2 = slice(2 * nn + n, 2 * nn + 2 * n)
        self.t = slice(2 * nn + 2 * n, 2 * nn + 3 * n)
        self.size = 2 * nn + 3 * n


def build_lfd_lp(support: PooledSupport, cost: np.ndarray, radii: Radii) -> LinearProgram:
    """Assemble the LFD program. Row order: 2 budgets, 2n row sums, 2n column sums, 2n overlap rows."""
    n = support.n
    cost = np.asarray(cost, dtype=np.float64)
    if cost.shape != (n, n):
        raise ValueError(f"cost matrix shape {cost.shape} does not match support size {n}")
    lay = LfdLayout(n)
    nn = n * n
    rows = 2 + 6 * n
    A = np.zeros((rows, lay.size))
    b = np.zeros(rows)
    rel: list[str] = []
    gam = (lay.gamma1, lay.gamma2)
    ps = (lay.p1, lay.p2)
    qs = (support.q1, support.q2)
    thetas = (radii.theta1, radii.theta2)
    r = 0
    for k in range(2):
        A[r, gam[k]] = cost.ravel()
        b[r] = thetas[k]
        rel.append(LE)
        r += 1
    ar = np.arange(n)
    for k in range(2):
        base = gam[k].start
        for l in range(n):
            A[r, base + l * n: base + (l + 1) * n] = 1.0
            b[r] = qs[k][l]
            rel.append(EQ)
            r += 1
    for k in range(2):
        base = gam[k].start
        for m in range(n):
            A[r, base + m + ar * n] = 1.0
            A[r, ps[k].start + m] = -1.0
            rel.append(EQ)
            r += 1
    for k in range(2):
        for m in range(n):
            A[r, lay.t.start + m] = 1.0
            A[r, ps[k].start + m] = -1.0
            rel.append(LE)
            r += 1
    c = np.zeros(lay.size)
    c[lay.t] = 1.0
    names = (
        [f"gamma1[{l},{m}]" for l in range(n) for m in range(n)]
        + [f"gamma2[{l},{m}]" for l in range(n) for m in range(n)]
        + [f"p1[{m}]" for m in range(n)] + [f"p2[{m}]" for m in range(n)] + [f"t[{m}]" for m in range(n)]
    )
    assert r == rows and len(names) == 2 * nn + 3 * n
    return LinearProgram(c=c, A=A, rel=rel, b=b, sense="max", names=names)


def solve_lfds(
    support: PooledSupport,
    cost: np.ndarray,
    radii: Radii,
    backend: str = "simplex",
    selection: str = "center",
) -> LfdSolution:
    """Solve for a least favorable pair.

    ``selection="vertex"`` returns the basic solution found by the LP backend.
    On the real line with the absolute-difference cost it uses the equivalent
    cumulative-distribution formulation, which has O(n) variables.
    ``selection="center"`` (default) returns the unique point of the optimal
    face maximizing ``sum log gamma`` over the transport-plan entries that can
    be positive there, so the answer does not depend on pivoting order.
    """
    if selection not in ("center", "vertex"):
        raise ValueError(f"selection must be 'center' or 'vertex', got {selection!r}")
    if selection == "vertex" and _is_line_metric(support, cost):
        return _solve_lfds_line(support, cost, radii, backend)
    lp = build_lfd_lp(support, cost, radii)
    sol = solve(lp, backend=backend)
    if sol.status is not LpStatus.OPTIMAL:
        # the empirical pair is always feasible, so anything else is numerical
        raise NumericalError(f"LFD program returned status {sol.status.value}")
    x = sol.x
    if selection == "center":
        centered = _center_optimal_face(lp, sol.objective, LfdLayout(support.n))
        if centered is not None:
            x = centered
        else:
            log.warning("LFD centering failed; falling back to the vertex solution")
    return _unpack(x, support.n, sol)


def _unpack(x: np.ndarray, n: int, sol) -> LfdSolution:
    lay = LfdLayout(n)
    g1 = np.clip(x[lay.gamma1], 0.0, None).reshape(n, n)
    g2 = np.clip(x[lay.gamma2], 0.0, None).reshape(n, n)
    p1 = g1.sum(axis=0)
    p2 = g2.sum(axis=0)
    for a in (g1, g2, p1, p2):
        a.setflags(write=False)
    return LfdSolution(
        p1=p1, p2=p2, gamma1=g1, gamma2=g2,
        psi_star=float(np.minimum(p1, p2).sum()),
        budget_duals=(float(sol.duals[0]), float(sol.duals[1])),
    )


def _center_optimal_face(lp: LinearProgram, value: float, lay: LfdLayout,
                         side_weight: float = 1e-8) -> np.ndarray | None:
    """Analytic center of the optimal face in transport-plan coordinates.

    An interior point run identifies which variables and inequality rows are
    free on the optimal face (primal value vs. dual slack), and supplies a
    relative-interior starting point. Newton's method in the null space of
    the face's equality system then maximizes ``sum log gamma`` with a tiny
    barrier weight on the remaining free variables and loose rows.
    """
    try:
        ip = solve(lp, backend="ipm")
    except NumericalError:
        return None
    if ip.status is not LpStatus.OPTIMAL or abs(ip.objective - value) > 1e-6:
        return None
    A, b = lp.A, lp.b
    x = ip.x.copy()
    red = np.abs(lp.c - A.T @ ip.duals)
    free = x > red
    le = np.array([r == LE for r in lp.rel])
    slack = b - A @ x
    loose = le & (slack > np.abs(ip.duals))
    tight = ~loose
    P = np.flatnonzero(free)
    if P.size == 0:
        return None
    weights = np.full(P.size, side_weight)
    is_gamma = P < lay.gamma2.stop
    weights[is_gamma] = 1.0
    M = np.vstack([A[tight][:, P], lp.c[P][None, :]])
    rhs = np.concatenate([b[tight], [value]])
    G = A[loose][:, P]
    h = b[loose]
    Z = null_space(M, rcond=1e-10)
    z = x[P]
    z = z - np.linalg.lstsq(M, M @ z - rhs, rcond=None)[0]
    if np.any(z <= 0) or np.any(h - G @ z <= 0):
        return None

    def phi(v):
        sl = h - G @ v
        if np.any(v <= 0) or np.any(sl <= 0):
            return -np.inf
        return float(weights @ np.log(v) + side_weight * np.log(sl).sum())

    if Z.shape[1]:
        f = phi(z)
        for _ in range(100):
            sl = h - G @ z
            grad = weights / z + side_weight * (G.T @ (1.0 / sl))
            hess = (Z.T * (weights / z**2)) @ Z + side_weight * ((G @ Z).T * (1.0 / sl**2)) @ (G @ Z)
            gz = Z.T @ grad
            try:
                step = np.linalg.solve(hess, gz)
            except np.linalg.LinAlgError:
                return None
            decrement = float(gz @ step)
            if decrement < 1e-22:
                break
            dz = Z @ step
            alpha = 1.0
            while alpha > 1e-12:
                f_new = phi(z + alpha * dz)
                if f_new >= f + 0.25 * alpha * decrement:
                    break
                alpha *= 0.5
            else:
                break
            z = z + alpha * dz
            f = f_new
    out = np.zeros(lp.num_vars)
    out[P] = z
    # certify: feasibility and optimality of the centered point
    slack = b - A @ out
    eq = ~le
    if (np.abs(slack[eq]).max(initial=0.0) > 1e-9 or slack[le].min(initial=0.0) < -1e-9
            or lp.c @ out < value - 1e-9):
        return None
    return out


def _is_line_metric(support: PooledSupport, cost: np.ndarray) -> bool:
    if support.dim != 1:
        return False
    x = support.points[:, 0]
    return bool(np.array_equal(np.asarray(cost), np.abs(x[:, None] - x[None, :])))


def _solve_lfds_line(support: PooledSupport, cost: np.ndarray, radii: Radii, backend: str) -> LfdSolution:
    """LFDs for 1-D supports under ``|x - y|``.

    On a line W1(p, q) = sum_i gap_i * |F_p(i) - F_q(i)| over sorted points,
    so the transport plans drop out. Each class gets a CDF shift
    ``D = d_plus - d_minus`` with ``p = q + diff(D)``; every row is then a
    ``<=`` row with nonnegative right-hand side and the all-slack basis is
    feasible from the start.
    """
    n = support.n
    order = np.argsort(support.points[:, 0], kind="stable")
    gaps = np.diff(support.points[order, 0])
    k = n - 1
    # p = q + Delta @ D over sorted positions
    delta = np.zeros((n, k))
    delta[np.arange(k), np.arange(k)] = 1.0
    delta[np.arange(1, n), np.arange(k)] = -1.0
    nv = 4 * k + n
    T = slice(4 * k, nv)
    rows, b = [], []
    for c in range(2):
        q = (support.q1, support.q2)[c][order]
        dp, dm = slice(2 * c * k, 2 * c * k + k), slice(2 * c * k + k, 2 * c * k + 2 * k)
        row = np.zeros(nv)
        row[dp] = gaps
        row[dm] = gaps
        rows.append(row[None, :]); b.append([(radii.theta1, radii.theta2)[c]])
        # p >= 0
        blk = np.zeros((n, nv))
        blk[:, dp] = -delta
        blk[:, dm] = delta
        rows.append(blk); b.append(q)
        # t <= p
        blk = blk.copy()
        blk[:, T] = np.eye(n)
        rows.append(blk); b.append(q)
    obj = np.zeros(nv)
    obj[T] = 1.0
    A = np.vstack(rows)
    lp = LinearProgram(c=obj, A=A, rel=[LE] * A.shape[0], b=np.concatenate(b), sense="max")
    sol = solve(lp, backend=backend)
    if sol.status is not LpStatus.OPTIMAL:
        raise NumericalError(f"LFD program returned status {sol.status.value}")
    inv = np.empty(n, dtype=int)
    inv[order] = np.arange(n)
    ps, gs = [], []
    for c in range(2):
        q = (support.q1, support.q2)[c]
        D = sol.x[2 * c * k: 2 * c * k + k] - sol.x[2 * c * k + k: 2 * c * k + 2 * k]
        p = np.clip(q[order] + delta @ D, 0.0, None)[inv]
        p = p / p.sum()
        gs.append(_monotone_coupling(q, p, order))
        ps.append(gs[-1].sum(axis=0))
    for a in (*ps, *gs):
        a.setflags(write=False)
    return LfdSolution(
        p1=ps[0], p2=ps[1], gamma1=gs[0], gamma2=gs[1],
        psi_star=float(np.minimum(ps[0], ps[1]).sum()),
        budget_duals=(float(sol.duals[0]), float(sol.duals[1 + 2 * n])),
    )


def _monotone_coupling(q: np.ndarray, p: np.ndarray, order: np.ndarray) -> np.ndarray:
    """Quantile coupling of ``q`` (rows) and ``p`` (columns): optimal for ``|x - y|`` on a line."""
    n = q.size
    g = np.zeros((n, n))
    a = q[order].astype(np.float64).copy()
    c = p[order].astype(np.float64).copy()
    i = j = 0
    while i < n and j < n:
        mass = min(a[i], c[j])
        g[order[i], order[j]] += mass
        a[i] -= mass
        c[j] -= mass
        if a[i] <= c[j]:
            i += 1
        else:
            j += 1
    return g


def transport_cost(p, q, cost: np.ndarray, backend: str = "simplex") -> float:
    """Wasserstein-1 distance between two weight vectors on a common support."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    n = p.size
    # tolerate rounding in the marginals: scale q to p's mass
    q = q * (p.sum() / q.sum())
    A = np.zeros((2 * n, n * n))
    for i in range(n):
        A[i, i * n:(i + 1) * n] = 1.0
        A[n + i, i::n] = 1.0
    lp = LinearProgram(c=np.asarray(cost, dtype=np.float64).ravel(), A=A, rel=[EQ] * (2 * n),
                       b=np.concatenate([p, q]))
    sol = solve(lp, backend=backend)
    if sol.status is not LpStatus.OPTIMAL:
        raise NumericalError(f"transport program returned status {sol.status.value}")
    return sol.objective
