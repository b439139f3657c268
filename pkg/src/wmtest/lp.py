"""Dense linear programs and a self-contained revised simplex solver.

Problems are small (a few hundred variables), so the basis inverse is kept
as a dense matrix and updated with rank-one eta steps. Pricing is Dantzig's
rule; after a run of degenerate pivots the solver falls back to Bland's rule,
which guarantees termination.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
OPT_TOL = 1e-9
# accepted residual when interior point iterates stall on a degenerate face
STALL_TOL = 1e-6

LE, EQ, GE = "<=", "=", ">="
_REL_SIGN = {LE: 1, EQ: 0, GE: -1}


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class NumericalError(RuntimeError):
    """The solver failed for numerical reasons (not infeasibility)."""


@dataclass
class LinearProgram:
    """``sense c.x`` subject to ``A x (rel) b`` and ``lo <= x <= hi``.

    ``rel`` holds one of ``"<="``, ``"="``, ``">="`` per row. Lower bounds may be
    ``-inf``; upper bounds may be ``+inf``.
    """

    c: np.ndarray
    A: np.ndarray
    rel: list[str]
    b: np.ndarray
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    sense: str = "min"
    names: list[str] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64).ravel()
        n = self.c.size
        self.A = np.asarray(self.A, dtype=np.float64).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=np.float64).ravel()
        self.rel = list(self.rel)
        self.lo = np.zeros(n) if self.lo is None else np.asarray(self.lo, dtype=np.float64).ravel()
        self.hi = np.full(n, np.inf) if self.hi is None else np.asarray(self.hi, dtype=np.float64).ravel()
        m = self.A.shape[0]
        if self.b.size != m or len(self.rel) != m:
            raise ValueError(f"constraint data inconsistent: A has {m} rows, b {self.b.size}, rel {len(self.rel)}")
        if self.lo.size != n or self.hi.size != n:
            raise ValueError("bounds must have one entry per variable")
        if any(r not in _REL_SIGN for r in self.rel):
            raise ValueError(f"relations must be one of {list(_REL_SIGN)}")
        if not np.all(np.isfinite(self.b)) or not np.all(np.isfinite(self.A)) or not np.all(np.isfinite(self.c)):
            raise ValueError("objective, constraint matrix and rhs must be finite")
        if np.any(self.lo == np.inf) or np.any(self.hi == -np.inf) or np.any(self.lo > self.hi):
            raise ValueError("invalid variable bounds")
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")

    @property
    def num_vars(self) -> int:
        return self.c.size

    @property
    def num_constraints(self) -> int:
        return self.A.shape[0]


@dataclass
class LpSolution:
    """Solver result. ``duals[i]`` is the sensitivity of the optimal value to ``b[i]``."""

    status: LpStatus
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    objective: float = math.nan
    dual_objective: float = math.nan
    primal_residual: float = math.nan
    cs_residual: float = math.nan
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def certify(lp: LinearProgram, x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Return ``(dual_objective, primal_residual, cs_residual)`` for a candidate pair."""
    slack = lp.b - lp.A @ x
    sign = np.array([_REL_SIGN[r] for r in lp.rel])
    # violation of each row in its own direction
    viol = np.where(sign > 0, np.maximum(-slack, 0), np.where(sign < 0, np.maximum(slack, 0), np.abs(slack)))
    bound_viol = np.maximum(lp.lo - x, 0) + np.maximum(x - lp.hi, 0)
    primal_res = float(max(viol.max(initial=0.0), bound_viol.max(initial=0.0)))

    r = lp.c - lp.A.T @ y
    # for min, positive reduced cost pins a variable at its lower bound
    pin_low = r > 0 if lp.sense == "min" else r < 0
    bound = np.where(pin_low, lp.lo, lp.hi)
    active = np.abs(r) > OPT_TOL
    with np.errstate(invalid="ignore"):
        contrib = np.where(active, r * bound, 0.0)
    dual_obj = float(lp.b @ y + contrib.sum())
    cs_rows = np.abs(y * slack)
    cs_vars = np.where(active, np.abs(r) * np.abs(x - np.where(np.isfinite(bound), bound, x)), 0.0)
    cs_res = float(max(cs_rows.max(initial=0.0), cs_vars.max(initial=0.0)))
    return dual_obj, primal_res, cs_res


# ---------------------------------------------------------------------------
# standard form
# ---------------------------------------------------------------------------


@dataclass
class _StdForm:
    A: np.ndarray  # rows x cols, every column >= 0
    b: np.ndarray  # >= 0
    c: np.ndarray  # min objective
    const: float
    col_var: np.ndarray  # original variable index of each structural column
    col_sign: np.ndarray  # +1 / -1
    col_offset: np.ndarray  # x = offset + sign * column
    n_struct: int
    row_flip: np.ndarray  # +1 / -1 applied to each row
    n_orig_rows: int
    slack_row: np.ndarray  # row of each slack column
    slack_sign: np.ndarray


def _standardize(lp: LinearProgram) -> _StdForm:
    sense = 1.0 if lp.sense == "min" else -1.0
    c = sense * lp.c
    m, n = lp.A.shape
    lo_fin = np.isfinite(lp.lo)
    hi_fin = np.isfinite(lp.hi)
    free = ~lo_fin & ~hi_fin
    # one column per variable, plus a negated copy for free variables
    col_var = np.concatenate([np.arange(n), np.flatnonzero(free)])
    col_sign = np.concatenate([np.where(~lo_fin & hi_fin, -1.0, 1.0), -np.ones(free.sum())])
    col_off = np.where(lo_fin, lp.lo, np.where(hi_fin, lp.hi, 0.0))
    b = lp.b - lp.A @ col_off
    const = float(c @ col_off)
    col_offset = np.concatenate([col_off, np.zeros(free.sum())])
    A = lp.A[:, col_var] * col_sign
    cvec = c[col_var] * col_sign
    ns = col_var.size
    rel = list(lp.rel)
    boxed = np.flatnonzero(lo_fin & hi_fin)
    if boxed.size:
        extra = np.zeros((boxed.size, ns))
        extra[np.arange(boxed.size), boxed] = 1.0
        A = np.vstack([A, extra])
        b = np.concatenate([b, lp.hi[boxed] - lp.lo[boxed]])
        rel += [LE] * boxed.size
    rows = A.shape[0]
    slack_row = np.array([i for i, r in enumerate(rel) if r != EQ], dtype=int)
    slack_sign = np.array([float(_REL_SIGN[rel[i]]) for i in slack_row])
    S = np.zeros((rows, slack_row.size))
    S[slack_row, np.arange(slack_row.size)] = slack_sign
    A = np.hstack([A, S])
    cfull = np.concatenate([cvec, np.zeros(slack_row.size)])
    flip = np.where(b < 0, -1.0, 1.0)
    A = A * flip[:, None]
    b = b * flip
    return _StdForm(
        A=A, b=b, c=cfull, const=const,
        col_var=col_var, col_sign=col_sign, col_offset=col_offset,
        n_struct=ns, row_flip=flip, n_orig_rows=m,
        slack_row=slack_row, slack_sign=slack_sign,
    )


def _presolve(A: np.ndarray, b: np.ndarray, is_eq: np.ndarray):
    """Find equality rows ``a.x = 0`` with ``a >= 0``; all their columns are forced to 0."""
    zero_rows = is_eq & (b == 0) & np.all(A >= 0, axis=1) & np.any(A > 0, axis=1)
    fixed = np.any(A[zero_rows] > 0, axis=0)
    return zero_rows, fixed


# ---------------------------------------------------------------------------
# revised simplex
# ---------------------------------------------------------------------------


class _Simplex:
    REFACTOR_EVERY = 64
    DEGENERATE_SWITCH = 30

    def __init__(self, A, b, max_iter):
        self.A = A
        self.b = b
        self.m, self.N = A.shape
        self.max_iter = max_iter
        self.iterations = 0

    def refactor(self):
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("basis matrix became singular") from exc
        self.xB = self.Binv @ self.b
        self.xB[(self.xB < 0) & (self.xB > -FEAS_TOL)] = 0.0
        self.since_refactor = 0

    def run(self, cost: np.ndarray, allowed: np.ndarray) -> str:
        """Iterate to optimality for ``cost``; returns ``"optimal"`` or ``"unbounded"``."""
        bland = False
        degenerate_run = 0
        in_basis = np.zeros(self.N, dtype=bool)
        in_basis[self.basis] = True
        while True:
            if self.iterations >= self.max_iter:
                raise NumericalError(f"simplex iteration limit ({self.max_iter}) exhausted")
            y = cost[self.basis] @ self.Binv
            d = cost - y @ self.A
            scale = 1.0 + np.abs(cost).max(initial=0.0)
            candidates = allowed & ~in_basis & (d < -OPT_TOL * scale)
            if not candidates.any():
                return "optimal"
            if bland:
                q = int(np.flatnonzero(candidates)[0])
            else:
                q = int(np.argmin(np.where(candidates, d, np.inf)))
            u = self.Binv @ self.A[:, q]
            pos = u > PIVOT_TOL
            # artificial variables parked at zero in redundant rows leave on any sign
            stuck = self.parked[self.basis] & (np.abs(u) > PIVOT_TOL)
            eligible = pos | stuck
            if not eligible.any():
                return "unbounded"
            ratios = np.full(self.m, np.inf)
            ratios[pos] = np.maximum(self.xB[pos], 0.0) / u[pos]
            ratios[stuck] = 0.0
            tmin = ratios.min()
            ties = np.flatnonzero(ratios <= tmin + 1e-12)
            if bland:
                r = int(ties[np.argmin(np.asarray(self.basis)[ties])])
            else:
                r = int(ties[np.argmax(np.abs(u[ties]))])
            theta = ratios[r]
            in_basis[self.basis[r]] = False
            in_basis[q] = True
            self._pivot(r, q, u, theta)
            self.iterations += 1
            if theta <= 1e-12:
                degenerate_run += 1
                if degenerate_run >= self.DEGENERATE_SWITCH:
                    bland = True
            else:
                degenerate_run = 0
                bland = False

    def _pivot(self, r, q, u, theta):
        self.xB -= theta * u
        self.xB[r] = theta
        self.xB[(self.xB < 0) & (self.xB > -FEAS_TOL)] = 0.0
        piv = u[r]
        row = self.Binv[r] / piv
        self.Binv -= np.outer(u, row)
        self.Binv[r] = row
        self.basis[r] = q
        self.since_refactor += 1
        if self.since_refactor >= self.REFACTOR_EVERY:
            self.refactor()


def _solve_simplex(lp: LinearProgram, max_iter: int | None = None) -> LpSolution:
    # tall programs are cheaper through their dual: the basis has one row per variable
    if lp.num_constraints > 2 * lp.num_vars + 10:
        sol = _solve_via_dual(lp, max_iter)
        if sol is not None:
            return sol
    return _solve_simplex_primal(lp, max_iter)


def _dual_program(lp: LinearProgram):
    """Dual of ``lp`` plus the data needed to map a dual solution back."""
    s = 1.0 if lp.sense == "min" else -1.0
    c = s * lp.c
    m, n = lp.A.shape
    A = lp.A.copy()
    b = lp.b.copy()
    sign = np.ones(n)
    offset = np.zeros(n)
    free = np.zeros(n, dtype=bool)
    extra = []
    for j in range(n):
        lo, hi = lp.lo[j], lp.hi[j]
        if np.isfinite(lo):
            offset[j] = lo
            if np.isfinite(hi):
                extra.append((j, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            sign[j] = -1.0
        else:
            free[j] = True
    b = b - A @ offset
    A = A * sign
    c = c * sign
    rel = list(lp.rel)
    if extra:
        E = np.zeros((len(extra), n))
        for i, (j, _) in enumerate(extra):
            E[i, j] = 1.0
        A = np.vstack([A, E])
        b = np.concatenate([b, [u for _, u in extra]])
        rel += [LE] * len(extra)
    rows = A.shape[0]
    ylo = np.array([0.0 if r == GE else -np.inf for r in rel])
    yhi = np.array([0.0 if r == LE else np.inf for r in rel])
    dual = LinearProgram(
        c=b, A=A.T, rel=[EQ if f else LE for f in free], b=c, lo=ylo, hi=yhi, sense="max",
    )
    return dual, s, sign, offset, rows


def _solve_via_dual(lp: LinearProgram, max_iter: int | None) -> LpSolution | None:
    dual, s, sign, offset, rows = _dual_program(lp)
    dsol = _solve_simplex_primal(dual, max_iter)
    if dsol.status is LpStatus.UNBOUNDED:
        return LpSolution(LpStatus.INFEASIBLE, iterations=dsol.iterations)
    if dsol.status is not LpStatus.OPTIMAL:
        # dual infeasible: primal is unbounded or infeasible; let the primal decide
        return None
    x = np.clip(offset + sign * dsol.duals, lp.lo, lp.hi)
    y = s * dsol.x[: lp.num_constraints] + 0.0
    dual_obj, pres, cres = certify(lp, x, y)
    return LpSolution(
        LpStatus.OPTIMAL, x=x, duals=y, objective=float(lp.c @ x), dual_objective=dual_obj,
        primal_residual=pres, cs_residual=cres, iterations=dsol.iterations,
    )


def _solve_simplex_primal(lp: LinearProgram, max_iter: int | None = None) -> LpSolution:
    std = _standardize(lp)
    A, b, c = std.A, std.b, std.c
    rows, ncols = A.shape
    is_eq = np.ones(rows, dtype=bool)
    is_eq[std.slack_row] = False
    zero_rows, fixed = _presolve(A, b, is_eq)
    keep_rows = ~zero_rows
    keep_cols = ~fixed
    Ar = A[np.ix_(keep_rows, keep_cols)]
    br = b[keep_rows]
    cr = c[keep_cols]
    m, N = Ar.shape

    # initial basis: +1 slacks where available, artificials elsewhere
    col_index = np.flatnonzero(keep_cols)
    pos_of = {int(j): k for k, j in enumerate(col_index)}
    row_index = np.flatnonzero(keep_rows)
    row_pos = {int(i): k for k, i in enumerate(row_index)}
    basis = [-1] * m
    for k, (i, s) in enumerate(zip(std.slack_row, std.slack_sign)):
        i = int(i)
        if i in row_pos and s * std.row_flip[i] > 0:
            basis[row_pos[i]] = pos_of[std.n_struct + k]
    art_rows = [i for i in range(m) if basis[i] < 0]
    n_art = len(art_rows)
    Aa = np.hstack([Ar, np.zeros((m, n_art))])
    for k, i in enumerate(art_rows):
        Aa[i, N + k] = 1.0
        basis[i] = N + k
    total = N + n_art
    if max_iter is None:
        max_iter = 50 * (m + total) + 1000
    sx = _Simplex(Aa, br, max_iter)
    sx.basis = basis
    sx.parked = np.zeros(total, dtype=bool)
    sx.refactor()
    allowed = np.ones(total, dtype=bool)
    if n_art:
        cost1 = np.zeros(total)
        cost1[N:] = 1.0
        sx.run(cost1, allowed)
        infeas = float(cost1[sx.basis] @ sx.xB)
        if infeas > FEAS_TOL * max(1.0, np.abs(br).max(initial=0.0)):
            return LpSolution(LpStatus.INFEASIBLE, iterations=sx.iterations)
        # drive artificials out of the basis
        for r in range(m):
            if sx.basis[r] < N:
                continue
            row = sx.Binv[r] @ Aa[:, :N]
            row[np.asarray([j for j in sx.basis if j < N], dtype=int)] = 0.0
            j = int(np.argmax(np.abs(row))) if N else 0
            if N and abs(row[j]) > PIVOT_TOL:
                u = sx.Binv @ Aa[:, j]
                sx._pivot(r, j, u, sx.xB[r] / u[r])
            else:
                sx.parked[sx.basis[r]] = True
        allowed[N:] = False
        sx.refactor()
    cost2 = np.concatenate([cr, np.zeros(n_art)])
    if sx.run(cost2, allowed) == "unbounded":
        return LpSolution(LpStatus.UNBOUNDED, iterations=sx.iterations)

    xr = np.zeros(total)
    xr[sx.basis] = np.maximum(sx.xB, 0.0)
    x_std = np.zeros(ncols)
    x_std[keep_cols] = xr[:N]
    y_red = cost2[sx.basis] @ sx.Binv
    y_std = np.zeros(rows)
    y_std[keep_rows] = y_red
    # duals for presolved rows: keep every fixed column dual feasible
    for i in np.flatnonzero(zero_rows):
        cols = np.flatnonzero(A[i] > 0)
        red = c[cols] - y_std @ A[:, cols]
        y_std[i] = min(0.0, float(np.min(red / A[i, cols])))

    return _finish(lp, std, x_std, y_std, sx.iterations)


def _finish(lp: LinearProgram, std: _StdForm, x_std: np.ndarray, y_std: np.ndarray, iterations: int) -> LpSolution:
    x = np.zeros(lp.num_vars)
    np.add.at(x, std.col_var, std.col_sign * x_std[: std.n_struct])
    offset = np.zeros(lp.num_vars)
    offset[std.col_var] = std.col_offset
    x = np.clip(x + offset, lp.lo, lp.hi)
    sense = 1.0 if lp.sense == "min" else -1.0
    y = sense * std.row_flip[: std.n_orig_rows] * y_std[: std.n_orig_rows] + 0.0
    dual_obj, pres, cres = certify(lp, x, y)
    return LpSolution(
        LpStatus.OPTIMAL, x=x, duals=y, objective=float(lp.c @ x), dual_objective=dual_obj,
        primal_residual=pres, cs_residual=cres, iterations=iterations,
    )


def _solve_highs(lp: LinearProgram, max_iter: int | None = None) -> LpSolution:
    from scipy.optimize import linprog

    sense = 1.0 if lp.sense == "min" else -1.0
    sign = np.array([_REL_SIGN[r] for r in lp.rel])
    ub_rows = sign != 0
    A_ub = lp.A[ub_rows] * sign[ub_rows, None]
    b_ub = lp.b[ub_rows] * sign[ub_rows]
    eq = sign == 0
    res = linprog(
        sense * lp.c,
        A_ub=A_ub if ub_rows.any() else None, b_ub=b_ub if ub_rows.any() else None,
        A_eq=lp.A[eq] if eq.any() else None, b_eq=lp.b[eq] if eq.any() else None,
        bounds=list(zip(np.where(np.isfinite(lp.lo), lp.lo, None), np.where(np.isfinite(lp.hi), lp.hi, None))),
        method="highs",
    )
    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE)
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED)
    if res.status != 0:
        raise NumericalError(f"HiGHS failed: {res.message}")
    y = np.zeros(lp.num_constraints)
    if ub_rows.any():
        y[ub_rows] = sense * res.ineqlin.marginals * sign[ub_rows]
    if eq.any():
        y[eq] = sense * res.eqlin.marginals
    x = np.clip(res.x, lp.lo, lp.hi)
    dual_obj, pres, cres = certify(lp, x, y)
    return LpSolution(
        LpStatus.OPTIMAL, x=x, duals=y, objective=float(lp.c @ x), dual_objective=dual_obj,
        primal_residual=pres, cs_residual=cres, iterations=int(res.nit),
    )


def _solve_ipm(lp: LinearProgram, max_iter: int | None = None, tol: float = 1e-10) -> LpSolution:
    """Mehrotra predictor-corrector interior point method on the standard form.

    On problems with several optima the iterates converge to the analytic
    center of the optimal face, so the returned point is a unique, central
    choice rather than an arbitrary vertex.
    """
    std = _standardize(lp)
    A, b, c = std.A, std.b, std.c
    rows, ncols = A.shape
    is_eq = np.ones(rows, dtype=bool)
    is_eq[std.slack_row] = False
    zero_rows, fixed = _presolve(A, b, is_eq)
    keep_rows, keep_cols = ~zero_rows, ~fixed
    Ar = A[np.ix_(keep_rows, keep_cols)]
    br = b[keep_rows]
    cr = c[keep_cols]
    m, N = Ar.shape
    max_iter = 200 if max_iter is None else max_iter
    reg = 1e-13

    def normal_solve(d, rhs):
        M = (Ar * d) @ Ar.T
        M[np.diag_indices_from(M)] += reg * (1.0 + np.abs(np.diag(M)).max(initial=0.0))
        try:
            return np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError:
            return np.linalg.lstsq(M, rhs, rcond=None)[0]

    # Mehrotra starting point
    x = Ar.T @ normal_solve(np.ones(N), br)
    y = normal_solve(np.ones(N), Ar @ cr)
    s = cr - Ar.T @ y
    dx0 = max(-1.5 * x.min(initial=0.0), 0.0)
    ds0 = max(-1.5 * s.min(initial=0.0), 0.0)
    x = x + dx0
    s = s + ds0
    xs = x @ s
    x = x + 0.5 * xs / max(s.sum(), 1e-300) + 1e-8
    s = s + 0.5 * xs / max(x.sum(), 1e-300) + 1e-8

    def max_step(v, dv):
        neg = dv < 0
        return min(1.0, float(np.min(-v[neg] / dv[neg]))) if neg.any() else 1.0

    nb = 1.0 + np.linalg.norm(br)
    nc = 1.0 + np.linalg.norm(cr)
    it = 0
    # iterates can lose feasibility once complementarity is exhausted, so keep the best one
    best = (np.inf, x, y)
    while True:
        rp = br - Ar @ x
        rd = cr - Ar.T @ y - s
        mu = x @ s / N if N else 0.0
        pobj, dobj = cr @ x, br @ y
        prel, drel = np.linalg.norm(rp) / nb, np.linalg.norm(rd) / nc
        score = max(prel, drel, abs(pobj - dobj) / (1.0 + abs(pobj)))
        if score < best[0]:
            best = (score, x, y)
        if score < tol:
            break
        if mu < 1e-14 or not (np.all(np.isfinite(x)) and np.all(np.isfinite(s)) and np.all(s > 0)):
            # degenerate faces can cap accuracy near 1e-7; the residuals are reported
            if best[0] > STALL_TOL:
                raise NumericalError(f"interior point method stalled (residual {best[0]:.1e})")
            _, x, y = best
            break
        if it >= max_iter:
            if np.linalg.norm(rp) / nb > 1e-6:
                # no feasible point reachable: report as infeasible
                return LpSolution(LpStatus.INFEASIBLE, iterations=it)
            if abs(pobj) > 1e12 or abs(dobj) > 1e12:
                return LpSolution(LpStatus.UNBOUNDED, iterations=it)
            raise NumericalError(f"interior point method did not converge in {max_iter} iterations")
        d = x / s

        def direction(rc):
            dy = normal_solve(d, rp - Ar @ ((rc - x * rd) / s))
            ds = rd - Ar.T @ dy
            dx = (rc - x * ds) / s
            return dx, dy, ds

        dxa, dya, dsa = direction(-x * s)
        ap, ad = max_step(x, dxa), max_step(s, dsa)
        mu_aff = (x + ap * dxa) @ (s + ad * dsa) / N
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
        dx, dy, ds = direction(-x * s - dxa * dsa + sigma * mu)
        eta = 0.99 if mu > 1e-6 else 0.9999
        ap = min(1.0, eta * max_step(x, dx))
        ad = min(1.0, eta * max_step(s, ds))
        x = x + ap * dx
        y = y + ad * dy
        s = s + ad * ds
        it += 1

    x_std = np.zeros(ncols)
    x_std[keep_cols] = np.maximum(x, 0.0)
    y_std = np.zeros(rows)
    y_std[keep_rows] = y
    for i in np.flatnonzero(zero_rows):
        cols = np.flatnonzero(A[i] > 0)
        red = c[cols] - y_std @ A[:, cols]
        y_std[i] = min(0.0, float(np.min(red / A[i, cols])))
    return _finish(lp, std, x_std, y_std, it)


BACKENDS: dict[str, Callable[..., LpSolution]] = {
    "simplex": _solve_simplex,
    "ipm": _solve_ipm,
    "highs": _solve_highs,
}


def solve(lp: LinearProgram, backend: str = "simplex", max_iter: int | None = None) -> LpSolution:
    """Solve ``lp`` with the in-house ``"simplex"`` or ``"ipm"``, or scipy's ``"highs"``."""
    try:
        fn = BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown LP backend {backend!r}; choose from {sorted(BACKENDS)}") from None
    return fn(lp, max_iter=max_iter)
