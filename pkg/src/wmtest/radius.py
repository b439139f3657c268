"""Choosing the uncertainty radii.

Two routes are offered. For synthetic studies where the Bayes regions are
known, the cross-class nearest-neighbour statistic bounds the transport
cost needed to make the oracle test least favorable, and its large-sample
constant can be estimated by Monte Carlo. For real data, the radius is
picked by stratified cross-validation of the fitted robust test.
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import EUCLIDEAN, Dataset, MetricSpec, as_samples, cost_matrix, pool
from .lfd import Radii
from .robust import KernelSpec, fit

log = logging.getLogger(__name__)

RATIO_RANGE = (0.2, 5.0)
REJECTION_FACTOR = 100
MIN_MC_SAMPLES = 10_000


class Region(enum.IntEnum):
    REGION1 = 1
    REGION2 = 2


class UndefinedStatisticError(ValueError):
    """A misplaced point has no same-region point of the other class to match."""


class RegionMassError(RuntimeError):
    """Rejection sampling could not find enough points in a region."""


class Method(enum.Enum):
    NN_STATISTIC = "nn-statistic"
    ASYMPTOTIC_FORMULA = "asymptotic-formula"
    CROSS_VALIDATION = "cross-validation"


# ---------------------------------------------------------------------------
# region oracles
# ---------------------------------------------------------------------------

RegionOracle = Callable[[np.ndarray], "Region | int"]


def regions(oracle: RegionOracle, samples) -> np.ndarray:
    """Region label (1 or 2) of each row; uses ``oracle.many`` when available."""
    x = as_samples(samples)
    many = getattr(oracle, "many", None)
    if many is not None:
        out = np.asarray(many(x), dtype=int)
    else:
        out = np.array([int(oracle(row)) for row in x], dtype=int)
    if out.shape != (x.shape[0],) or not np.all((out == 1) | (out == 2)):
        raise ValueError("region oracle must return 1 or 2 for every sample")
    return out


@dataclass(frozen=True)
class ThresholdOracle:
    """Region 1 where ``omega[coord] < cut``, region 2 otherwise (or flipped)."""

    cut: float = 0.0
    coord: int = 0
    region1_below: bool = True

    def many(self, x: np.ndarray) -> np.ndarray:
        below = x[:, self.coord] < self.cut
        return np.where(below == self.region1_below, 1, 2)

    def __call__(self, omega) -> Region:
        return Region(int(self.many(as_samples([omega]))[0]))


@dataclass(frozen=True)
class DensityOracle:
    """Region 1 where ``f1 >= f2``."""

    f1: Callable[[np.ndarray], np.ndarray]
    f2: Callable[[np.ndarray], np.ndarray]

    def many(self, x: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(self.f1(x)) >= np.asarray(self.f2(x)), 1, 2)

    def __call__(self, omega) -> Region:
        return Region(int(self.many(as_samples([omega]))[0]))


# ---------------------------------------------------------------------------
# nearest-neighbour statistic
# ---------------------------------------------------------------------------


def _misplaced_cost(src: np.ndarray, dst: np.ndarray, metric: MetricSpec, what: str) -> float:
    if src.shape[0] == 0:
        return 0.0
    if dst.shape[0] == 0:
        raise UndefinedStatisticError(
            f"{src.shape[0]} {what} point(s) fall in the other class's region, which holds no point of that class"
        )
    return math.fsum(metric(src, dst).min(axis=1).tolist())


def nn_cross_statistic(d1: Dataset, d2: Dataset, oracle: RegionOracle, metric: MetricSpec = EUCLIDEAN) -> float:
    """Mean distance from each misplaced point to the nearest correctly placed point of the other class.

    Class-1 points in region 2 are matched to class-2 points in region 2, and
    class-2 points in region 1 to class-1 points in region 1; the two sums are
    divided by ``n1`` and ``n2`` respectively.
    """
    x1, x2 = d1.samples, d2.samples
    if x1.shape[1] != x2.shape[1]:
        raise ValueError(f"dimension mismatch: {x1.shape[1]} vs {x2.shape[1]}")
    r1 = regions(oracle, x1)
    r2 = regions(oracle, x2)
    g1 = _misplaced_cost(x1[r1 == 2], x2[r2 == 2], metric, "class-1")
    g2 = _misplaced_cost(x2[r2 == 1], x1[r1 == 1], metric, "class-2")
    return g1 / d1.n + g2 / d2.n


# ---------------------------------------------------------------------------
# large-sample constant
# ---------------------------------------------------------------------------


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2.0) / math.gamma(1.0 + d / 2.0)


def nn_prefactor(d: int) -> float:
    """``Gamma(1 + 1/d) / V_d^(1/d)``, the nearest-neighbour distance constant."""
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    return math.gamma(1.0 + 1.0 / d) / unit_ball_volume(d) ** (1.0 / d)


Sampler = Callable[[np.random.Generator, int], np.ndarray]
Density = Callable[[np.ndarray], np.ndarray]


def _restricted_integral(sampler: Sampler, f_num: Density, f_den: Density, oracle: RegionOracle,
                         region: int, d: int, mc_samples: int, rng: np.random.Generator) -> tuple[float, float]:
    """Estimate ``int_region f_num / f_den^(1/d)`` by rejection from ``f_num``.

    Returns ``(estimate, standard error)``.
    """
    accepted: list[np.ndarray] = []
    n_acc = 0
    attempts = 0
    cap = REJECTION_FACTOR * mc_samples
    while n_acc < mc_samples and attempts < cap:
        size = min(max(mc_samples, 1024), cap - attempts)
        x = np.asarray(sampler(rng, size), dtype=np.float64).reshape(size, d)
        attempts += size
        keep = x[regions(oracle, x) == region]
        accepted.append(keep)
        n_acc += keep.shape[0]
    if n_acc < mc_samples:
        raise RegionMassError(
            f"only {n_acc} of {mc_samples} samples landed in region {region} after {attempts} draws"
        )
    x = np.concatenate(accepted)
    dens = np.asarray(f_den(x), dtype=np.float64)
    num = np.asarray(f_num(x), dtype=np.float64)
    if np.any(dens <= 0) or np.any(num <= 0) or not np.all(np.isfinite(dens)):
        raise ValueError("density evaluated to a non-positive or non-finite value at a sampled point")
    vals = dens ** (-1.0 / d)
    mass = n_acc / attempts
    est = mass * float(vals.mean())
    # delta-method error combining the region mass and the conditional mean
    var_mean = vals.var(ddof=1) / n_acc
    var_mass = mass * (1.0 - mass) / attempts
    se = math.sqrt(mass**2 * var_mean + float(vals.mean()) ** 2 * var_mass)
    return est, se


def asymptotic_constant(
    d: int,
    c: float,
    f1: Density,
    f2: Density,
    oracle: RegionOracle,
    sample1: Sampler,
    sample2: Sampler,
    mc_samples: int = MIN_MC_SAMPLES,
    seed: int = 0,
    return_stderr: bool = False,
):
    """Large-sample limit of ``n1^(1/d)`` times the nearest-neighbour statistic.

    ``prefactor * (c^(-1/d) * int_{R2} f1 / f2^(1/d) + int_{R1} f2 / f1^(1/d))``
    with ``c = n2 / n1``. Densities take an ``(k, d)`` array; samplers take
    ``(rng, size)`` and return ``(size, d)`` draws.
    """
    if mc_samples < MIN_MC_SAMPLES:
        raise ValueError(f"mc_samples must be at least {MIN_MC_SAMPLES}, got {mc_samples}")
    if not (c > 0 and np.isfinite(c)):
        raise ValueError(f"sample-size ratio must be positive, got {c!r}")
    pre = nn_prefactor(d)
    rng1, rng2 = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    i2, se2 = _restricted_integral(sample1, f1, f2, oracle, 2, d, mc_samples, rng1)
    i1, se1 = _restricted_integral(sample2, f2, f1, oracle, 1, d, mc_samples, rng2)
    w = c ** (-1.0 / d)
    value = pre * (w * i2 + i1)
    if return_stderr:
        return value, pre * math.sqrt((w * se2) ** 2 + se1**2)
    return value


# ---------------------------------------------------------------------------
# cross-validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadiusReport:
    suggested_theta: float
    method: Method
    g_sup: float | None = None
    asymptotic_constant: float | None = None
    ratio: float | None = None
    ratio_flagged: bool = False
    # (theta, mean held-out risk) per grid point, cross-validation only
    cv_table: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        if self.g_sup is not None and self.g_sup < 0:
            raise ValueError("g_sup must be nonnegative")


def _size_ratio(n1: int, n2: int) -> tuple[float, bool]:
    c = n2 / n1
    flagged = not (RATIO_RANGE[0] <= c <= RATIO_RANGE[1])
    if flagged:
        log.warning("class size ratio n2/n1 = %.3g lies outside [%g, %g]", c, *RATIO_RANGE)
    return c, flagged


def nn_radius_report(d1: Dataset, d2: Dataset, oracle: RegionOracle, metric: MetricSpec = EUCLIDEAN) -> RadiusReport:
    """Radius suggestion equal to the nearest-neighbour statistic."""
    g = nn_cross_statistic(d1, d2, oracle, metric)
    c, flagged = _size_ratio(d1.n, d2.n)
    return RadiusReport(suggested_theta=g, method=Method.NN_STATISTIC, g_sup=g, ratio=c, ratio_flagged=flagged)


def _canonical_order(x: np.ndarray) -> np.ndarray:
    # lexicographic by coordinates so fold assignment ignores input order
    return np.lexsort(x.T[::-1])


def stratified_folds(d1: Dataset, d2: Dataset, folds: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Fold label of every sample of each class, independent of input order."""
    out = []
    for k, data in enumerate((d1, d2)):
        rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
        order = _canonical_order(data.samples)
        perm = order[rng.permutation(data.n)]
        labels = np.empty(data.n, dtype=int)
        labels[perm] = np.arange(data.n) % folds
        out.append(labels)
    return out[0], out[1]


def heldout_risk(test, x1: np.ndarray, x2: np.ndarray) -> float:
    """Type-I plus Type-II error frequency of a randomized test on held-out samples."""
    e1 = float(np.mean(1.0 - test.evaluate_many(x1))) if x1.shape[0] else 0.0
    e2 = float(np.mean(test.evaluate_many(x2))) if x2.shape[0] else 0.0
    return e1 + e2


def default_grid(d1: Dataset, d2: Dataset, metric: MetricSpec = EUCLIDEAN, points: int = 8) -> list[float]:
    """Log-spaced radii over ``[1e-3, 10]`` times the median pairwise cost."""
    c = cost_matrix(pool(d1, d2), metric)
    off = c[np.triu_indices_from(c, k=1)]
    med = float(np.median(off)) if off.size else 1.0
    med = med if med > 0 else 1.0
    return [float(v) for v in med * np.logspace(-3, 1, points)]


def cv_select_radius(
    d1: Dataset,
    d2: Dataset,
    grid: Sequence[float],
    folds: int = 5,
    seed: int = 0,
    kernel: KernelSpec | None = None,
    metric: MetricSpec = EUCLIDEAN,
    backend: str = "simplex",
    selection: str = "center",
    workers: int = 1,
) -> RadiusReport:
    """Equal radii minimizing the mean held-out risk; ties go to the smaller radius."""
    grid = sorted(float(t) for t in grid)
    if not grid:
        raise ValueError("radius grid is empty")
    if any(t < 0 or not np.isfinite(t) for t in grid):
        raise ValueError("radius grid values must be finite and nonnegative")
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    if min(d1.n, d2.n) < folds:
        raise ValueError(f"each class needs at least {folds} samples for {folds}-fold cross-validation "
                         f"(got n1={d1.n}, n2={d2.n})")
    lab1, lab2 = stratified_folds(d1, d2, folds, seed)
    # canonical row order makes every fold's fit independent of input order
    o1, o2 = _canonical_order(d1.samples), _canonical_order(d2.samples)
    x1, lab1 = d1.samples[o1], lab1[o1]
    x2, lab2 = d2.samples[o2], lab2[o2]

    def job(args):
        f, theta = args
        tr1, te1 = x1[lab1 != f], x1[lab1 == f]
        tr2, te2 = x2[lab2 != f], x2[lab2 == f]
        model = fit(Dataset(d1.hypothesis, tr1), Dataset(d2.hypothesis, tr2), Radii.equal(theta),
                    kernel=kernel, metric=metric, backend=backend, selection=selection)
        return heldout_risk(model, te1, te2)

    tasks = [(f, t) for t in grid for f in range(folds)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool_:
            risks = list(pool_.map(job, tasks))
    else:
        risks = [job(t) for t in tasks]
    table = []
    for i, theta in enumerate(grid):
        table.append((theta, math.fsum(risks[i * folds:(i + 1) * folds]) / folds))
    best = min(table, key=lambda row: row[1])[1]
    chosen = next(t for t, r in table if r <= best)  # grid is sorted, so the smallest wins ties
    c, flagged = _size_ratio(d1.n, d2.n)
    log.info("cross-validation chose theta=%.6g (held-out risk %.4f)", chosen, best)
    return RadiusReport(suggested_theta=chosen, method=Method.CROSS_VALIDATION, ratio=c, ratio_flagged=flagged,
                        cv_table=tuple(table))
