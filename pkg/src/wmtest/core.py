"""Domain types, pooled support, cost matrices and simple-hypothesis risks."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist

NORMALIZATION_TOL = 1e-9


class Hypothesis(enum.Enum):
    H0 = "H0"
    H1 = "H1"


class DimensionError(ValueError):
    """Samples of inconsistent dimension were combined."""


class SupportMismatchError(ValueError):
    """Two vectors over a pooled support have different lengths."""


class MetricError(ValueError):
    """A metric produced a negative, non-finite or asymmetric value."""


def as_sample(omega, dim: int | None = None) -> np.ndarray:
    """Coerce ``omega`` to a finite 1-D float array, optionally of length ``dim``."""
    x = np.atleast_1d(np.asarray(omega, dtype=np.float64))
    if x.ndim != 1 or x.size == 0:
        raise DimensionError(f"a sample must be a non-empty vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample coordinates must be finite")
    if dim is not None and x.size != dim:
        raise DimensionError(f"sample has dimension {x.size}, expected {dim}")
    return x


def as_samples(samples) -> np.ndarray:
    """Coerce a list of samples (or a 1-D list of scalars) to an ``(n, d)`` array."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise DimensionError(f"expected a 2-D array of samples, got shape {x.shape}")
    if x.shape[1] < 1:
        raise DimensionError("samples must have dimension >= 1")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample coordinates must be finite (no NaN/Inf)")
    return x


@dataclass(frozen=True)
class Dataset:
    """Training samples for one hypothesis, stored as an ``(n, d)`` array."""

    hypothesis: Hypothesis
    samples: np.ndarray

    def __post_init__(self):
        x = as_samples(self.samples)
        if x.shape[0] == 0:
            raise ValueError(f"dataset for {self.hypothesis.value} is empty")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @classmethod
    def h0(cls, samples) -> "Dataset":
        return cls(Hypothesis.H0, samples)

    @classmethod
    def h1(cls, samples) -> "Dataset":
        return cls(Hypothesis.H1, samples)


@dataclass(frozen=True)
class PooledSupport:
    """Union of both training sets with the two empirical distributions on it.

    ``origin1[m]`` is the index of point ``m`` in the class-1 dataset, or -1 if
    the point carries no class-1 mass; likewise ``origin2``.
    """

    points: np.ndarray
    origin1: np.ndarray
    origin2: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    n1: int
    n2: int

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def index_of(self, omega) -> int | None:
        """Index of the pooled point bitwise equal to ``omega``, if any."""
        x = as_sample(omega, self.dim)
        hits = np.flatnonzero(np.all(self.points == x, axis=1))
        return int(hits[0]) if hits.size else None


def pool(d1: Dataset, d2: Dataset) -> PooledSupport:
    """Pool two datasets into one support, merging bitwise-equal points.

    Class-1 points come first in their original order, followed by class-2
    points not already present. A point repeated within one class keeps the
    accumulated weight of its copies.
    """
    if d1.dim != d2.dim:
        raise DimensionError(f"dimension mismatch: class 1 has d={d1.dim}, class 2 has d={d2.dim}")
    index: dict[bytes, int] = {}
    points: list[np.ndarray] = []
    origin1: list[int] = []
    origin2: list[int] = []
    w1: list[float] = []
    w2: list[float] = []
    for k, data in ((1, d1), (2, d2)):
        for i, row in enumerate(data.samples):
            # +0.0 folds -0.0 into 0.0 so the key matches numeric equality
            key = (row + 0.0).tobytes()
            m = index.get(key)
            if m is None:
                m = len(points)
                index[key] = m
                points.append(row)
                origin1.append(-1)
                origin2.append(-1)
                w1.append(0.0)
                w2.append(0.0)
            if k == 1:
                if origin1[m] < 0:
                    origin1[m] = i
                w1[m] += 1.0
            else:
                if origin2[m] < 0:
                    origin2[m] = i
                w2[m] += 1.0
    pts = np.array(points, dtype=np.float64).reshape(len(points), d1.dim)
    q1 = np.array(w1) / d1.n
    q2 = np.array(w2) / d2.n
    for a in (pts, q1, q2):
        a.setflags(write=False)
    return PooledSupport(
        points=pts,
        origin1=np.array(origin1),
        origin2=np.array(origin2),
        q1=q1,
        q2=q2,
        n1=d1.n,
        n2=d2.n,
    )


def _euclidean(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return cdist(x, y, metric="euclidean")


@dataclass(frozen=True)
class MetricSpec:
    """A named pairwise metric ``pairwise(X, Y) -> |X| x |Y|`` distance matrix.

    Only symmetry, nonnegativity and finiteness are validated, and only on the
    points actually passed in; the remaining metric axioms are the caller's
    responsibility.
    """

    name: str = "euclid"
    pairwise: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(default=_euclidean, compare=False)

    def __call__(self, x, y) -> np.ndarray:
        return np.asarray(self.pairwise(as_samples(x), as_samples(y)), dtype=np.float64)


EUCLIDEAN = MetricSpec()

METRICS = {"euclid": EUCLIDEAN}


def get_metric(name: str) -> MetricSpec:
    try:
        return METRICS[name]
    except KeyError:
        raise ValueError(f"unknown metric {name!r}; available: {sorted(METRICS)}") from None


def cost_matrix(support: PooledSupport, metric: MetricSpec = EUCLIDEAN) -> np.ndarray:
    """Pairwise metric values over the pooled support (read-only array)."""
    c = metric(support.points, support.points)
    n = support.n
    if c.shape != (n, n):
        raise MetricError(f"metric returned shape {c.shape}, expected {(n, n)}")
    if not np.all(np.isfinite(c)):
        raise MetricError("metric returned a non-finite value")
    if np.any(c < 0):
        raise MetricError("metric returned a negative value")
    scale = max(1.0, float(c.max(initial=0.0)))
    if np.max(np.abs(c - c.T), initial=0.0) > 1e-12 * scale:
        raise MetricError("metric is not symmetric on the sample set")
    c = 0.5 * (c + c.T)
    np.fill_diagonal(c, 0.0)
    c.setflags(write=False)
    return c


def as_distribution(weights, n: int | None = None, tol: float = NORMALIZATION_TOL) -> np.ndarray:
    """Validate a weight vector, renormalizing when within ``tol`` of summing to 1."""
    p = np.asarray(weights, dtype=np.float64).ravel()
    if n is not None and p.size != n:
        raise SupportMismatchError(f"distribution has {p.size} entries, support has {n}")
    if not np.all(np.isfinite(p)):
        raise ValueError("distribution weights must be finite")
    if np.any(p < -tol):
        raise ValueError("distribution weights must be nonnegative")
    total = p.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"distribution weights sum to {total!r}, not 1")
    return np.clip(p, 0.0, None) / np.clip(p, 0.0, None).sum()


def _pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    if p.shape != q.shape:
        raise SupportMismatchError(f"support mismatch: {p.size} vs {q.size} entries")
    return p, q


def total_variation(p, q) -> float:
    p, q = _pair(p, q)
    return 0.5 * float(np.abs(p - q).sum())


def simple_risk(p, q) -> float:
    """Minimal Type-I + Type-II risk for the simple pair ``(p, q)``: sum of pointwise minima."""
    p, q = _pair(p, q)
    return float(np.minimum(p, q).sum())


def optimal_simple_test(p, q, tie: float = 0.5) -> np.ndarray:
    """Likelihood-comparison test: 1 where ``p > q``, 0 where ``p < q``, ``tie`` otherwise."""
    p, q = _pair(p, q)
    return np.where(p > q, 1.0, np.where(p < q, 0.0, tie))


def risk(pi, p, q) -> float:
    """Type-I plus Type-II error of the randomized test ``pi`` under ``(p, q)``.

    ``pi[m]`` is the probability of accepting H0 at support point ``m``.
    """
    p, q = _pair(p, q)
    pi = np.asarray(pi, dtype=np.float64).ravel()
    if pi.shape != p.shape:
        raise SupportMismatchError(f"test has {pi.size} entries, support has {p.size}")
    if np.any(pi < 0) or np.any(pi > 1) or not np.all(np.isfinite(pi)):
        raise ValueError("test values must lie in [0, 1]")
    return float(((1.0 - pi) * p).sum() + (pi * q).sum())
