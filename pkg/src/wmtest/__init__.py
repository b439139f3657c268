"""Data-driven robust hypothesis tests with Wasserstein uncertainty sets."""

from .batch import BatchDecision, Decision, batch_decide, binomial_risk_bound, chernoff_risk_bound
from .core import (
    EUCLIDEAN,
    Dataset,
    DimensionError,
    Hypothesis,
    MetricError,
    MetricSpec,
    PooledSupport,
    SupportMismatchError,
    cost_matrix,
    optimal_simple_test,
    pool,
    risk,
    simple_risk,
    total_variation,
)
from .lfd import LfdSolution, Radii, build_lfd_lp, solve_lfds, transport_cost
from .lp import LinearProgram, LpSolution, LpStatus, NumericalError, solve
from .robust import (
    ExtendedTest,
    KernelSpec,
    OffSupportBounds,
    SupportTest,
    bounds,
    build_support_test_lp,
    evaluate,
    fit,
    smooth_lfds,
    solve_support_test,
)

__all__ = [
    "batch_decide",
    "BatchDecision",
    "binomial_risk_bound",
    "bounds",
    "build_lfd_lp",
    "build_support_test_lp",
    "chernoff_risk_bound",
    "cost_matrix",
    "Dataset",
    "Decision",
    "DimensionError",
    "EUCLIDEAN",
    "evaluate",
    "ExtendedTest",
    "fit",
    "Hypothesis",
    "KernelSpec",
    "LfdSolution",
    "LinearProgram",
    "LpSolution",
    "LpStatus",
    "MetricError",
    "MetricSpec",
    "NumericalError",
    "OffSupportBounds",
    "optimal_simple_test",
    "pool",
    "PooledSupport",
    "Radii",
    "risk",
    "simple_risk",
    "smooth_lfds",
    "solve",
    "solve_lfds",
    "solve_support_test",
    "SupportMismatchError",
    "SupportTest",
    "total_variation",
    "transport_cost",
]

__version__ = "0.1.0"
