"""
The approximation pipeline: fit on a superset of terms, read off the
sensitivity indices, detect the active set and refit on it.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from app.anova.grouped_index import GroupedIndexSet, TermSet
from app.anova.grouped_transform import GroupedCoefficients, NodeSet, TransformPlan
from app.anova.sensitivity import FitResult, detect_active_set
from app.anova.solvers import fista_solve, lsqr_solve
from app.anova.weights import WeightFunction
from app.core.errors import OracleInconsistencyError
from app.models.anova import ActiveSetSpec, FistaConfig, LsqrConfig, SolverKind

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoefficientOracle:
    """Exact Fourier coefficients c_k(f) (vectorized over (n, d) arrays) and ||f||^2."""
    coefficient: Callable[[np.ndarray], np.ndarray]
    norm_sq: float


def l2_error(coefficients: GroupedCoefficients, oracle: CoefficientOracle) -> float:
    """Relative L2 error ||f - S f|| / ||f|| computed in frequency space."""
    exact = np.asarray(oracle.coefficient(coefficients.index_set.frequencies()))
    if exact.shape != coefficients.values.shape:
        raise OracleInconsistencyError(
            f"oracle returned {exact.shape} coefficients for {coefficients.values.shape} frequencies"
        )
    radicand = (oracle.norm_sq
                + float(np.sum(np.abs(coefficients.values - exact) ** 2))
                - float(np.sum(np.abs(exact) ** 2)))
    if radicand < -1e-12 * max(1.0, oracle.norm_sq):
        raise OracleInconsistencyError(
            f"oracle coefficients carry more energy than ||f||^2 (radicand {radicand:.3e})"
        )
    return float(np.sqrt(max(radicand, 0.0) / oracle.norm_sq))


def solve(plan: TransformPlan, y, solver: SolverKind, lam: float, weights: WeightFunction,
          lsqr_config: Optional[LsqrConfig] = None, fista_config: Optional[FistaConfig] = None,
          initial: Optional[GroupedCoefficients] = None) -> FitResult:
    solver = SolverKind(solver)
    if solver is SolverKind.LSQR:
        result = lsqr_solve(plan, y, lam, weights, lsqr_config)
    else:
        result = fista_solve(plan, y, lam, weights, fista_config, initial=initial)
    return FitResult.from_solver(result)


def lambda_sweep(plan: TransformPlan, y, solver: SolverKind, lambdas: Sequence[float],
                 weights: WeightFunction, warm_start: bool = True,
                 lsqr_config: Optional[LsqrConfig] = None,
                 fista_config: Optional[FistaConfig] = None) -> List[FitResult]:
    """Fits from the largest to the smallest lambda.

    With warm_start each FISTA run starts at the previous minimizer; LSQR
    always starts at zero.
    """
    if len(lambdas) == 0:
        raise ValueError("lambda grid must not be empty")
    ordered = sorted((float(lam) for lam in lambdas), reverse=True)
    fits: List[FitResult] = []
    previous: Optional[GroupedCoefficients] = None
    for lam in ordered:
        fit = solve(plan, y, solver, lam, weights, lsqr_config, fista_config,
                    initial=previous if warm_start else None)
        fits.append(fit)
        previous = fit.coefficients
        logger.debug("sweep %s lam=%.4g iterations=%d", SolverKind(solver).value, lam, fit.iterations)
    return fits


@dataclass
class PipelineResult:
    fit: FitResult
    active_set: Optional[TermSet] = None
    refit: Optional[FitResult] = None
    refit_index_set: Optional[GroupedIndexSet] = field(default=None, repr=False)

    @property
    def final(self) -> FitResult:
        return self.refit if self.refit is not None else self.fit


def refit_index_set(index_set: GroupedIndexSet, active: TermSet,
                    refit_bandwidths: Optional[Sequence[int]] = None) -> GroupedIndexSet:
    """Index set on the active terms; per-order bandwidths default to the detection ones."""
    if refit_bandwidths is None:
        return index_set.restrict(active)
    return GroupedIndexSet.from_orders(active, refit_bandwidths, index_set.basis)


def fit_pipeline(nodes: Union[NodeSet, np.ndarray], y, index_set: GroupedIndexSet,
                 solver: SolverKind, lam: float, weights: WeightFunction,
                 active_set: Optional[ActiveSetSpec] = None,
                 refit_bandwidths: Optional[Sequence[int]] = None,
                 lsqr_config: Optional[LsqrConfig] = None,
                 fista_config: Optional[FistaConfig] = None,
                 **plan_options) -> PipelineResult:
    """Fit on index_set and, given thresholds, refit on the detected active set."""
    plan = TransformPlan.create(nodes, index_set, **plan_options)
    fit = solve(plan, y, solver, lam, weights, lsqr_config, fista_config)
    if active_set is None:
        return PipelineResult(fit)
    active = detect_active_set(fit, active_set)
    refit_set = refit_index_set(index_set, active, refit_bandwidths)
    logger.info("active set: %d of %d terms, %d frequencies", len(active), len(index_set.term_set),
                refit_set.total)
    refit_plan = TransformPlan.create(plan.node_set, refit_set, **plan_options)
    refit = solve(refit_plan, y, solver, lam, weights, lsqr_config, fista_config)
    return PipelineResult(fit, active, refit, refit_set)


def evaluate(coefficients: Union[FitResult, GroupedCoefficients], nodes, **plan_options) -> np.ndarray:
    """Fitted partial sum at new nodes (real part for the cosine basis)."""
    if isinstance(coefficients, FitResult):
        coefficients = coefficients.coefficients
    plan = TransformPlan.create(nodes, coefficients.index_set, **plan_options)
    return plan.forward_array(coefficients.values)


def evaluate_term(coefficients: Union[FitResult, GroupedCoefficients], u: Sequence[int], nodes,
                  **plan_options) -> np.ndarray:
    """The fitted ANOVA term f_u at new nodes."""
    if isinstance(coefficients, FitResult):
        coefficients = coefficients.coefficients
    index_set = coefficients.index_set
    single = index_set.restrict(TermSet(index_set.d, (tuple(sorted(u)),)))
    plan = TransformPlan.create(nodes, single, **plan_options)
    return plan.forward_array(np.asarray(coefficients[u]))
