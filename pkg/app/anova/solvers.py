"""
Regularized least-squares solvers on a grouped transform plan.

lsqr_solve minimizes 1/2 ||y - F f||^2 + lam ||f||_W^2 through the change of
variables g = W^(1/2) f and damped LSQR (damp = sqrt(2 lam)). fista_solve
minimizes the group lasso 1/2 ||y - F f||^2 + lam sum_u ||f(u)||_W(u) with
FISTA, backtracking on the step constant L and the exact group prox.

Both only touch F through plan.forward_array / plan.adjoint_array.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator, lsqr

from app.anova.grouped_index import Basis
from app.anova.grouped_transform import GroupedCoefficients, TransformPlan
from app.anova.prox import group_thresholds, prox_blocks, weighted_norm
from app.anova.weights import WeightFunction
from app.core.errors import PlanMismatchError
from app.models.anova import FistaConfig, LsqrConfig, SolverKind

logger = logging.getLogger(__name__)

# scipy's lsqr stop code for an exhausted iteration limit
_LSQR_ITERATION_LIMIT = 7


@dataclass
class SolverResult:
    coefficients: GroupedCoefficients
    lam: float
    solver: SolverKind
    iterations: int
    converged: bool
    residual_norm: float
    objective_trace: List[float] = field(default_factory=list)
    lipschitz: Optional[float] = None
    stop_code: Optional[int] = None


def _samples(plan: TransformPlan, y) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (plan.M,):
        raise PlanMismatchError(f"expected {plan.M} samples, got shape {y.shape}")
    return y


def _realified(plan: TransformPlan, scale: np.ndarray) -> LinearOperator:
    """F diag(scale) as a real operator on stacked real and imaginary parts."""
    n, m = plan.index_set.total, plan.M

    def matvec(v):
        v = np.ravel(v)
        out = plan.forward_array(scale * (v[:n] + 1j * v[n:]))
        return np.concatenate([out.real, out.imag])

    def rmatvec(v):
        v = np.ravel(v)
        out = scale * plan.adjoint_array(v[:m] + 1j * v[m:])
        return np.concatenate([out.real, out.imag])

    return LinearOperator((2 * m, 2 * n), matvec=matvec, rmatvec=rmatvec, dtype=float)


def _scaled(plan: TransformPlan, scale: np.ndarray) -> LinearOperator:
    return LinearOperator(
        plan.shape,
        matvec=lambda v: plan.forward_array(scale * np.ravel(v)),
        rmatvec=lambda v: scale * plan.adjoint_array(np.ravel(v)),
        dtype=float,
    )


def lsqr_solve(plan: TransformPlan, y, lam: float, weights: WeightFunction,
               config: Optional[LsqrConfig] = None) -> SolverResult:
    """Weighted Tikhonov fit; non-convergence is reported in the result, not raised."""
    config = config or LsqrConfig()
    if lam < 0:
        raise ValueError(f"regularization must be non-negative, got {lam}")
    y = _samples(plan, y)
    n = plan.index_set.total
    scale = 1.0 / np.sqrt(weights.vector(plan.index_set))
    damp = float(np.sqrt(2.0 * lam))
    complex_problem = plan.basis is Basis.EXPONENTIAL or np.iscomplexobj(y)
    if complex_problem:
        operator = _realified(plan, scale)
        rhs = np.concatenate([np.real(y), np.imag(y)]).astype(float)
    else:
        operator = _scaled(plan, scale)
        rhs = y.astype(float)

    result = lsqr(operator, rhs, damp=damp, atol=config.atol, btol=config.btol,
                  iter_lim=config.max_iter)
    g, istop, itn, r1norm = result[0], int(result[1]), int(result[2]), float(result[3])
    if complex_problem:
        g = g[:n] + 1j * g[n:]
        if plan.basis is Basis.COSINE:
            g = g.real
    coefficients = GroupedCoefficients(plan.index_set, scale * g)
    converged = istop != _LSQR_ITERATION_LIMIT
    if converged:
        logger.debug("lsqr lam=%.4g stopped with code %d after %d iterations", lam, istop, itn)
    else:
        logger.warning("lsqr lam=%.4g hit the iteration limit (%d), residual %.4g", lam, itn, r1norm)
    return SolverResult(coefficients, float(lam), SolverKind.LSQR, itn, converged, r1norm,
                        stop_code=istop)


def _penalty(values: np.ndarray, plan: TransformPlan, group_weights: Sequence[np.ndarray],
             thresholds: np.ndarray) -> float:
    index_set = plan.index_set
    return float(sum(
        thresholds[i] * weighted_norm(values[index_set.block(i)], group_weights[i])
        for i in range(len(index_set.term_set))
        if thresholds[i] > 0
    ))


def group_lasso_objective(plan: TransformPlan, y, coefficients, lam: float, weights: WeightFunction,
                          exempt_mean: bool = False, group_scaling: bool = False) -> float:
    """1/2 ||y - F f||^2 + lam sum_u ||f(u)||_W(u) (norms, not squared)."""
    y = _samples(plan, y)
    values = coefficients.values if isinstance(coefficients, GroupedCoefficients) else np.asarray(coefficients)
    residual = plan.forward_array(values) - y
    thresholds = group_thresholds(plan.index_set, lam, exempt_mean, group_scaling)
    return 0.5 * float(np.vdot(residual, residual).real) + _penalty(
        values, plan, weights.groups(plan.index_set), thresholds
    )


def fista_solve(plan: TransformPlan, y, lam: float, weights: WeightFunction,
                config: Optional[FistaConfig] = None,
                initial: Optional[GroupedCoefficients] = None) -> SolverResult:
    """Group-lasso fit by FISTA with backtracking; returns the last iterate and the objective trace."""
    config = config or FistaConfig()
    if lam < 0:
        raise ValueError(f"regularization must be non-negative, got {lam}")
    y = _samples(plan, y)
    index_set = plan.index_set
    group_weights = weights.groups(index_set)
    thresholds = group_thresholds(index_set, lam, config.exempt_mean, config.group_scaling)

    if initial is not None:
        if initial.index_set != index_set:
            raise PlanMismatchError("initial coefficients belong to a different index set")
        f = np.array(initial.values, dtype=plan.dtype)
    else:
        f = np.zeros(index_set.total, dtype=plan.dtype)
    Ff = plan.forward_array(f)
    h, Fh = f.copy(), Ff.copy()
    t = 1.0
    L = float(config.L0)

    def objective(values, forward_values):
        r = forward_values - y
        return 0.5 * float(np.vdot(r, r).real) + _penalty(values, plan, group_weights, thresholds)

    trace = [objective(f, Ff)]
    converged = False
    iteration = 0
    for iteration in range(1, config.max_iter + 1):
        r_h = Fh - y
        grad = plan.adjoint_array(r_h)
        r_h_sq = float(np.vdot(r_h, r_h).real)
        while True:
            f_new = prox_blocks(h - grad / L, index_set, group_weights, thresholds / L,
                                plan.threads, config.xi_tol)
            Ff_new = plan.forward_array(f_new)
            if config.constant_step:
                break
            r_f = Ff_new - y
            step = f_new - h
            lhs = float(np.vdot(r_f, r_f).real) - r_h_sq
            rhs = 2.0 * float(np.vdot(step, grad).real) + L * float(np.vdot(step, step).real)
            if lhs <= rhs + 1e-12 * max(1.0, r_h_sq):
                break
            L *= config.eta

        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        momentum = (t - 1.0) / t_next
        change = np.linalg.norm(f_new - f)
        h = f_new + momentum * (f_new - f)
        Fh = Ff_new + momentum * (Ff_new - Ff)
        f, Ff, t = f_new, Ff_new, t_next
        trace.append(objective(f, Ff))
        if change / max(1.0, np.linalg.norm(f)) < config.stop_tol:
            converged = True
            break

    if trace[-1] > trace[0]:
        logger.warning("fista lam=%.4g ended above its starting objective (%.6g > %.6g)",
                       lam, trace[-1], trace[0])
    if converged:
        logger.debug("fista lam=%.4g converged after %d iterations, L=%.4g", lam, iteration, L)
    else:
        logger.warning("fista lam=%.4g used all %d iterations", lam, config.max_iter)
    residual = Ff - y
    return SolverResult(
        GroupedCoefficients(index_set, f), float(lam), SolverKind.FISTA, iteration, converged,
        float(np.linalg.norm(residual)), objective_trace=trace, lipschitz=L,
    )
