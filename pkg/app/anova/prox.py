"""
Exact proximal operator of the weighted group norm.

For one group y with weights w >= 1 and threshold lam the minimizer of
    1/2 ||x - y||^2 + lam ||x||_W,    ||x||_W^2 = sum w |x|^2,
is zero when lam >= sqrt(sum |y|^2 / w) and otherwise y / (1 + xi w), where
xi > 0 is the root of
    t(xi) = sum w |y|^2 xi^2 / (1 + xi w)^2 = lam^2.
t is strictly increasing, so the root is bracketed by bisection and polished
with safeguarded Newton steps. Complex entries shrink by modulus only.
"""
import logging
from typing import List, Optional, Sequence

import numpy as np

from app.anova.grouped_index import GroupedIndexSet
from app.anova.grouped_transform import GroupedCoefficients, shared_executor
from app.anova.weights import WeightFunction
from app.core.errors import BracketError

logger = logging.getLogger(__name__)

BISECTION_RTOL = 1e-3
NEWTON_RTOL = 1e-12
MAX_NEWTON_STEPS = 100
MAX_BISECTION_STEPS = 200


def weighted_norm(x: np.ndarray, w: np.ndarray) -> float:
    return float(np.sqrt(np.sum(w * np.abs(x) ** 2)))


def zero_threshold(y: np.ndarray, w: np.ndarray) -> float:
    """||(y_k / w_k)_k||_W, the smallest threshold that maps the group to zero."""
    return float(np.sqrt(np.sum(np.abs(y) ** 2 / w)))


def shrink_group_closed_form(y: np.ndarray, xi: float, w: np.ndarray) -> np.ndarray:
    """Minimizer of 1/2 ||x - y||^2 + xi ||x||_W^2, i.e. y / (1 + 2 xi w)."""
    if xi < 0:
        raise ValueError(f"xi must be non-negative, got {xi}")
    return np.asarray(y) / (1.0 + 2.0 * xi * np.asarray(w, dtype=float))


def _t(xi: float, a: np.ndarray, w: np.ndarray) -> float:
    return float(np.sum(a * xi * xi / (1.0 + xi * w) ** 2))


def _t_prime(xi: float, a: np.ndarray, w: np.ndarray) -> float:
    return float(np.sum(2.0 * a * xi / (1.0 + xi * w) ** 3))


def _bracket(a: np.ndarray, w: np.ndarray, target: float):
    """Bracket [lo, hi] of the root in xi, narrowed to BISECTION_RTOL."""
    if _t(1.0, a, w) >= target:
        lo, hi = 0.0, 1.0
        for _ in range(MAX_BISECTION_STEPS):
            if hi - lo <= BISECTION_RTOL * hi:
                break
            mid = 0.5 * (lo + hi)
            if _t(mid, a, w) < target:
                lo = mid
            else:
                hi = mid
        return lo, hi
    # reciprocal parameterization tau = 1 / xi on (0, 1]; s(tau) decreases
    lo, hi = 0.0, 1.0
    for _ in range(MAX_BISECTION_STEPS):
        if hi - lo <= BISECTION_RTOL * hi:
            break
        mid = 0.5 * (lo + hi)
        if np.sum(a / (mid + w) ** 2) > target:
            lo = mid
        else:
            hi = mid
    return 1.0 / hi, (1.0 / lo if lo > 0 else np.inf)


def find_xi(y: np.ndarray, w: np.ndarray, lam: float, tol: float = NEWTON_RTOL) -> float:
    """Root xi of t(xi) = lam^2, with |t(xi) - lam^2| <= tol * lam^2 on success.

    Raises BracketError when lam is not below the zero threshold of the group.
    """
    y = np.asarray(y)
    w = np.asarray(w, dtype=float)
    if lam <= 0:
        return 0.0
    a = w * np.abs(y) ** 2
    target = lam * lam
    limit = float(np.sum(a / w ** 2))
    if not target < limit:
        raise BracketError(
            f"threshold {lam:.6g} is not below the zero threshold {np.sqrt(limit):.6g} of the group"
        )
    lo, hi = _bracket(a, w, target)
    xi = 0.5 * (lo + hi) if np.isfinite(hi) else 2.0 * lo
    residual = _t(xi, a, w) - target
    for _ in range(MAX_NEWTON_STEPS):
        if abs(residual) <= tol * target:
            return xi
        if residual < 0:
            lo = xi
        else:
            hi = xi
        slope = _t_prime(xi, a, w)
        step = xi - residual / slope if slope > 0 else np.nan
        if not (lo < step < hi):
            step = 0.5 * (lo + hi) if np.isfinite(hi) else 2.0 * xi
        if step == xi:
            break
        xi = step
        residual = _t(xi, a, w) - target
    if abs(residual) > tol * target:
        logger.debug("find_xi stopped at relative residual %.3e", abs(residual) / target)
    return xi


def prox_group(y: np.ndarray, w: np.ndarray, lam: float, tol: float = NEWTON_RTOL) -> np.ndarray:
    """Proximal map of lam ||.||_W applied to one group."""
    y = np.asarray(y)
    w = np.asarray(w, dtype=float)
    if lam <= 0:
        return y.copy()
    if lam >= zero_threshold(y, w):
        return np.zeros_like(y)
    if w.size and np.all(w == w.flat[0]):
        # constant weights: group soft thresholding
        return (1.0 - lam * np.sqrt(w.flat[0]) / np.linalg.norm(y)) * y
    xi = find_xi(y, w, lam, tol)
    return y / (1.0 + xi * w)


def group_thresholds(index_set: GroupedIndexSet, lam: float, exempt_mean: bool = False,
                     group_scaling: bool = False) -> np.ndarray:
    """Per-group threshold: lam, times sqrt(group size) when scaled, 0 for an exempt mean."""
    thresholds = np.full(len(index_set.term_set), float(lam))
    if group_scaling:
        thresholds *= np.sqrt(index_set.sizes.astype(float))
    if exempt_mean:
        for i, u in enumerate(index_set.term_set):
            if not u:
                thresholds[i] = 0.0
    return thresholds


def prox_blocks(values: np.ndarray, index_set: GroupedIndexSet, group_weights: Sequence[np.ndarray],
                thresholds: np.ndarray, threads: int = 1, tol: float = NEWTON_RTOL) -> np.ndarray:
    """Apply prox_group to every block of a flat coefficient vector."""
    count = len(index_set.term_set)

    def one(i: int) -> np.ndarray:
        return prox_group(values[index_set.block(i)], group_weights[i], thresholds[i], tol)

    if threads > 1 and count > 1:
        parts: List[np.ndarray] = list(shared_executor(threads).map(one, range(count)))
    else:
        parts = [one(i) for i in range(count)]
    return np.concatenate(parts)


def prox_grouped(coefficients: GroupedCoefficients, lam: float, weights: WeightFunction,
                 exempt_mean: bool = False, group_scaling: bool = False, threads: int = 1,
                 group_weights: Optional[Sequence[np.ndarray]] = None) -> GroupedCoefficients:
    """Group-wise proximal map of lam * sum_u ||f(u)||_W(u)."""
    if lam < 0:
        raise ValueError(f"prox threshold must be non-negative, got {lam}")
    index_set = coefficients.index_set
    if group_weights is None:
        group_weights = weights.groups(index_set)
    thresholds = group_thresholds(index_set, lam, exempt_mean, group_scaling)
    return GroupedCoefficients(index_set, prox_blocks(coefficients.values, index_set, group_weights,
                                                      thresholds, threads))
