"""
Nine-dimensional B-spline benchmark function with exact Fourier coefficients.

    f(x) = B2(x1) B4(x3) B6(x8) + B2(x2) B4(x5) B6(x6) + B2(x4) B4(x7) B6(x9)

B_j is the normalized 1-periodic B-spline of order j with Fourier
coefficients c_j sinc(pi k / j)^j cos(pi k); ||B_j|| = 1 and its mean is c_j.
Only the 21 subsets of the three triples carry ANOVA terms.
"""
from functools import lru_cache
from itertools import combinations
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import BSpline

from app.anova.grouped_index import Term, TermSet
from app.anova.grouped_transform import NodeSet
from app.anova.model import CoefficientOracle
from app.core.errors import SupportMismatchError

DIMENSION = 9
TRIPLES: Tuple[Term, ...] = ((1, 3, 8), (2, 5, 6), (4, 7, 9))
SPLINE_ORDERS = (2, 4, 6)
NORMALIZATION = {
    2: np.sqrt(3.0 / 4.0),
    4: np.sqrt(315.0 / 604.0),
    6: np.sqrt(277200.0 / 655177.0),
}
# order of the spline factor acting on each coordinate
ORDER_OF = {j: order for triple in TRIPLES for j, order in zip(triple, SPLINE_ORDERS)}
MAX_SERIES_CUTOFF = 2 ** 16


def _check_order(j: int) -> None:
    if j not in NORMALIZATION:
        raise ValueError(f"B-spline order must be 2, 4 or 6, got {j}")


def bspline_coefficient(j: int, k) -> np.ndarray:
    """Fourier coefficient of B_j at integer frequencies k (c_j at k = 0)."""
    _check_order(j)
    k = np.asarray(k, dtype=float)
    # np.sinc(t) = sin(pi t) / (pi t), so sinc(pi k / j) is np.sinc(k / j)
    return NORMALIZATION[j] * np.sinc(k / j) ** j * np.cos(np.pi * k)


@lru_cache(maxsize=None)
def _cardinal(j: int) -> BSpline:
    return BSpline.basis_element(np.arange(-j / 2.0, j / 2.0 + 1.0), extrapolate=False)


def bspline_value(j: int, x) -> np.ndarray:
    """B_j(x) = c_j j M_j(j (x - 1/2)) with the centered cardinal B-spline M_j, x taken mod 1."""
    _check_order(j)
    x = np.mod(np.asarray(x, dtype=float), 1.0)
    values = _cardinal(j)(j * (x - 0.5))
    return NORMALIZATION[j] * j * np.nan_to_num(values, nan=0.0)


def bspline_tail_bound(j: int, K: int) -> float:
    """Upper bound of sum_{|k| > K} |c_j sinc(pi k / j)^j|."""
    _check_order(j)
    # |sinc(pi k / j)|^j <= (j / (pi k))^j; the tail sum is bounded by the integral from K
    factor = (j / np.pi) ** j
    return float(2.0 * NORMALIZATION[j] * factor / ((j - 1) * K ** (j - 1)))


def bspline_series_value(j: int, x, K: Optional[int] = None, tol: float = 1e-10) -> np.ndarray:
    """Truncated symmetric Fourier series of B_j; K defaults to the smallest cutoff meeting tol."""
    _check_order(j)
    if K is None:
        K = 1
        while bspline_tail_bound(j, K) >= tol and K < MAX_SERIES_CUTOFF:
            K *= 2
    x = np.asarray(x, dtype=float)
    k = np.arange(1, K + 1)
    coefficients = bspline_coefficient(j, k)
    phase = 2.0 * np.pi * np.multiply.outer(x, k)
    return bspline_coefficient(j, 0) + 2.0 * (np.cos(phase) @ coefficients)


def testfun_value(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != DIMENSION:
        raise ValueError(f"test function expects {DIMENSION} coordinates, got {x.shape[1]}")
    total = np.zeros(x.shape[0])
    for triple in TRIPLES:
        product = np.ones(x.shape[0])
        for j in triple:
            product *= bspline_value(ORDER_OF[j], x[:, j - 1])
        total += product
    return total[0] if single else total


def testfun_fourier_coefficient(k) -> np.ndarray:
    """c_k(f) for one frequency or an (n, 9) array; zero unless supp k lies in one triple."""
    k = np.asarray(k)
    single = k.ndim == 1
    k = np.atleast_2d(k)
    out = np.zeros(k.shape[0], dtype=complex)
    nonzero = k != 0
    for triple in TRIPLES:
        inside = np.zeros(DIMENSION, dtype=bool)
        inside[[j - 1 for j in triple]] = True
        fits = ~np.any(nonzero[:, ~inside], axis=1)
        product = np.ones(k.shape[0])
        for j in triple:
            product *= bspline_coefficient(ORDER_OF[j], k[:, j - 1])
        out += np.where(fits, product, 0.0)
    return out[0] if single else out


def _mean_product() -> float:
    return float(np.prod([NORMALIZATION[j] for j in SPLINE_ORDERS]))


def testfun_norm_sq() -> float:
    """||f||^2: three unit-norm products plus six cross terms, each the product of the means."""
    return 3.0 + 6.0 * _mean_product() ** 2


def testfun_oracle() -> CoefficientOracle:
    return CoefficientOracle(testfun_fourier_coefficient, testfun_norm_sq())


def active_terms() -> TermSet:
    """U*: the constant term and all nonempty subsets of the three triples."""
    terms = [()]
    for triple in TRIPLES:
        terms.extend(v for r in (1, 2, 3) for v in combinations(triple, r))
    return TermSet(DIMENSION, tuple(terms))


def _triple_of(u: Term) -> Optional[Term]:
    for triple in TRIPLES:
        if set(u) <= set(triple):
            return triple
    return None


def analytic_term(u: Sequence[int], x_u) -> np.ndarray:
    """ANOVA term f_u evaluated at x_u (shape (..., |u|)); zero outside U*."""
    u = tuple(sorted(u))
    if not u:
        return 3.0 * _mean_product()
    x_u = np.asarray(x_u, dtype=float)
    if x_u.shape[-1] != len(u):
        raise SupportMismatchError(f"term {u} needs {len(u)} coordinates, got {x_u.shape[-1]}")
    triple = _triple_of(u)
    if triple is None:
        return np.zeros(x_u.shape[:-1])
    value = np.ones(x_u.shape[:-1])
    for position, j in enumerate(u):
        order = ORDER_OF[j]
        value = value * (bspline_value(order, x_u[..., position]) - NORMALIZATION[order])
    for j in triple:
        if j not in u:
            value = value * NORMALIZATION[ORDER_OF[j]]
    return value


def testfun_term_variance(u: Sequence[int]) -> float:
    """Exact variance of f_u: prod over u of (1 - c^2) times prod over the rest of the triple of c^2."""
    u = tuple(sorted(u))
    triple = _triple_of(u) if u else None
    if triple is None:
        return 0.0
    variance = 1.0
    for j in triple:
        c_sq = NORMALIZATION[ORDER_OF[j]] ** 2
        variance *= (1.0 - c_sq) if j in u else c_sq
    return variance


def testfun_sensitivity_indices(term_set: Optional[TermSet] = None) -> Dict[Term, float]:
    """Exact GSIs of f, on U* by default or on any term set of dimension 9."""
    terms = active_terms() if term_set is None else term_set
    total = sum(testfun_term_variance(u) for u in active_terms() if u)
    return {u: testfun_term_variance(u) / total for u in terms}


def sample_testfun(M: int, noise_level: float = 0.0, seed=None,
                   noise_mode: str = "relative") -> Tuple[NodeSet, np.ndarray]:
    """M uniform nodes in [0, 1)^9 and (optionally noisy) values of f.

    relative: sigma = noise_level ||y|| / sqrt(M), so E||noise|| / ||y|| is
    about noise_level; absolute: sigma = noise_level.
    """
    if M < 1:
        raise ValueError(f"M must be positive, got {M}")
    if noise_level < 0:
        raise ValueError(f"noise level must be non-negative, got {noise_level}")
    if noise_mode not in ("relative", "absolute"):
        raise ValueError(f"noise mode must be relative or absolute, got {noise_mode!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    nodes = rng.random((M, DIMENSION))
    y = testfun_value(nodes)
    if noise_level > 0:
        sigma = noise_level if noise_mode == "absolute" else noise_level * np.linalg.norm(y) / np.sqrt(M)
        y = y + sigma * rng.standard_normal(M)
    return NodeSet(nodes), y
