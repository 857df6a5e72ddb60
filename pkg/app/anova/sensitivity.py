"""
Variances, global sensitivity indices and active-set detection for fitted
grouped coefficients.

By Parseval the variance of the ANOVA term f_u of a partial sum is the sum of
its squared coefficient moduli; the constant term carries no variance.
"""
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from app.anova.grouped_index import TermSet, term_id
from app.anova.grouped_transform import GroupedCoefficients
from app.core.errors import ZeroVarianceError
from app.models.anova import ActiveSetSpec, SolverKind


def term_variances(coefficients: GroupedCoefficients) -> np.ndarray:
    """Variance of every term in term-set order (0 for the constant term)."""
    index_set = coefficients.index_set
    squared = np.abs(coefficients.values) ** 2
    out = np.add.reduceat(squared, index_set.offsets[:-1]) if len(squared) else np.zeros(0)
    for i, u in enumerate(index_set.term_set):
        if not u:
            out[i] = 0.0
    return out


def term_variance(coefficients: GroupedCoefficients, u: Sequence[int]) -> float:
    u = tuple(sorted(u))
    if not u:
        # raises for terms outside the set
        coefficients.index_set.term_set.index(u)
        return 0.0
    return float(np.sum(np.abs(coefficients[u]) ** 2))


def global_variance(coefficients: GroupedCoefficients) -> float:
    return float(term_variances(coefficients).sum())


def sensitivity_indices(coefficients: GroupedCoefficients, strict: bool = True) -> np.ndarray:
    """GSI of every term; all zeros for a constant model unless strict."""
    variances = term_variances(coefficients)
    total = variances.sum()
    if total <= 0:
        if strict:
            raise ZeroVarianceError("the model has no variance; sensitivity indices are undefined")
        return np.zeros_like(variances)
    return variances / total


def global_sensitivity_index(coefficients: GroupedCoefficients, u: Sequence[int]) -> float:
    total = global_variance(coefficients)
    if total <= 0:
        raise ZeroVarianceError("the model has no variance; sensitivity indices are undefined")
    return term_variance(coefficients, u) / total


@dataclass
class FitResult:
    """Fitted coefficients with their sensitivity analysis and solver diagnostics."""
    coefficients: GroupedCoefficients
    lam: float
    solver: SolverKind
    variances: np.ndarray
    global_variance: float
    gsi: np.ndarray
    iterations: int = 0
    converged: bool = True
    residual_norm: float = float("nan")
    objective_trace: list = field(default_factory=list)

    @classmethod
    def from_coefficients(cls, coefficients: GroupedCoefficients, lam: float, solver: SolverKind,
                          **diagnostics) -> "FitResult":
        variances = term_variances(coefficients)
        return cls(
            coefficients=coefficients,
            lam=float(lam),
            solver=SolverKind(solver),
            variances=variances,
            global_variance=float(variances.sum()),
            gsi=sensitivity_indices(coefficients, strict=False),
            **diagnostics,
        )

    @classmethod
    def from_solver(cls, result) -> "FitResult":
        return cls.from_coefficients(
            result.coefficients, result.lam, result.solver,
            iterations=result.iterations, converged=result.converged,
            residual_norm=result.residual_norm, objective_trace=list(result.objective_trace),
        )

    @property
    def term_set(self) -> TermSet:
        return self.coefficients.index_set.term_set

    def gsi_by_id(self) -> Dict[str, float]:
        return {term_id(u): float(g) for u, g in zip(self.term_set, self.gsi)}

    def nonzero_terms(self, tol: float = 0.0) -> TermSet:
        """Terms whose coefficient group is not identically zero."""
        index_set = self.coefficients.index_set
        keep = [u for i, u in enumerate(index_set.term_set)
                if np.max(np.abs(self.coefficients.group(i)), initial=0.0) > tol]
        return TermSet(index_set.d, tuple(keep))


def detect_active_set(fit: FitResult, spec: ActiveSetSpec, gsi: Optional[np.ndarray] = None) -> TermSet:
    """{const} together with every term whose GSI exceeds the threshold of its order."""
    values = fit.gsi if gsi is None else np.asarray(gsi)
    terms = [()]
    for u, g in zip(fit.term_set, values):
        if u and g > spec.threshold(len(u)):
            terms.append(u)
    return TermSet(fit.term_set.d, tuple(terms))
