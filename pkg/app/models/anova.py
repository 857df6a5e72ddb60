"""
Pydantic models for solver settings and active-set thresholds.
"""
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field, field_validator


class SolverKind(str, Enum):
    LSQR = "lsqr"
    FISTA = "fista"


class LsqrConfig(BaseModel):
    """Settings of the damped LSQR solve for the Tikhonov problem."""
    max_iter: Optional[int] = Field(None, ge=1, description="Iteration limit (None: twice the unknown count)")
    atol: float = Field(1e-8, gt=0, lt=1, description="Relative tolerance on the normal-equation residual")
    btol: float = Field(1e-8, gt=0, lt=1, description="Relative tolerance on the data residual")


class FistaConfig(BaseModel):
    """Settings of FISTA with backtracking for the group lasso."""
    L0: float = Field(1.0, gt=0, description="Initial step constant")
    eta: float = Field(2.0, gt=1, description="Backtracking factor")
    max_iter: int = Field(1000, ge=1, description="Iteration limit K")
    xi_tol: float = Field(1e-12, gt=0, lt=1, description="Relative tolerance of the prox root finder")
    stop_tol: float = Field(1e-8, ge=0, description="Relative iterate-change stopping tolerance")
    constant_step: bool = Field(False, description="Skip backtracking and keep L = L0")
    exempt_mean: bool = Field(False, description="Leave the constant term unpenalized")
    group_scaling: bool = Field(False, description="Scale each group penalty by sqrt(group size)")


class ActiveSetSpec(BaseModel):
    """One sensitivity threshold per term order; entries lie in [0, 1)."""
    thresholds: List[float] = Field(..., min_length=1, description="epsilon_1, ..., epsilon_ds")

    @field_validator("thresholds")
    @classmethod
    def _in_unit_interval(cls, v: List[float]) -> List[float]:
        for eps in v:
            if not 0.0 <= eps < 1.0:
                raise ValueError(f"thresholds must lie in [0, 1), got {eps}")
        return v

    def threshold(self, order: int) -> float:
        if order < 1:
            raise ValueError("the constant term has no threshold")
        if order > len(self.thresholds):
            return self.thresholds[-1]
        return self.thresholds[order - 1]
