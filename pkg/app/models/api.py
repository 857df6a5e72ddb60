"""
Pydantic models for the approximation API requests and responses.
"""
from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from app.anova.grouped_index import Basis
from app.models.anova import SolverKind


class IndexSetRequest(BaseModel):
    """Grouped index set over all terms up to the superposition threshold."""
    d: int = Field(..., ge=1, description="Spatial dimension")
    superposition: int = Field(..., ge=1, description="Superposition threshold d_s")
    bandwidths: List[int] = Field(..., min_length=1, description="Bandwidth per term order 1..d_s")
    basis: Basis = Field(Basis.EXPONENTIAL, description="exponential or cosine")


class TermInfo(BaseModel):
    id: str = Field(..., description="Term identifier, e.g. 1-3-8 or const")
    order: int = Field(..., description="Number of variables in the term")
    bandwidth: int
    size: int = Field(..., description="Number of frequencies in the group")


class IndexSetResponse(BaseModel):
    terms: List[TermInfo]
    total: int = Field(..., description="Total number of frequencies")


class FitRequest(BaseModel):
    """Scattered data to fit with one regularization parameter."""
    nodes: List[List[float]] = Field(..., min_length=1, description="M sampling nodes, each of length d")
    values: List[float] = Field(..., min_length=1, description="M function values")
    superposition: int = Field(..., ge=1, description="Superposition threshold d_s")
    bandwidths: List[int] = Field(..., min_length=1, description="Bandwidth per term order")
    basis: Basis = Field(Basis.EXPONENTIAL)
    solver: SolverKind = Field(SolverKind.LSQR)
    lam: float = Field(1.0, ge=0, alias="lambda", description="Regularization parameter")
    smoothness: float = Field(0.0, ge=0, description="Sobolev weight smoothness s")
    active_thresholds: Optional[List[float]] = Field(None, description="Per-order thresholds for the refit")
    refit_bandwidths: Optional[List[int]] = Field(None, description="Per-order bandwidths of the refit")
    prox_exempt_mean: bool = Field(False, description="Leave the constant term unpenalized (FISTA)")

    model_config = {"populate_by_name": True}


class FitSummary(BaseModel):
    variances: Dict[str, float] = Field(..., description="Variance per term")
    gsi: Dict[str, float] = Field(..., description="Global sensitivity index per term")
    global_variance: float
    iterations: int
    converged: bool
    residual_norm: float


class FitResponse(BaseModel):
    fit: FitSummary
    active_set: Optional[List[str]] = Field(None, description="Detected active terms")
    refit: Optional[FitSummary] = None
    network: str = Field(..., description="DOT description of the ANOVA network")
