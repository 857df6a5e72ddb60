"""
Approximation API routes: index-set inspection and single-lambda fits.
"""
import numpy as np
from fastapi import APIRouter, HTTPException

from app.anova.grouped_index import GroupedIndexSet, build_term_superset, term_id
from app.anova.model import fit_pipeline
from app.anova.network import emit_anova_network
from app.anova.sensitivity import FitResult
from app.anova.weights import WeightFunction
from app.core.config import get_settings
from app.core.errors import AnovaError
from app.models.anova import ActiveSetSpec, FistaConfig
from app.models.api import (
    FitRequest,
    FitResponse,
    FitSummary,
    IndexSetRequest,
    IndexSetResponse,
    TermInfo,
)
from app.services.experiments import plan_options

router = APIRouter()


def _summary(fit: FitResult) -> FitSummary:
    ids = [term_id(u) for u in fit.term_set]
    return FitSummary(
        variances={i: float(v) for i, v in zip(ids, fit.variances)},
        gsi=fit.gsi_by_id(),
        global_variance=fit.global_variance,
        iterations=fit.iterations,
        converged=fit.converged,
        residual_norm=fit.residual_norm,
    )


@router.post("/index-set", response_model=IndexSetResponse)
async def index_set(request: IndexSetRequest):
    """
    Enumerate the terms of U_{d_s} with their bandwidths and group sizes.
    """
    try:
        grouped = GroupedIndexSet.from_orders(
            build_term_superset(request.d, request.superposition), request.bandwidths, request.basis
        )
    except AnovaError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Failed to build index set: {str(e)}")
    terms = [
        TermInfo(id=term_id(u), order=len(u), bandwidth=n, size=int(size))
        for u, n, size in zip(grouped.term_set, grouped.bandwidths, grouped.sizes)
    ]
    return IndexSetResponse(terms=terms, total=grouped.total)


@router.post("/fit", response_model=FitResponse)
def fit(request: FitRequest):
    """
    Fit the scattered data, report variances and sensitivity indices and,
    when thresholds are given, refit on the detected active set.
    """
    nodes = np.asarray(request.nodes, dtype=float)
    values = np.asarray(request.values, dtype=float)
    if nodes.ndim != 2 or nodes.shape[0] != values.shape[0]:
        raise HTTPException(status_code=400, detail="nodes must be an M x d array matching the M values")
    try:
        grouped = GroupedIndexSet.from_orders(
            build_term_superset(nodes.shape[1], request.superposition), request.bandwidths, request.basis
        )
        active = ActiveSetSpec(thresholds=request.active_thresholds) if request.active_thresholds else None
        result = fit_pipeline(
            nodes, values, grouped, request.solver, request.lam,
            WeightFunction.sobolev(request.smoothness),
            active_set=active,
            refit_bandwidths=request.refit_bandwidths,
            fista_config=FistaConfig(exempt_mean=request.prox_exempt_mean),
            **plan_options(get_settings(), 1),
        )
    except (AnovaError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Failed to fit model: {str(e)}")

    return FitResponse(
        fit=_summary(result.fit),
        active_set=[term_id(u) for u in result.active_set] if result.active_set is not None else None,
        refit=_summary(result.refit) if result.refit is not None else None,
        network=emit_anova_network(result.final),
    )
