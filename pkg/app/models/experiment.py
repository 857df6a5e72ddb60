"""
Experiment configuration: a JSON file plus command-line overrides.
"""
import json
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from app.anova.grouped_index import Basis
from app.models.anova import FistaConfig, LsqrConfig


class ExperimentKind(str, Enum):
    SYNTHETIC_LSQR = "synthetic-lsqr"
    SYNTHETIC_FISTA = "synthetic-fista"
    CENSUS = "census"
    TRANSFORM_BENCH = "transform-bench"


class BandwidthPreset(str, Enum):
    SMALL = "small"
    LARGE = "large"
    CENSUS = "census"
    EXPLICIT = "explicit"


# per-order bandwidths (N_1, N_2, ...) of the named presets
PRESET_BANDWIDTHS: Dict[BandwidthPreset, List[int]] = {
    BandwidthPreset.SMALL: [26, 6, 4],
    BandwidthPreset.LARGE: [352, 20, 8],
    BandwidthPreset.CENSUS: [82, 10],
}
CENSUS_REFIT_BANDWIDTHS = [300, 10]
SYNTHETIC_THRESHOLDS = [0.01, 0.01, 0.01]
CENSUS_THRESHOLDS = [0.1, 0.1]


class ExperimentConfig(BaseModel):
    experiment: ExperimentKind = Field(ExperimentKind.SYNTHETIC_LSQR, description="Which experiment to run")
    preset: BandwidthPreset = Field(BandwidthPreset.SMALL, description="Bandwidth preset")
    bandwidths: Optional[List[int]] = Field(None, description="Explicit per-order bandwidths")
    refit_bandwidths: Optional[List[int]] = Field(None, description="Per-order bandwidths of the active-set refit")
    superposition: Optional[int] = Field(None, ge=1, description="Superposition threshold d_s")
    smoothness: float = Field(0.0, ge=0, description="Sobolev weight smoothness s")
    noise: float = Field(0.0, ge=0, description="Noise level")
    noise_mode: str = Field("relative", pattern="^(relative|absolute)$", description="relative or absolute noise")
    samples: int = Field(10000, ge=1, description="Number of sampling nodes M")
    lambda_min: float = Field(float(np.exp(0.0)), gt=0, description="Smallest regularization parameter")
    lambda_max: float = Field(float(np.exp(10.0)), gt=0, description="Largest regularization parameter")
    lambda_count: int = Field(50, ge=1, description="Log-spaced grid points")
    reps: int = Field(10, ge=1, description="Repetitions averaged per lambda")
    seed: int = Field(0, ge=0, description="Master seed")
    warm_start: bool = Field(True, description="Start each FISTA run at the previous minimizer")
    active_thresholds: Optional[List[float]] = Field(None, description="Sensitivity thresholds per order")
    lsqr: LsqrConfig = Field(default_factory=LsqrConfig)
    fista: FistaConfig = Field(default_factory=FistaConfig)
    folds: int = Field(10, ge=1, description="Cross-validation folds (1: single train/test split)")
    train_fraction: float = Field(0.8, gt=0, lt=1, description="Train share of the single split")
    census_csv: Optional[Path] = Field(None, description="Census CSV file")
    recipe: Optional[Path] = Field(None, description="JSON dataset recipe")
    bench_dimension: int = Field(4, ge=1, description="d of the transform benchmark")
    bench_superposition: int = Field(2, ge=1, description="d_s of the transform benchmark")
    bench_samples: List[int] = Field(default_factory=lambda: [1000, 10000], description="M values benchmarked")
    threads: Optional[int] = Field(None, ge=1, description="Worker threads (default from settings)")
    out: Optional[Path] = Field(None, description="Result CSV path")
    emit_network: Optional[Path] = Field(None, description="DOT file for the ANOVA network")

    @model_validator(mode="after")
    def _check(self):
        if self.lambda_max < self.lambda_min:
            raise ValueError("lambda_max must not be smaller than lambda_min")
        if self.preset is BandwidthPreset.EXPLICIT and not self.bandwidths:
            raise ValueError("the explicit preset needs bandwidths")
        if self.active_thresholds is not None:
            for eps in self.active_thresholds:
                if not 0.0 <= eps < 1.0:
                    raise ValueError(f"active thresholds must lie in [0, 1), got {eps}")
        return self

    @classmethod
    def from_json(cls, path: Path, **overrides: Any) -> "ExperimentConfig":
        data = json.loads(Path(path).read_text()) if path else {}
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    @property
    def is_census(self) -> bool:
        return self.experiment is ExperimentKind.CENSUS

    @property
    def basis(self) -> Basis:
        return Basis.COSINE if self.is_census else Basis.EXPONENTIAL

    def per_order_bandwidths(self) -> List[int]:
        if self.bandwidths:
            return list(self.bandwidths)
        if self.preset is BandwidthPreset.EXPLICIT:
            raise ValueError("the explicit preset needs bandwidths")
        if self.is_census and self.preset in (BandwidthPreset.SMALL, BandwidthPreset.LARGE):
            return list(PRESET_BANDWIDTHS[BandwidthPreset.CENSUS])
        return list(PRESET_BANDWIDTHS[self.preset])

    def superposition_threshold(self) -> int:
        if self.superposition is not None:
            return self.superposition
        return len(self.per_order_bandwidths())

    def thresholds(self) -> List[float]:
        if self.active_thresholds is not None:
            return list(self.active_thresholds)
        return list(CENSUS_THRESHOLDS if self.is_census else SYNTHETIC_THRESHOLDS)

    def census_refit_bandwidths(self) -> List[int]:
        return list(self.refit_bandwidths or CENSUS_REFIT_BANDWIDTHS)

    def lambda_grid(self) -> np.ndarray:
        """Log-spaced grid from lambda_max down to lambda_min."""
        return np.geomspace(self.lambda_max, self.lambda_min, self.lambda_count)

    def output_path(self, default_dir: Path) -> Path:
        return self.out or Path(default_dir) / f"{self.experiment.value}.csv"
