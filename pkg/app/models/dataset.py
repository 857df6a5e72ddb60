"""
Pydantic models for tabular data recipes and classification reports.
"""
import json
from pathlib import Path
from typing import List, Optional, Sequence

from pydantic import BaseModel, Field, model_validator

CENSUS_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num", "marital-status",
    "occupation", "relationship", "race", "sex", "capital-gain", "capital-loss",
    "hours-per-week", "native-country", "income",
]


class DatasetRecipe(BaseModel):
    """How a raw CSV becomes a binary classification data set on [0, 1]^d."""
    drop_columns: List[str] = Field(default_factory=lambda: ["education", "fnlwgt"],
                                    description="Columns removed before encoding")
    label_column: str = Field("income", description="Binary target column")
    positive_labels: List[str] = Field(default_factory=lambda: [">50K", ">50K."],
                                       description="Raw label values mapped to 1")
    missing_marker: str = Field("?", description="Cell value marking a missing entry")
    categorical_columns: Optional[List[str]] = Field(
        None, description="Columns to integer-encode (None: every non-numeric column)"
    )
    column_names: Optional[List[str]] = Field(
        None, description="Names for a header-less CSV (None: the first row is the header)"
    )

    @classmethod
    def census(cls) -> "DatasetRecipe":
        return cls()

    @classmethod
    def from_json(cls, path: Path) -> "DatasetRecipe":
        return cls(**json.loads(Path(path).read_text()))


class ClassificationReport(BaseModel):
    """Accuracy p = 100 (1 - mean |prediction - label|) with confusion counts."""
    accuracy: float = Field(..., ge=0, le=100, description="Percentage of correctly classified rows")
    fold_accuracies: List[float] = Field(default_factory=list, description="Accuracy per fold")
    true_positive: int = Field(0, ge=0)
    true_negative: int = Field(0, ge=0)
    false_positive: int = Field(0, ge=0)
    false_negative: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _consistent(self):
        total = self.total
        if total and not self.fold_accuracies:
            expected = 100.0 * (self.true_positive + self.true_negative) / total
            if abs(expected - self.accuracy) > 1e-9:
                raise ValueError(f"accuracy {self.accuracy} disagrees with confusion counts ({expected})")
        return self

    @property
    def total(self) -> int:
        return self.true_positive + self.true_negative + self.false_positive + self.false_negative

    @classmethod
    def combine(cls, reports: Sequence["ClassificationReport"]) -> "ClassificationReport":
        """Mean accuracy over folds with summed confusion counts."""
        if not reports:
            raise ValueError("no reports to combine")
        return cls(
            accuracy=sum(r.accuracy for r in reports) / len(reports),
            fold_accuracies=[r.accuracy for r in reports],
            true_positive=sum(r.true_positive for r in reports),
            true_negative=sum(r.true_negative for r in reports),
            false_positive=sum(r.false_positive for r in reports),
            false_negative=sum(r.false_negative for r in reports),
        )
