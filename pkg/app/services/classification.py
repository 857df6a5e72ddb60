"""
Binary classification through a fitted model: predict 1 iff the partial sum is at least 0.5.
"""
import numpy as np

from app.anova.grouped_transform import GroupedCoefficients
from app.anova.model import evaluate
from app.models.dataset import ClassificationReport

DECISION_THRESHOLD = 0.5


def predict(coefficients: GroupedCoefficients, nodes, **plan_options) -> np.ndarray:
    values = np.real(evaluate(coefficients, np.clip(nodes, 0.0, 1.0), **plan_options))
    return (values >= DECISION_THRESHOLD).astype(np.int64)


def score(predictions: np.ndarray, labels: np.ndarray) -> ClassificationReport:
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if predictions.shape != labels.shape:
        raise ValueError(f"{predictions.shape[0]} predictions for {labels.shape[0]} labels")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    tp = int(np.sum((predictions == 1) & (labels == 1)))
    tn = int(np.sum((predictions == 0) & (labels == 0)))
    fp = int(np.sum((predictions == 1) & (labels == 0)))
    fn = int(np.sum((predictions == 0) & (labels == 1)))
    accuracy = 100.0 * (tp + tn) / len(labels) if len(labels) else 0.0
    return ClassificationReport(accuracy=accuracy, true_positive=tp, true_negative=tn,
                                false_positive=fp, false_negative=fn)


def classify_and_score(coefficients: GroupedCoefficients, nodes, labels, **plan_options) -> ClassificationReport:
    """p = 100 (1 - mean |prediction - label|) on a held-out split."""
    return score(predict(coefficients, nodes, **plan_options), labels)
