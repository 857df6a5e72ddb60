"""
Frequency weights for the regularizers.

The Sobolev rule omega_s(k) = prod_{j in supp k} (1 + |k_j|)^s encodes
dominating-mixed smoothness; s = 0 gives the constant-one rule.
"""
from dataclasses import dataclass
from functools import reduce
from typing import List

import numpy as np

from app.anova.grouped_index import GroupedIndexSet


@dataclass(frozen=True)
class WeightFunction:
    smoothness: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.smoothness) or self.smoothness < 0:
            raise ValueError(f"smoothness must be a finite value >= 0, got {self.smoothness}")

    @classmethod
    def constant(cls) -> "WeightFunction":
        return cls(0.0)

    @classmethod
    def sobolev(cls, smoothness: float) -> "WeightFunction":
        return cls(float(smoothness))

    @property
    def is_constant(self) -> bool:
        return self.smoothness == 0.0

    def __call__(self, frequencies: np.ndarray) -> np.ndarray:
        """Weights of an (n, d) frequency array, or of a single frequency."""
        k = np.atleast_2d(np.asarray(frequencies, dtype=float))
        values = np.prod((1.0 + np.abs(k)) ** self.smoothness, axis=1)
        return values if np.ndim(frequencies) > 1 else values[0]

    def group(self, index_set: GroupedIndexSet, index: int) -> np.ndarray:
        """Weights of one group in its flat (odometer) layout."""
        u = index_set.term_set.terms[index]
        if not u or self.is_constant:
            return np.ones(int(index_set.sizes[index]))
        axis = (1.0 + np.abs(index_set.group_values(index))) ** self.smoothness
        cube = reduce(np.multiply.outer, [axis] * len(u))
        return np.asarray(cube).ravel(order="F")

    def groups(self, index_set: GroupedIndexSet) -> List[np.ndarray]:
        return [self.group(index_set, i) for i in range(len(index_set.term_set))]

    def vector(self, index_set: GroupedIndexSet) -> np.ndarray:
        """Diagonal of W over the whole index set."""
        return np.concatenate(self.groups(index_set))
