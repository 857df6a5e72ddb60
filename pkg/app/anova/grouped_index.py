"""
ANOVA term sets and grouped frequency index sets.

Coordinates are 1-based throughout the public API (u = (1, 3, 8) means the
variables x_1, x_3, x_8). Terms are kept in canonical order: by |u|, then
lexicographically; the empty term, when present, comes first.

Inside a group the frequencies are enumerated in odometer order: the
smallest coordinate of u varies fastest and component values ascend. The
same order is the Fortran-order flattening of the |u|-dimensional
coefficient cube, which is what the transforms rely on.
"""
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from math import comb
from typing import Dict, Iterable, Iterator, List, Mapping, NamedTuple, Sequence, Tuple

import numpy as np

from app.core.errors import InvalidBandwidthError, InvalidTermSetError, SupportMismatchError

Term = Tuple[int, ...]


class Basis(str, Enum):
    EXPONENTIAL = "exponential"
    COSINE = "cosine"


def term_id(u: Sequence[int]) -> str:
    """Report identifier of a term: "1-3-8", or "const" for the empty set."""
    return "-".join(str(j) for j in u) if u else "const"


def parse_term_id(text: str) -> Term:
    if text == "const":
        return ()
    return tuple(sorted(int(part) for part in text.split("-")))


def _canonical_key(u: Term) -> Tuple[int, Term]:
    return (len(u), u)


@dataclass(frozen=True)
class TermSet:
    """Ordered collection of coordinate subsets u of {1, ..., d}."""
    d: int
    terms: Tuple[Term, ...]
    _positions: Dict[Term, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.d < 1:
            raise InvalidTermSetError(f"dimension must be positive, got {self.d}")
        normalized = []
        for u in self.terms:
            v = tuple(sorted(int(j) for j in u))
            if len(set(v)) != len(v):
                raise InvalidTermSetError(f"term {u} repeats a coordinate")
            if v and (v[0] < 1 or v[-1] > self.d):
                raise InvalidTermSetError(f"term {u} is not a subset of 1..{self.d}")
            normalized.append(v)
        if len(set(normalized)) != len(normalized):
            raise InvalidTermSetError("terms must be pairwise distinct")
        ordered = tuple(sorted(normalized, key=_canonical_key))
        object.__setattr__(self, "terms", ordered)
        object.__setattr__(self, "_positions", {u: i for i, u in enumerate(ordered)})

    @classmethod
    def from_terms(cls, d: int, terms: Iterable[Sequence[int]]) -> "TermSet":
        return cls(d, tuple(tuple(u) for u in terms))

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[Term]:
        return iter(self.terms)

    def __contains__(self, u) -> bool:
        return tuple(sorted(u)) in self._positions

    def index(self, u: Sequence[int]) -> int:
        key = tuple(sorted(u))
        try:
            return self._positions[key]
        except KeyError:
            raise InvalidTermSetError(f"term {term_id(key)} is not in the term set")

    @property
    def max_order(self) -> int:
        return max((len(u) for u in self.terms), default=0)

    @property
    def ids(self) -> List[str]:
        return [term_id(u) for u in self.terms]

    def is_downward_closed(self) -> bool:
        for u in self.terms:
            for r in range(len(u)):
                for v in combinations(u, r):
                    if v not in self._positions:
                        return False
        return True


def build_term_superset(d: int, d_s: int) -> TermSet:
    """All terms u with |u| <= d_s (the set U_{d_s}), canonical order."""
    if not 1 <= d_s <= d:
        raise InvalidTermSetError(f"superposition threshold must satisfy 1 <= d_s <= d, got d_s={d_s}, d={d}")
    terms = [u for r in range(d_s + 1) for u in combinations(range(1, d + 1), r)]
    return TermSet(d, tuple(terms))


def superset_size(d: int, d_s: int) -> int:
    return sum(comb(d, i) for i in range(d_s + 1))


def validate_bandwidth(n: int, basis: Basis) -> None:
    if n < 2:
        raise InvalidBandwidthError(f"bandwidth must be at least 2, got {n}")
    if basis is Basis.EXPONENTIAL and n % 2:
        raise InvalidBandwidthError(f"exponential basis needs an even bandwidth, got {n}")


def group_cardinality(u: Sequence[int], n: int) -> int:
    if len(u) == 0:
        return 1
    return (n - 1) ** len(u)


def frequency_range(n: int, basis: Basis) -> np.ndarray:
    """Admissible nonzero values of one frequency component."""
    validate_bandwidth(n, basis)
    if basis is Basis.EXPONENTIAL:
        values = np.arange(-n // 2, n // 2)
        return values[values != 0]
    return np.arange(1, n)


def odometer(sizes: int, dims: int) -> np.ndarray:
    """Index tuples of a dims-dimensional cube, first axis varying fastest."""
    if dims == 0:
        return np.zeros((1, 0), dtype=np.intp)
    grid = np.indices((sizes,) * dims)
    return grid.reshape(dims, -1, order="F").T


def enumerate_group(u: Sequence[int], n: int, basis: Basis, d: int) -> np.ndarray:
    """All d-dimensional frequencies with support u, shape (card, d)."""
    u = tuple(sorted(u))
    if not u:
        return np.zeros((1, d), dtype=np.int64)
    values = frequency_range(n, basis)
    cube = values[odometer(len(values), len(u))]
    freqs = np.zeros((cube.shape[0], d), dtype=np.int64)
    freqs[:, [j - 1 for j in u]] = cube
    return freqs


def extension_index(u: Sequence[int], k: Sequence[int]) -> Tuple[int, ...]:
    """Restriction k_u of a frequency with supp k = u."""
    u = tuple(sorted(u))
    k = np.asarray(k)
    support = tuple(int(j) + 1 for j in np.flatnonzero(k))
    if support != u:
        raise SupportMismatchError(f"supp k = {support} differs from u = {u}")
    return tuple(int(k[j - 1]) for j in u)


def embed_index(u: Sequence[int], k_u: Sequence[int], d: int) -> np.ndarray:
    """Inverse of extension_index: place k_u on the coordinates of u."""
    k = np.zeros(d, dtype=np.int64)
    k[[j - 1 for j in sorted(u)]] = k_u
    return k


class FrequencyAddress(NamedTuple):
    term: int
    offset: int


@dataclass(frozen=True)
class GroupedIndexSet:
    """Disjoint union of frequency cubes, one per term, with per-term bandwidths."""
    term_set: TermSet
    bandwidths: Tuple[int, ...]
    basis: Basis = Basis.EXPONENTIAL
    sizes: np.ndarray = field(init=False, repr=False, compare=False)
    offsets: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "basis", Basis(self.basis))
        bandwidths = tuple(int(n) for n in self.bandwidths)
        if len(bandwidths) != len(self.term_set):
            raise InvalidBandwidthError(
                f"{len(bandwidths)} bandwidths given for {len(self.term_set)} terms"
            )
        for u, n in zip(self.term_set, bandwidths):
            if u:
                validate_bandwidth(n, self.basis)
        object.__setattr__(self, "bandwidths", bandwidths)
        sizes = np.array([group_cardinality(u, n) for u, n in zip(self.term_set, bandwidths)], dtype=np.int64)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "offsets", np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64))

    @classmethod
    def from_orders(cls, term_set: TermSet, per_order: Sequence[int], basis: Basis = Basis.EXPONENTIAL) -> "GroupedIndexSet":
        """Bandwidths given per order |u| (per_order[0] is for |u| = 1)."""
        if len(per_order) < term_set.max_order:
            raise InvalidBandwidthError(
                f"need bandwidths for orders 1..{term_set.max_order}, got {list(per_order)}"
            )
        bandwidths = tuple(int(per_order[len(u) - 1]) if u else 1 for u in term_set)
        return cls(term_set, bandwidths, Basis(basis))

    @classmethod
    def from_mapping(cls, term_set: TermSet, bandwidths: Mapping[Term, int], basis: Basis = Basis.EXPONENTIAL) -> "GroupedIndexSet":
        return cls(term_set, tuple(int(bandwidths[u]) if u else 1 for u in term_set), Basis(basis))

    @property
    def d(self) -> int:
        return self.term_set.d

    @property
    def total(self) -> int:
        return int(self.offsets[-1])

    def __len__(self) -> int:
        return self.total

    def block(self, index: int) -> slice:
        return slice(int(self.offsets[index]), int(self.offsets[index + 1]))

    def block_of(self, u: Sequence[int]) -> slice:
        return self.block(self.term_set.index(u))

    def group_frequencies(self, index: int) -> np.ndarray:
        u = self.term_set.terms[index]
        return enumerate_group(u, self.bandwidths[index], self.basis, self.d)

    def frequencies(self) -> np.ndarray:
        """All frequencies in canonical flat layout, shape (total, d)."""
        return np.concatenate([self.group_frequencies(i) for i in range(len(self.term_set))])

    def group_values(self, index: int) -> np.ndarray:
        """Per-axis component values of group `index` (empty for the constant term)."""
        u = self.term_set.terms[index]
        if not u:
            return np.zeros(0, dtype=np.int64)
        return frequency_range(self.bandwidths[index], self.basis)

    def address(self, position: int) -> FrequencyAddress:
        if not 0 <= position < self.total:
            raise IndexError(f"position {position} outside 0..{self.total - 1}")
        term = int(np.searchsorted(self.offsets, position, side="right") - 1)
        return FrequencyAddress(term, position - int(self.offsets[term]))

    def position(self, address: FrequencyAddress) -> int:
        term, offset = address
        if not 0 <= offset < int(self.sizes[term]):
            raise IndexError(f"offset {offset} outside group {term}")
        return int(self.offsets[term]) + offset

    def restrict(self, term_set: TermSet) -> "GroupedIndexSet":
        """Index set on a sub-collection of terms, keeping their bandwidths."""
        mapping = {u: n for u, n in zip(self.term_set, self.bandwidths)}
        return GroupedIndexSet.from_mapping(term_set, mapping, self.basis)


def total_cardinality(index_set: GroupedIndexSet) -> int:
    return index_set.total
