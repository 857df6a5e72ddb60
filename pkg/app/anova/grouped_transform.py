"""
Grouped Fourier / cosine transform: multiplication with F(X, I_N(U)) and its
adjoint as a sum (resp. stack) of independent |u|-dimensional transforms on
the restricted nodes X_u.

Each group runs either the direct tensor kernel (exact, O(M * card)) or the
windowed fast kernel from `app.anova.window`. Groups are independent and are
dispatched to a thread pool; partial vectors are reduced in term order.
"""
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.sparse.linalg import LinearOperator

from app.anova.grouped_index import Basis, GroupedIndexSet, Term
from app.anova.window import (
    AxisStencil,
    Window,
    axis_stencil,
    check_grid,
    cosine_halved,
    nfct_adjoint,
    nfct_forward,
    nfft_adjoint,
    nfft_forward,
)
from app.core.errors import NodeDomainError, PlanMismatchError

logger = logging.getLogger(__name__)

# Direct-kernel axis tables are cached per plan up to this many bytes.
TABLE_CACHE_BYTES = 512 * 2 ** 20


class TransformMethod(str, Enum):
    AUTO = "auto"
    DIRECT = "direct"
    FAST = "fast"


@dataclass(frozen=True)
class NodeSet:
    """M sampling nodes in d dimensions, validated against the basis domain."""
    nodes: np.ndarray
    basis: Basis = Basis.EXPONENTIAL

    def __post_init__(self):
        basis = Basis(self.basis)
        nodes = np.array(self.nodes, dtype=float, copy=True)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        if nodes.ndim != 2 or nodes.shape[0] < 1:
            raise NodeDomainError(f"nodes must be a non-empty (M, d) array, got shape {nodes.shape}")
        if not np.all(np.isfinite(nodes)):
            raise NodeDomainError("nodes contain non-finite values")
        if basis is Basis.EXPONENTIAL:
            nodes = np.mod(nodes, 1.0)
            nodes[nodes >= 1.0] = 0.0
        elif nodes.min() < 0.0 or nodes.max() > 1.0:
            raise NodeDomainError("cosine basis nodes must lie in [0, 1]")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "basis", basis)

    @property
    def M(self) -> int:
        return self.nodes.shape[0]

    @property
    def d(self) -> int:
        return self.nodes.shape[1]

    def restrict(self, u: Sequence[int]) -> np.ndarray:
        """The restricted node multiset X_u, shape (M, |u|)."""
        return self.nodes[:, [j - 1 for j in u]]


@dataclass(frozen=True)
class GroupedCoefficients:
    """Coefficient vector in the canonical flat layout of an index set."""
    index_set: GroupedIndexSet
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 1 or values.shape[0] != self.index_set.total:
            raise PlanMismatchError(
                f"expected {self.index_set.total} coefficients, got shape {values.shape}"
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, index_set: GroupedIndexSet) -> "GroupedCoefficients":
        return cls(index_set, np.zeros(index_set.total, dtype=coefficient_dtype(index_set.basis)))

    def __getitem__(self, u: Sequence[int]) -> np.ndarray:
        return self.values[self.index_set.block_of(u)]

    def group(self, index: int) -> np.ndarray:
        return self.values[self.index_set.block(index)]

    def groups(self) -> List[np.ndarray]:
        return [self.group(i) for i in range(len(self.index_set.term_set))]


def coefficient_dtype(basis: Basis):
    return complex if Basis(basis) is Basis.EXPONENTIAL else float


def axis_table(x: np.ndarray, values: np.ndarray, basis: Basis) -> np.ndarray:
    """Basis factors of one axis: exp(2 pi i k x) or sqrt(2) cos(pi k x), shape (M, len(values))."""
    phase = np.outer(x, values)
    if basis is Basis.EXPONENTIAL:
        return np.exp(2j * np.pi * phase)
    return np.sqrt(2.0) * np.cos(np.pi * phase)


def _khatri_rao(tables: Sequence[np.ndarray]) -> np.ndarray:
    product = tables[0]
    for table in tables[1:]:
        product = (product[:, :, None] * table[:, None, :]).reshape(product.shape[0], -1)
    return product


def _tensor_forward(tables: Sequence[np.ndarray], cube: np.ndarray) -> np.ndarray:
    first = tables[0]
    if len(tables) == 1:
        return first @ cube
    partial = first @ cube.reshape(first.shape[1], -1)
    return np.einsum("ij,ij->i", partial, _khatri_rao(tables[1:]))


def _tensor_adjoint(tables: Sequence[np.ndarray], samples: np.ndarray) -> np.ndarray:
    first = tables[0]
    if len(tables) == 1:
        return first.conj().T @ samples
    rest = _khatri_rao(tables[1:]).conj() * samples[:, None]
    return first.conj().T @ rest


def _cube_shape(values: np.ndarray, dims: int) -> Tuple[int, ...]:
    return (len(values),) * dims


def direct_group_forward(u: Term, nodes_u: np.ndarray, coefficients: np.ndarray,
                         values: np.ndarray, basis: Basis,
                         tables: Optional[Sequence[np.ndarray]] = None) -> np.ndarray:
    """Exact evaluation of one group's partial sum at the restricted nodes."""
    if not u:
        return np.full(nodes_u.shape[0], coefficients[0])
    if tables is None:
        tables = [axis_table(nodes_u[:, a], values, basis) for a in range(len(u))]
    cube = np.asarray(coefficients).reshape(_cube_shape(values, len(u)), order="F")
    return _tensor_forward(tables, cube)


def direct_group_adjoint(u: Term, nodes_u: np.ndarray, samples: np.ndarray,
                         values: np.ndarray, basis: Basis,
                         tables: Optional[Sequence[np.ndarray]] = None) -> np.ndarray:
    if not u:
        return np.array([samples.sum()])
    if tables is None:
        tables = [axis_table(nodes_u[:, a], values, basis) for a in range(len(u))]
    flat = _tensor_adjoint(tables, samples)
    return flat.reshape(_cube_shape(values, len(u)), order="C").ravel(order="F")


def fast_group_forward(u: Term, nodes_u: np.ndarray, coefficients: np.ndarray, bandwidth: int,
                       basis: Basis, oversampling: float = 2.0, cutoff: int = 6,
                       window: Union[str, Window] = "kaiser_bessel",
                       stencils: Optional[Sequence[AxisStencil]] = None) -> np.ndarray:
    """Window-based approximation of one group's partial sum (|u| >= 1)."""
    if not u:
        raise PlanMismatchError("the constant group has no fast transform")
    window = window if isinstance(window, Window) else Window(window, oversampling, cutoff)
    dims = len(u)
    if basis is Basis.EXPONENTIAL:
        n = window.grid_size(bandwidth)
        values = np.arange(-bandwidth // 2, bandwidth // 2)
        values = values[values != 0]
        if stencils is None:
            stencils = [axis_stencil(nodes_u[:, a], n, window) for a in range(dims)]
        cube = np.asarray(coefficients).reshape(_cube_shape(values, dims), order="F")
        return nfft_forward(stencils, cube, values, n, window)
    n = window.grid_size(2 * bandwidth)
    if stencils is None:
        stencils = [axis_stencil(cosine_halved(nodes_u[:, a]), n, window) for a in range(dims)]
    cube = np.asarray(coefficients).reshape((bandwidth - 1,) * dims, order="F")
    return nfct_forward(stencils, cube, bandwidth, n, window)


def fast_group_adjoint(u: Term, nodes_u: np.ndarray, samples: np.ndarray, bandwidth: int,
                       basis: Basis, oversampling: float = 2.0, cutoff: int = 6,
                       window: Union[str, Window] = "kaiser_bessel",
                       stencils: Optional[Sequence[AxisStencil]] = None) -> np.ndarray:
    if not u:
        raise PlanMismatchError("the constant group has no fast transform")
    window = window if isinstance(window, Window) else Window(window, oversampling, cutoff)
    dims = len(u)
    if basis is Basis.EXPONENTIAL:
        n = window.grid_size(bandwidth)
        values = np.arange(-bandwidth // 2, bandwidth // 2)
        values = values[values != 0]
        if stencils is None:
            stencils = [axis_stencil(nodes_u[:, a], n, window) for a in range(dims)]
        return nfft_adjoint(stencils, samples, values, n, window).ravel(order="F")
    n = window.grid_size(2 * bandwidth)
    if stencils is None:
        stencils = [axis_stencil(cosine_halved(nodes_u[:, a]), n, window) for a in range(dims)]
    return nfct_adjoint(stencils, samples, bandwidth, n, window).ravel(order="F")


@dataclass(frozen=True)
class _GroupKernel:
    term: Term
    bandwidth: int
    values: np.ndarray
    method: TransformMethod
    tables: Optional[Tuple[np.ndarray, ...]] = None
    stencils: Optional[Tuple[AxisStencil, ...]] = None


@lru_cache(maxsize=16)
def shared_executor(threads: int) -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=threads, thread_name_prefix="grouped-transform")


@dataclass(frozen=True, eq=False)
class TransformPlan:
    """Immutable binding of nodes, index set, basis and fast-transform parameters."""
    node_set: NodeSet
    index_set: GroupedIndexSet
    method: TransformMethod = TransformMethod.AUTO
    oversampling: float = 2.0
    window_cutoff: int = 6
    window_family: str = "kaiser_bessel"
    threads: int = 1
    deterministic: bool = True
    window: Window = field(init=False, repr=False)
    _kernels: Tuple[Optional[_GroupKernel], ...] = field(init=False, repr=False)

    def __post_init__(self):
        if self.node_set.basis is not self.index_set.basis:
            raise PlanMismatchError(
                f"nodes are for the {self.node_set.basis.value} basis, index set for {self.index_set.basis.value}"
            )
        if self.node_set.d != self.index_set.d:
            raise PlanMismatchError(f"nodes have d={self.node_set.d}, index set d={self.index_set.d}")
        if self.threads < 1:
            raise PlanMismatchError(f"threads must be positive, got {self.threads}")
        object.__setattr__(self, "method", TransformMethod(self.method))
        window = Window(self.window_family, float(self.oversampling), int(self.window_cutoff))
        object.__setattr__(self, "window", window)
        object.__setattr__(self, "_kernels", tuple(self._build_kernels()))

    @classmethod
    def create(cls, nodes, index_set: GroupedIndexSet, **options) -> "TransformPlan":
        node_set = nodes if isinstance(nodes, NodeSet) else NodeSet(nodes, index_set.basis)
        return cls(node_set, index_set, **options)

    @property
    def basis(self) -> Basis:
        return self.index_set.basis

    @property
    def M(self) -> int:
        return self.node_set.M

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.node_set.M, self.index_set.total)

    @property
    def dtype(self):
        return coefficient_dtype(self.basis)

    def group_method(self, index: int) -> Optional[TransformMethod]:
        kernel = self._kernels[index]
        return None if kernel is None else kernel.method

    def _choose(self, u: Term, bandwidth: int) -> TransformMethod:
        if self.method is not TransformMethod.AUTO:
            return self.method
        if (bandwidth - 1) ** len(u) <= (2 * self.window_cutoff + 1) ** len(u):
            return TransformMethod.DIRECT
        return TransformMethod.FAST

    def _build_kernels(self) -> List[Optional[_GroupKernel]]:
        kernels: List[Optional[_GroupKernel]] = []
        tables: Dict[Tuple[int, int], np.ndarray] = {}
        stencils: Dict[Tuple[int, int], AxisStencil] = {}
        budget = TABLE_CACHE_BYTES
        itemsize = np.dtype(self.dtype).itemsize
        for i, u in enumerate(self.index_set.term_set):
            if not u:
                kernels.append(None)
                continue
            bandwidth = self.index_set.bandwidths[i]
            values = self.index_set.group_values(i)
            method = self._choose(u, bandwidth)
            if method is TransformMethod.DIRECT:
                group_tables = []
                for j in u:
                    key = (j, bandwidth)
                    if key not in tables:
                        size = self.M * len(values) * itemsize
                        if size > budget:
                            group_tables = None
                            break
                        budget -= size
                        tables[key] = axis_table(self.node_set.nodes[:, j - 1], values, self.basis)
                    group_tables.append(tables[key])
                kernels.append(_GroupKernel(u, bandwidth, values, method,
                                            tables=tuple(group_tables) if group_tables else None))
            else:
                if self.basis is Basis.EXPONENTIAL:
                    n = self.window.grid_size(bandwidth)
                else:
                    n = self.window.grid_size(2 * bandwidth)
                check_grid(n, len(u))
                group_stencils = []
                for j in u:
                    key = (j, n)
                    if key not in stencils:
                        column = self.node_set.nodes[:, j - 1]
                        if self.basis is Basis.COSINE:
                            column = cosine_halved(column)
                        stencils[key] = axis_stencil(column, n, self.window)
                    group_stencils.append(stencils[key])
                kernels.append(_GroupKernel(u, bandwidth, values, method, stencils=tuple(group_stencils)))
        logger.debug(
            "plan M=%d terms=%d frequencies=%d direct=%d fast=%d",
            self.M, len(self.index_set.term_set), self.index_set.total,
            sum(1 for k in kernels if k is not None and k.method is TransformMethod.DIRECT),
            sum(1 for k in kernels if k is not None and k.method is TransformMethod.FAST),
        )
        return kernels

    def _group_forward(self, index: int, coefficients: np.ndarray) -> np.ndarray:
        kernel = self._kernels[index]
        block = coefficients[self.index_set.block(index)]
        if kernel is None:
            return np.full(self.M, block[0], dtype=self.dtype)
        u = kernel.term
        if kernel.method is TransformMethod.DIRECT:
            out = direct_group_forward(u, self.node_set.restrict(u), block, kernel.values,
                                       self.basis, kernel.tables)
        else:
            out = fast_group_forward(u, None, block, kernel.bandwidth, self.basis,
                                     window=self.window, stencils=kernel.stencils)
        return out.real if self.basis is Basis.COSINE else out

    def _group_adjoint(self, index: int, samples: np.ndarray) -> np.ndarray:
        kernel = self._kernels[index]
        if kernel is None:
            return np.array([samples.sum()], dtype=self.dtype)
        u = kernel.term
        if kernel.method is TransformMethod.DIRECT:
            out = direct_group_adjoint(u, self.node_set.restrict(u), samples, kernel.values,
                                       self.basis, kernel.tables)
        else:
            out = fast_group_adjoint(u, None, samples, kernel.bandwidth, self.basis,
                                     window=self.window, stencils=kernel.stencils)
        return out.real if self.basis is Basis.COSINE else out

    def _map(self, function, argument) -> List[np.ndarray]:
        count = len(self._kernels)
        if self.threads == 1 or count == 1:
            return [function(i, argument) for i in range(count)]
        pool = shared_executor(self.threads)
        return list(pool.map(lambda i: function(i, argument), range(count)))

    def forward_array(self, coefficients: np.ndarray) -> np.ndarray:
        coefficients = np.asarray(coefficients)
        if coefficients.shape != (self.index_set.total,):
            raise PlanMismatchError(
                f"expected {self.index_set.total} coefficients, got shape {coefficients.shape}"
            )
        if self.basis is Basis.COSINE and np.iscomplexobj(coefficients):
            return self.forward_array(coefficients.real) + 1j * self.forward_array(coefficients.imag)
        if self.deterministic or self.threads == 1:
            parts = self._map(self._group_forward, coefficients)
            out = np.zeros(self.M, dtype=self.dtype)
            for part in parts:
                out += part
            return out
        out = np.zeros(self.M, dtype=self.dtype)
        pool = shared_executor(self.threads)
        futures = [pool.submit(self._group_forward, i, coefficients) for i in range(len(self._kernels))]
        for future in as_completed(futures):
            out += future.result()
        return out

    def adjoint_array(self, samples: np.ndarray) -> np.ndarray:
        samples = np.asarray(samples)
        if samples.shape != (self.M,):
            raise PlanMismatchError(f"expected {self.M} samples, got shape {samples.shape}")
        if self.basis is Basis.COSINE and np.iscomplexobj(samples):
            return self.adjoint_array(samples.real) + 1j * self.adjoint_array(samples.imag)
        samples = samples.astype(self.dtype)
        return np.concatenate(self._map(self._group_adjoint, samples))

    def group_forward(self, index: int, coefficients: np.ndarray) -> np.ndarray:
        """Partial vector contributed by one group at every node (coefficients is the full vector)."""
        return self._group_forward(index, np.asarray(coefficients))

    def as_operator(self) -> LinearOperator:
        return LinearOperator(self.shape, matvec=self.forward_array, rmatvec=self.adjoint_array,
                              dtype=self.dtype)

    def dense_matrix(self) -> np.ndarray:
        """Explicit F(X, I_N(U)); only meant for small instances."""
        freqs = self.index_set.frequencies()
        x = self.node_set.nodes
        if self.basis is Basis.EXPONENTIAL:
            return np.exp(2j * np.pi * (x @ freqs.T))
        factors = np.cos(np.pi * x[:, None, :] * freqs[None, :, :]).prod(axis=2)
        return factors * np.sqrt(2.0) ** np.count_nonzero(freqs, axis=1)[None, :]


def _check_coefficients(plan: TransformPlan, coefficients) -> np.ndarray:
    if isinstance(coefficients, GroupedCoefficients):
        if coefficients.index_set != plan.index_set:
            raise PlanMismatchError("coefficients belong to a different index set")
        return coefficients.values
    return np.asarray(coefficients)


def forward(plan: TransformPlan, coefficients: Union[GroupedCoefficients, np.ndarray]) -> np.ndarray:
    """Values of the grouped partial sum at every node of the plan."""
    return plan.forward_array(_check_coefficients(plan, coefficients))


def adjoint(plan: TransformPlan, samples: np.ndarray) -> GroupedCoefficients:
    return GroupedCoefficients(plan.index_set, plan.adjoint_array(samples))
