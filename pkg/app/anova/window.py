"""
Low-dimensional nonequispaced fast transforms on a window-convolved,
oversampled FFT grid.

All routines work in grid units z = n * x: the window psi(z) is supported on
|z| <= m and each node touches the 2m + 1 grid points floor(n x) - m, ...,
floor(n x) + m. The deconvolution factor of frequency k is the Fourier
integral D(k) = int psi(z) cos(2 pi k z / n) dz of the truncated window,
evaluated by Gauss-Legendre quadrature, so the only approximation left is
aliasing.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np

from app.core.errors import OversampledSizeError

MAX_GRID_POINTS = 2 ** 26
_GATHER_BLOCK = 2 ** 22


@dataclass(frozen=True)
class Window:
    family: str
    oversampling: float
    cutoff: int

    def __post_init__(self):
        if self.family not in ("kaiser_bessel", "gaussian"):
            raise ValueError(f"unknown window family {self.family!r}")
        if self.oversampling < 1.25:
            raise ValueError(f"oversampling factor must be >= 1.25, got {self.oversampling}")
        if self.cutoff < 2:
            raise ValueError(f"window cutoff must be >= 2, got {self.cutoff}")

    @property
    def shape(self) -> float:
        s, m = self.oversampling, self.cutoff
        if self.family == "gaussian":
            return 2.0 * s * m / ((2.0 * s - 1.0) * np.pi)
        return np.pi * (2.0 - 1.0 / s)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        """Window values at grid offsets z (zero outside |z| <= m)."""
        z = np.asarray(z, dtype=float)
        m, b = self.cutoff, self.shape
        inside = np.abs(z) <= m
        if self.family == "gaussian":
            return np.where(inside, np.exp(-z * z / b), 0.0)
        s = np.sqrt(np.clip(m * m - z * z, 0.0, None))
        safe = np.where(s > 1e-8, s, 1.0)
        values = np.where(s > 1e-8, np.sinh(b * s) / safe, b)
        return np.where(inside, values, 0.0)

    def grid_size(self, bandwidth: int) -> int:
        n = int(np.ceil(self.oversampling * bandwidth))
        n += n % 2
        return max(n, 2 * self.cutoff + 2)

    def deconvolution(self, frequencies: np.ndarray, n: int) -> np.ndarray:
        return _deconvolution(self, tuple(int(k) for k in frequencies), n)


@lru_cache(maxsize=256)
def _deconvolution(window: Window, frequencies: Tuple[int, ...], n: int) -> np.ndarray:
    m = window.cutoff
    nodes, weights = np.polynomial.legendre.leggauss(max(64, 8 * (2 * m + 1)))
    z = m * nodes
    psi = window(z) * weights * m
    k = np.asarray(frequencies, dtype=float)
    return np.cos(2.0 * np.pi * np.outer(k, z) / n) @ psi


def check_grid(n: int, dims: int) -> None:
    if n ** dims > MAX_GRID_POINTS:
        raise OversampledSizeError(
            f"oversampled grid {n}^{dims} exceeds {MAX_GRID_POINTS} points"
        )


@dataclass(frozen=True)
class AxisStencil:
    """Grid indices (mod n) and window weights of every node along one axis."""
    indices: np.ndarray
    weights: np.ndarray


def axis_stencil(x: np.ndarray, n: int, window: Window) -> AxisStencil:
    m = window.cutoff
    scaled = np.asarray(x, dtype=float) * n
    base = np.floor(scaled).astype(np.int64)
    offsets = np.arange(-m, m + 1)
    points = base[:, None] + offsets[None, :]
    weights = window(scaled[:, None] - points)
    return AxisStencil(np.mod(points, n), weights)


def _broadcast_axis(array: np.ndarray, axis: int, dims: int) -> np.ndarray:
    """Reshape a (rows, width) array so that width sits on cube axis `axis`."""
    shape = [array.shape[0]] + [1] * dims
    shape[axis + 1] = array.shape[1]
    return array.reshape(shape)


def _along(vector: np.ndarray, axis: int, dims: int) -> np.ndarray:
    shape = [1] * dims
    shape[axis] = -1
    return vector.reshape(shape)


def _blocks(count: int, per_row: int):
    step = max(1, _GATHER_BLOCK // max(per_row, 1))
    for start in range(0, count, step):
        yield slice(start, min(start + step, count))


def nfft_forward(stencils: Sequence[AxisStencil], coefficients: np.ndarray, values: np.ndarray,
                 n: int, window: Window) -> np.ndarray:
    """Evaluate sum_k c_k exp(2 pi i <k, x>) at the nodes behind `stencils`.

    `coefficients` is the |u|-dimensional cube indexed by positions in `values`
    along every axis; `n` is the oversampled grid size.
    """
    dims = coefficients.ndim
    check_grid(n, dims)
    factor = window.deconvolution(values, n)
    scaled = coefficients.astype(complex)
    for axis in range(dims):
        scaled = scaled / _along(factor, axis, dims)
    grid = np.zeros((n,) * dims, dtype=complex)
    grid[np.ix_(*([np.mod(values, n)] * dims))] = scaled
    grid = np.fft.ifftn(grid) * float(n) ** dims
    count = stencils[0].indices.shape[0]
    out = np.empty(count, dtype=complex)
    per_row = (2 * window.cutoff + 1) ** dims
    for block in _blocks(count, per_row):
        index = tuple(_broadcast_axis(s.indices[block], a, dims) for a, s in enumerate(stencils))
        weight = _broadcast_axis(stencils[0].weights[block], 0, dims)
        for a in range(1, dims):
            weight = weight * _broadcast_axis(stencils[a].weights[block], a, dims)
        out[block] = (grid[index] * weight).reshape(block.stop - block.start, -1).sum(axis=1)
    return out


def nfft_adjoint(stencils: Sequence[AxisStencil], samples: np.ndarray, values: np.ndarray,
                 n: int, window: Window) -> np.ndarray:
    """Compute sum_x y_x exp(-2 pi i <k, x>) for k in values^dims (cube layout)."""
    dims = len(stencils)
    check_grid(n, dims)
    samples = np.asarray(samples, dtype=complex)
    count = samples.shape[0]
    flat_real = np.zeros(n ** dims)
    flat_imag = np.zeros(n ** dims)
    strides = [n ** (dims - 1 - a) for a in range(dims)]
    per_row = (2 * window.cutoff + 1) ** dims
    for block in _blocks(count, per_row):
        flat = np.zeros(1, dtype=np.int64)
        weight = samples[block].reshape((-1,) + (1,) * dims)
        for a, s in enumerate(stencils):
            flat = flat + _broadcast_axis(s.indices[block], a, dims) * strides[a]
            weight = weight * _broadcast_axis(s.weights[block], a, dims)
        flat = np.broadcast_to(flat, weight.shape).ravel()
        weight = weight.ravel()
        flat_real += np.bincount(flat, weights=weight.real, minlength=n ** dims)
        flat_imag += np.bincount(flat, weights=weight.imag, minlength=n ** dims)
    grid = (flat_real + 1j * flat_imag).reshape((n,) * dims)
    spectrum = np.fft.fftn(grid)
    cube = spectrum[np.ix_(*([np.mod(values, n)] * dims))]
    factor = window.deconvolution(values, n)
    for axis in range(dims):
        cube = cube / _along(factor, axis, dims)
    return cube


def _symmetric_values(bandwidth: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Signed frequencies of the even extension, their cosine index, and sign positions."""
    k = np.arange(1, bandwidth)
    signed = np.concatenate([-k[::-1], k])
    fold = np.abs(signed) - 1
    negative = bandwidth - 1 - k
    positive = bandwidth - 2 + k
    return signed, fold, np.stack([negative, positive])


def nfct_forward(stencils: Sequence[AxisStencil], coefficients: np.ndarray, bandwidth: int,
                 n: int, window: Window) -> np.ndarray:
    """Evaluate sum_k c_k prod_j sqrt(2) cos(pi k_j x_j) for k in {1..N-1}^dims.

    The stencils must be built on the halved nodes x / 2 and grid size n of the
    doubled bandwidth; the cosine sum is the exponential sum of the even
    extension of the coefficient cube.
    """
    dims = coefficients.ndim
    signed, fold, _ = _symmetric_values(bandwidth)
    extended = coefficients[np.ix_(*([fold] * dims))] * (0.5 ** (0.5 * dims))
    return nfft_forward(stencils, extended, signed, n, window).real


def nfct_adjoint(stencils: Sequence[AxisStencil], samples: np.ndarray, bandwidth: int,
                 n: int, window: Window) -> np.ndarray:
    dims = len(stencils)
    signed, _, sides = _symmetric_values(bandwidth)
    cube = nfft_adjoint(stencils, samples, signed, n, window)
    for axis in range(dims):
        cube = np.take(cube, sides[0], axis=axis) + np.take(cube, sides[1], axis=axis)
    return (cube * (0.5 ** (0.5 * dims))).real


def cosine_halved(x: np.ndarray) -> np.ndarray:
    return 0.5 * np.asarray(x, dtype=float)
