"""Matrix-valued symbols on the unit circle as truncated Laurent series.

A symbol ``phi(z) = sum_k phi_k z^k`` is stored as a dense stack of N x N
coefficient blocks together with the index of the first block.  Everything
that is not a Laurent polynomial (inverses, exponentials, logarithms) is
produced by sampling on an equispaced grid, acting pointwise and transforming
back with the FFT; the grid is doubled until the coefficients near the
Nyquist edge fall below the symbol's ``tail_tol``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np
import scipy.linalg as la

from .errors import (
    AliasWarning,
    GridTooCoarse,
    NonzeroWinding,
    SingularSymbol,
    SizeMismatch,
)

logger = logging.getLogger(__name__)

DEFAULT_TAIL_TOL = 1e-12
EQUALITY_TOL = 1e-10
MAX_GRID = 1 << 16
# reciprocal condition number below which a grid value counts as singular
SINGULAR_RCOND = 1e-12


def _is_pow2(m: int) -> bool:
    return m >= 1 and (m & (m - 1)) == 0


def next_pow2(m: int) -> int:
    return 1 << max(0, int(m - 1).bit_length())


@dataclass(frozen=True, eq=False)
class BlockSymbol:
    """Truncated matrix Laurent series.

    ``data[i]`` is the coefficient of ``z**(offset + i)``; ``data`` has shape
    ``(L, N, N)`` and is read-only after construction.
    """

    offset: int
    data: np.ndarray
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        arr = np.array(self.data, dtype=complex)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2] or arr.shape[1] < 1:
            raise SizeMismatch(f"coefficient stack must be (L, N, N), got {arr.shape}")
        if arr.shape[0] == 0:
            arr = np.zeros((1,) + arr.shape[1:], dtype=complex)
        if not np.all(np.isfinite(arr)):
            raise ValueError("symbol coefficients must be finite")
        if self.tail_tol < 0:
            raise ValueError("tail_tol must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "offset", int(self.offset))

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_coeffs(cls, coeffs: Mapping[int, object], block_size: int | None = None,
                    tail_tol: float = DEFAULT_TAIL_TOL) -> "BlockSymbol":
        """Build from ``{k: matrix}``; scalars are accepted for N = 1."""
        if not coeffs:
            return cls.zero(block_size or 1, tail_tol=tail_tol)
        mats = {int(k): np.atleast_2d(np.asarray(v, dtype=complex)) for k, v in coeffs.items()}
        n = block_size or next(iter(mats.values())).shape[0]
        lo, hi = min(mats), max(mats)
        data = np.zeros((hi - lo + 1, n, n), dtype=complex)
        for k, m in mats.items():
            if m.shape != (n, n):
                raise SizeMismatch(f"coefficient {k} has shape {m.shape}, expected {(n, n)}")
            data[k - lo] = m
        return cls(lo, data, tail_tol)

    @classmethod
    def scalar(cls, coeffs: Mapping[int, complex], tail_tol: float = DEFAULT_TAIL_TOL) -> "BlockSymbol":
        return cls.from_coeffs(coeffs, block_size=1, tail_tol=tail_tol)

    @classmethod
    def identity(cls, n: int = 1) -> "BlockSymbol":
        return cls(0, np.eye(n, dtype=complex)[None])

    @classmethod
    def zero(cls, n: int = 1, tail_tol: float = DEFAULT_TAIL_TOL) -> "BlockSymbol":
        return cls(0, np.zeros((1, n, n), dtype=complex), tail_tol)

    @classmethod
    def constant(cls, c, n: int = 1) -> "BlockSymbol":
        c = np.asarray(c, dtype=complex)
        mat = c * np.eye(n) if c.ndim == 0 else c
        return cls(0, mat[None])

    @classmethod
    def monomial(cls, k: int, n: int = 1) -> "BlockSymbol":
        return cls(k, np.eye(n, dtype=complex)[None])

    @classmethod
    def block_diag(cls, *blocks: "BlockSymbol") -> "BlockSymbol":
        lo = min(b.min_index for b in blocks)
        hi = max(b.max_index for b in blocks)
        sizes = [b.block_size for b in blocks]
        n = sum(sizes)
        data = np.zeros((hi - lo + 1, n, n), dtype=complex)
        pos = 0
        for b, s in zip(blocks, sizes):
            data[:, pos:pos + s, pos:pos + s] = b.coeff_array(range(lo, hi + 1))
            pos += s
        return cls(lo, data, min(b.tail_tol for b in blocks))

    # -- basic accessors --------------------------------------------------

    @property
    def block_size(self) -> int:
        return self.data.shape[1]

    @property
    def min_index(self) -> int:
        return self.offset

    @property
    def max_index(self) -> int:
        return self.offset + self.data.shape[0] - 1

    @property
    def width(self) -> int:
        return self.data.shape[0]

    @property
    def bandwidth(self) -> int:
        """Largest |k| carrying a stored coefficient."""
        return max(abs(self.min_index), abs(self.max_index))

    @property
    def is_scalar(self) -> bool:
        return self.block_size == 1

    @property
    def coeffs(self) -> dict[int, np.ndarray]:
        return {self.offset + i: self.data[i] for i in range(self.width)}

    def __getitem__(self, k: int) -> np.ndarray:
        i = k - self.offset
        if 0 <= i < self.width:
            return self.data[i]
        return np.zeros((self.block_size, self.block_size), dtype=complex)

    def coeff_array(self, indices) -> np.ndarray:
        """Coefficients for an integer index array, zero outside the stored band."""
        idx = np.asarray(list(indices) if isinstance(indices, range) else indices, dtype=int)
        pos = idx - self.offset
        valid = (pos >= 0) & (pos < self.width)
        out = np.zeros(idx.shape + (self.block_size, self.block_size), dtype=complex)
        out[valid] = self.data[pos[valid]]
        return out

    def trim(self, tol: float = 0.0) -> "BlockSymbol":
        """Drop leading/trailing coefficients whose largest entry is <= tol."""
        norms = np.abs(self.data).max(axis=(1, 2))
        keep = np.nonzero(norms > tol)[0]
        if keep.size == 0:
            return BlockSymbol.zero(self.block_size, self.tail_tol)
        return BlockSymbol(self.offset + keep[0], self.data[keep[0]:keep[-1] + 1], self.tail_tol)

    def restrict(self, lo: int | None = None, hi: int | None = None) -> "BlockSymbol":
        """Keep only indices in ``[lo, hi]``."""
        lo = self.min_index if lo is None else lo
        hi = self.max_index if hi is None else hi
        if hi < lo:
            return BlockSymbol.zero(self.block_size, self.tail_tol)
        return BlockSymbol(lo, self.coeff_array(range(lo, hi + 1)), self.tail_tol)

    def plus_part(self) -> "BlockSymbol":
        return self.restrict(0, max(0, self.max_index))

    def minus_part(self) -> "BlockSymbol":
        return self.restrict(min(0, self.min_index), 0)

    def shift(self, n: int) -> "BlockSymbol":
        """Multiply by ``z**n``."""
        return BlockSymbol(self.offset + n, self.data, self.tail_tol)

    def with_tail_tol(self, tail_tol: float) -> "BlockSymbol":
        return BlockSymbol(self.offset, self.data, tail_tol)

    # -- arithmetic -------------------------------------------------------

    def _align(self, other: "BlockSymbol"):
        if self.block_size != other.block_size:
            raise SizeMismatch(f"block sizes {self.block_size} and {other.block_size} differ")
        lo = min(self.min_index, other.min_index)
        hi = max(self.max_index, other.max_index)
        r = range(lo, hi + 1)
        return lo, self.coeff_array(r), other.coeff_array(r)

    def __add__(self, other: "BlockSymbol") -> "BlockSymbol":
        lo, a, b = self._align(other)
        return BlockSymbol(lo, a + b, max(self.tail_tol, other.tail_tol))

    def __sub__(self, other: "BlockSymbol") -> "BlockSymbol":
        lo, a, b = self._align(other)
        return BlockSymbol(lo, a - b, max(self.tail_tol, other.tail_tol))

    def __neg__(self) -> "BlockSymbol":
        return BlockSymbol(self.offset, -self.data, self.tail_tol)

    def scale(self, c: complex) -> "BlockSymbol":
        return BlockSymbol(self.offset, c * self.data, self.tail_tol)

    def __mul__(self, other):
        if isinstance(other, BlockSymbol):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def right_mul(self, mat) -> "BlockSymbol":
        """``phi(z) @ C`` for a constant matrix ``C``."""
        return BlockSymbol(self.offset, self.data @ np.asarray(mat, dtype=complex), self.tail_tol)

    def allclose(self, other: "BlockSymbol", tol: float = EQUALITY_TOL) -> bool:
        if self.block_size != other.block_size:
            return False
        _, a, b = self._align(other)
        return bool(np.all(np.abs(a - b) <= tol))

    def __eq__(self, other) -> bool:
        if not isinstance(other, BlockSymbol):
            return NotImplemented
        return self.allclose(other)

    __hash__ = None  # type: ignore[assignment]

    def __call__(self, theta) -> np.ndarray:
        return evaluate(self, theta)

    def __repr__(self) -> str:
        return (f"BlockSymbol(N={self.block_size}, band=[{self.min_index}, {self.max_index}], "
                f"tail_tol={self.tail_tol:g})")


@dataclass(frozen=True)
class GridSamples:
    """Values of a symbol at ``M`` equispaced points ``exp(2 pi i j / M)``."""

    values: np.ndarray
    tail_tol: float = field(default=DEFAULT_TAIL_TOL, compare=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.ndim == 1:
            vals = vals[:, None, None]
        m = vals.shape[0]
        if m < 4 or not _is_pow2(m):
            raise GridTooCoarse(f"grid size must be a power of two >= 4, got {m}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def block_size(self) -> int:
        return self.values.shape[1]

    @property
    def angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.size) / self.size

    @property
    def points(self) -> np.ndarray:
        return np.exp(1j * self.angles)


# -- pointwise <-> coefficient bridge ---------------------------------------

def evaluate(sym: BlockSymbol, angle) -> np.ndarray:
    """phi(e^{i angle}); an array of angles gives a stack of matrices."""
    angle = np.asarray(angle, dtype=float)
    k = np.arange(sym.min_index, sym.max_index + 1)
    phases = np.exp(1j * np.multiply.outer(angle, k))
    return np.tensordot(phases, sym.data, axes=([-1], [0]))


def sample(sym: BlockSymbol, m: int) -> GridSamples:
    if not _is_pow2(m) or m < 4:
        raise GridTooCoarse(f"grid size must be a power of two >= 4, got {m}")
    if m < 2 * sym.width:
        raise GridTooCoarse(f"grid of {m} points too coarse for a band of width {sym.width}")
    buf = np.zeros((m, sym.block_size, sym.block_size), dtype=complex)
    k = np.arange(sym.min_index, sym.max_index + 1)
    np.add.at(buf, k % m, sym.data)
    return GridSamples(np.fft.ifft(buf, axis=0) * m, sym.tail_tol)


def fourier_coeffs(g: GridSamples, band: tuple[int, int]) -> BlockSymbol:
    """Discrete Fourier coefficients of grid samples on the inclusive ``band``."""
    lo, hi = band
    if hi < lo:
        raise ValueError(f"empty band {band}")
    if hi - lo + 1 > g.size:
        raise GridTooCoarse(f"band {band} wider than the grid ({g.size})")
    c = np.fft.fft(g.values, axis=0) / g.size
    k = np.arange(lo, hi + 1)
    return BlockSymbol(lo, c[k % g.size], g.tail_tol)


def multiply(a: BlockSymbol, b: BlockSymbol) -> BlockSymbol:
    """Coefficient convolution ``(ab)_k = sum_j a_j b_{k-j}`` (matrix order kept)."""
    if a.block_size != b.block_size:
        raise SizeMismatch(f"block sizes {a.block_size} and {b.block_size} differ")
    n = a.block_size
    out = np.zeros((a.width + b.width - 1, n, n), dtype=complex)
    if n == 1:
        out[:, 0, 0] = np.convolve(a.data[:, 0, 0], b.data[:, 0, 0])
    else:
        for i in range(a.width):
            out[i:i + b.width] += a.data[i] @ b.data
    return BlockSymbol(a.offset + b.offset, out, max(a.tail_tol, b.tail_tol))


def reflect(sym: BlockSymbol) -> BlockSymbol:
    """phi~(z) = phi(1/z): coefficient k goes to -k."""
    return BlockSymbol(-sym.max_index, sym.data[::-1], sym.tail_tol)


# -- spectral transforms of non-polynomial functions ------------------------

def _edge_magnitude(c: np.ndarray, m: int) -> float:
    """Largest coefficient among the outer half of the aliasing range |k| >= M/4."""
    k = np.fft.fftfreq(m, 1.0 / m)
    edge = np.abs(k) >= m // 4
    return float(np.abs(c[edge]).max())


def _auto_band(c: np.ndarray, m: int, trim_tol: float) -> tuple[int, int]:
    k = np.fft.fftfreq(m, 1.0 / m).astype(int)
    big = np.abs(c).max(axis=(1, 2)) > trim_tol
    if not big.any():
        return 0, 0
    ks = k[big]
    return int(min(ks.min(), 0)), int(max(ks.max(), 0))


def transform(sym: BlockSymbol, pointwise: Callable[[np.ndarray], np.ndarray],
              m: int | None = None, band: tuple[int, int] | None = None) -> BlockSymbol:
    """Apply ``pointwise`` to grid values of ``sym`` and return the coefficients.

    ``pointwise`` maps a stack ``(M, N, N)`` of values to a stack ``(M, N', N')``.
    With ``m`` unset the grid is doubled until the coefficients near the
    Nyquist edge drop below ``sym.tail_tol``.  With ``band`` unset the result
    keeps every coefficient above ``tail_tol / 100``.
    """
    tail = sym.tail_tol
    auto_m = m is None
    if auto_m:
        width = sym.width if band is None else max(sym.width, band[1] - band[0] + 1)
        m = max(64, next_pow2(4 * width))
    while True:
        vals = np.asarray(pointwise(sample(sym, m).values), dtype=complex)
        if vals.ndim == 1:
            vals = vals[:, None, None]
        if not np.all(np.isfinite(vals)):
            raise SingularSymbol("pointwise map produced non-finite values on the grid")
        c = np.fft.fft(vals, axis=0) / m
        edge = _edge_magnitude(c, m)
        if not auto_m or edge < tail or m >= MAX_GRID:
            break
        m *= 2
    if edge >= tail:
        warnings.warn(f"spectral tail {edge:.3g} at grid size {m} exceeds tail_tol {tail:g}",
                      AliasWarning, stacklevel=3)
    if band is None:
        band = _auto_band(c, m, tail * 1e-2)
        band = (max(band[0], -(m // 2) + 1), min(band[1], m // 2 - 1))
    elif band[1] - band[0] + 2 < m:
        # first discarded coefficient on each side of the requested band
        outside = np.abs(c[[(band[0] - 1) % m, (band[1] + 1) % m]]).max()
        if outside > tail:
            warnings.warn(f"band {band} discards coefficients of size {outside:.3g}",
                          AliasWarning, stacklevel=3)
    out = fourier_coeffs(GridSamples(vals, tail), band)
    return out


def _check_invertible(vals: np.ndarray) -> None:
    if vals.shape[1] == 1:
        mag = np.abs(vals[:, 0, 0])
        if mag.min() <= SINGULAR_RCOND * max(mag.max(), 1.0):
            raise SingularSymbol(f"symbol nearly vanishes on the grid (min |phi| = {mag.min():.3g})")
        return
    rcond = 1.0 / np.linalg.cond(vals)
    if not np.all(np.isfinite(rcond)) or rcond.min() < SINGULAR_RCOND:
        raise SingularSymbol("symbol values are singular at some grid point")


def _pointwise_inverse(vals: np.ndarray) -> np.ndarray:
    _check_invertible(vals)
    return np.linalg.inv(vals)


def invert_symbol(sym: BlockSymbol, m: int | None = None, band: tuple[int, int] | None = None,
                  return_residual: bool = False):
    """Coefficients of the pointwise inverse phi^{-1}."""
    inv = transform(sym, _pointwise_inverse, m, band)
    res = inversion_residual(sym, inv)
    logger.debug("invert_symbol residual %.3g", res)
    return (inv, res) if return_residual else inv


def inversion_residual(sym: BlockSymbol, inv: BlockSymbol, m: int | None = None) -> float:
    m = m or max(64, next_pow2(4 * (sym.width + inv.width)))
    prod = sample(sym, m).values @ sample(inv, m).values
    return float(np.abs(prod - np.eye(sym.block_size)).max())


def _pointwise_expm(vals: np.ndarray) -> np.ndarray:
    if vals.shape[1] == 1:
        return np.exp(vals)
    return la.expm(vals)


def exp_symbol(sym: BlockSymbol, m: int | None = None, band: tuple[int, int] | None = None) -> BlockSymbol:
    return transform(sym, _pointwise_expm, m, band)


def apply_pointwise(sym: BlockSymbol, fn: Callable[[np.ndarray], np.ndarray],
                    m: int | None = None, band: tuple[int, int] | None = None) -> BlockSymbol:
    return transform(sym, fn, m, band)


def _tracked_log(d: np.ndarray) -> tuple[np.ndarray, int]:
    """Continuous log of samples ``d`` anchored at the principal value of ``d[0]``."""
    steps = np.log(np.roll(d, -1) / d)
    total = steps.sum().imag
    winding = int(np.rint(total / (2 * np.pi)))
    logd = np.empty_like(d)
    logd[0] = np.log(d[0])
    logd[1:] = logd[0] + np.cumsum(steps[:-1])
    return logd, winding


def winding_number(sym: BlockSymbol, m: int | None = None) -> int:
    m = m or max(256, next_pow2(8 * sym.width))
    d = np.linalg.det(sample(sym, m).values)
    _check_invertible(d[:, None, None])
    return _tracked_log(d)[1]


def log_det_series(sym: BlockSymbol, m: int | None = None,
                   band: tuple[int, int] | None = None) -> tuple[BlockSymbol, int]:
    """Laurent coefficients of log det phi and the winding number of det phi.

    For nonzero winding ``w`` the returned series belongs to ``log(z^{-w} det phi)``,
    the periodic part of the tracked logarithm.
    """
    state = {}

    def _log(vals):
        d = np.linalg.det(vals) if vals.shape[1] > 1 else vals[:, 0, 0]
        _check_invertible(d[:, None, None])
        logd, w = _tracked_log(d)
        theta = 2 * np.pi * np.arange(d.size) / d.size
        state["winding"] = w
        return (logd - 1j * w * theta)[:, None, None]

    series = transform(sym, _log, m, band)
    return series, state["winding"]


def log_g_constant(sym: BlockSymbol) -> complex:
    """(log det phi)_0, the logarithm of G(phi)."""
    series, winding = log_det_series(sym)
    if winding != 0:
        raise NonzeroWinding(f"det phi has winding number {winding}")
    return complex(series[0][0, 0])


def g_constant(sym: BlockSymbol) -> complex:
    return complex(np.exp(log_g_constant(sym)))


def _block_norms(sym: BlockSymbol) -> np.ndarray:
    if sym.is_scalar:
        return np.abs(sym.data[:, 0, 0])
    return np.linalg.norm(sym.data, ord=2, axis=(1, 2))


def b_norm(sym: BlockSymbol) -> float:
    """Wiener norm plus the half-order Sobolev seminorm, spectral norm on blocks."""
    norms = _block_norms(sym)
    k = np.arange(sym.min_index, sym.max_index + 1)
    return float(norms.sum() + np.sqrt((np.abs(k) * norms**2).sum()))


def fl21_norm(sym: BlockSymbol) -> float:
    """sqrt(sum (1 + |k|)^2 |phi_k|^2)."""
    norms = _block_norms(sym)
    k = np.arange(sym.min_index, sym.max_index + 1)
    return float(np.sqrt((((1 + np.abs(k)) * norms) ** 2).sum()))


def is_even(sym: BlockSymbol, tol: float = EQUALITY_TOL) -> bool:
    return reflect(sym).allclose(sym, tol)


def grid_max_error(a: BlockSymbol, b: BlockSymbol, m: int | None = None) -> float:
    """max over a grid of the spectral norm of a(z) - b(z)."""
    m = m or max(64, next_pow2(4 * max(a.width, b.width)))
    diff = sample(a, m).values - sample(b, m).values
    if diff.shape[1] == 1:
        return float(np.abs(diff).max())
    return float(np.linalg.norm(diff, ord=2, axis=(1, 2)).max())


def product(symbols: Iterable[BlockSymbol]) -> BlockSymbol:
    it = iter(symbols)
    out = next(it)
    for s in it:
        out = multiply(out, s)
    return out
