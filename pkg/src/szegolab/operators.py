"""Finite sections of Toeplitz, Hankel and Toeplitz-plus-Hankel operators.

All matrices are plain complex ``numpy`` arrays.  Block ``(j, k)`` of an
``n``-block matrix built from an N x N symbol occupies rows ``jN .. jN+N-1``
and columns ``kN .. kN+N-1``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as la

from .errors import OutOfRange, RegionViolation, SizeMismatch
from .symbols import BlockSymbol, apply_pointwise, next_pow2, sample


class MVariant(enum.Enum):
    """The four Toeplitz-plus-Hankel maps M(phi)."""

    I = "I"      # T(phi) + H(phi)
    II = "II"    # T(phi) - H(phi)
    III = "III"  # T(phi) - H(z^{-1} phi)
    IV = "IV"    # T(phi) + H(z phi) Q_1

    @classmethod
    def parse(cls, tag) -> "MVariant":
        if isinstance(tag, cls):
            return tag
        try:
            return cls(str(tag).strip().upper())
        except ValueError:
            raise ValueError(f"unknown variant {tag!r}; expected one of I, II, III, IV") from None


@dataclass(frozen=True)
class FunctionSpec:
    """An analytic function ``f`` to apply to matrices and symbols.

    ``kind`` is ``"exp"`` or ``"polynomial"`` (coefficients in increasing
    degree).  ``radius`` bounds the open disc |z| < radius where ``f`` is
    declared analytic; ``None`` means entire.
    """

    kind: str
    coefficients: tuple[complex, ...] = ()
    radius: float | None = None

    def __post_init__(self):
        if self.kind not in ("exp", "polynomial"):
            raise ValueError(f"unknown function kind {self.kind!r}")
        coeffs = tuple(complex(c) for c in self.coefficients)
        if self.kind == "polynomial" and not coeffs:
            raise ValueError("polynomial needs at least one coefficient")
        if not all(math.isfinite(c.real) and math.isfinite(c.imag) for c in coeffs):
            raise ValueError("polynomial coefficients must be finite")
        if self.radius is not None and not self.radius > 0:
            raise ValueError("analyticity region must be nonempty")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def exp(cls) -> "FunctionSpec":
        return cls("exp")

    @classmethod
    def polynomial(cls, coefficients: Sequence[complex]) -> "FunctionSpec":
        return cls("polynomial", tuple(coefficients))

    @classmethod
    def parse(cls, text: str) -> "FunctionSpec":
        """``exp`` or ``poly:c0,c1,...``."""
        text = text.strip()
        if text == "exp":
            return cls.exp()
        if text.startswith("poly:"):
            return cls.polynomial([complex(c.replace(" ", "")) for c in text[5:].split(",") if c.strip()])
        raise ValueError(f"cannot parse function {text!r}")

    def __str__(self) -> str:
        if self.kind == "exp":
            return "exp"
        return "poly:" + ",".join(_fmt_complex(c) for c in self.coefficients)

    def contains(self, points) -> bool:
        if self.radius is None:
            return True
        return bool(np.all(np.abs(points) < self.radius))

    def of_matrix(self, a: np.ndarray) -> np.ndarray:
        if self.kind == "exp":
            return la.expm(a)
        # Horner, matrix-valued
        eye = np.eye(a.shape[-1], dtype=complex)
        out = self.coefficients[-1] * np.broadcast_to(eye, a.shape).astype(complex)
        for c in reversed(self.coefficients[:-1]):
            out = a @ out + c * eye
        return out

    def of_symbol(self, sym: BlockSymbol, m: int | None = None) -> BlockSymbol:
        """f(phi) computed pointwise on a grid."""
        return apply_pointwise(sym, self.of_matrix, m)


def _fmt_complex(c: complex) -> str:
    return repr(c.real) if c.imag == 0 else repr(c)


def _blocks_to_matrix(blocks: np.ndarray) -> np.ndarray:
    """(R, C, N, N) block array -> (R N, C N) matrix."""
    r, c, n, _ = blocks.shape
    return blocks.transpose(0, 2, 1, 3).reshape(r * n, c * n)


def _indexed(sym: BlockSymbol, index: np.ndarray) -> np.ndarray:
    return _blocks_to_matrix(sym.coeff_array(index))


def toeplitz_finite(sym: BlockSymbol, n: int) -> np.ndarray:
    """T_n(phi), block (j, k) = phi_{j-k}."""
    j = np.arange(n)
    return _indexed(sym, j[:, None] - j[None, :])


def hankel_finite(sym: BlockSymbol, n_rows: int, n_cols: int | None = None) -> np.ndarray:
    """Finite section of H(phi), block (j, k) = phi_{j+k+1}."""
    n_cols = n_rows if n_cols is None else n_cols
    return _indexed(sym, np.arange(n_rows)[:, None] + np.arange(n_cols)[None, :] + 1)


def toeplitz_plus_hankel(phi: BlockSymbol, psi: BlockSymbol, n: int) -> np.ndarray:
    if phi.block_size != psi.block_size:
        raise SizeMismatch(f"block sizes {phi.block_size} and {psi.block_size} differ")
    return toeplitz_finite(phi, n) + hankel_finite(psi, n)


def m_hankel_part(sym: BlockSymbol, variant: MVariant, n: int) -> np.ndarray:
    """Finite section of M(phi) - T(phi)."""
    variant = MVariant.parse(variant)
    j = np.arange(n)[:, None]
    k = np.arange(n)[None, :]
    if variant is MVariant.I:
        return _indexed(sym, j + k + 1)
    if variant is MVariant.II:
        return -_indexed(sym, j + k + 1)
    if variant is MVariant.III:
        return -_indexed(sym, j + k + 2)
    # H(z phi) Q_1: block (j, k) = phi_{j+k} for k >= 1, column block 0 removed
    blocks = sym.coeff_array(j + k)
    blocks[:, 0] = 0
    return _blocks_to_matrix(blocks)


def m_operator_finite(sym: BlockSymbol, variant: MVariant, n: int) -> np.ndarray:
    return toeplitz_finite(sym, n) + m_hankel_part(sym, variant, n)


def corner(mat: np.ndarray, n_rows: int, n_cols: int | None = None) -> np.ndarray:
    n_cols = n_rows if n_cols is None else n_cols
    if n_rows < 0 or n_cols < 0 or n_rows > mat.shape[0] or n_cols > mat.shape[1]:
        raise OutOfRange(f"corner {n_rows}x{n_cols} does not fit a {mat.shape} matrix")
    return mat[:n_rows, :n_cols]


def qn_compress(mat: np.ndarray, n: int) -> np.ndarray:
    """Trailing block ``mat[n:, n:]``, i.e. Q_n A Q_n restricted to the range of Q_n."""
    if n < 0 or n > min(mat.shape):
        raise OutOfRange(f"cannot compress a {mat.shape} matrix past row/column {n}")
    return mat[n:, n:]


def product_corner(builders: Sequence[Callable[[int], np.ndarray]], m: int,
                   block_size: int = 1, pad: int | None = None) -> np.ndarray:
    """Leading ``m``-block corner of a product of infinite operators.

    Each builder returns the ``m'``-block finite section of its factor; the
    product is formed at ``m' = m + pad`` (default ``pad = m``) so that the
    corner does not see the truncation boundary.
    """
    size = m + (m if pad is None else pad)
    out = builders[0](size)
    for b in builders[1:]:
        out = out @ b(size)
    return corner(out, m * block_size, m * block_size)


def spectrum_proxy(sym: BlockSymbol, m: int) -> np.ndarray:
    """Eigenvalues of T_m(phi) together with the sampled range of phi."""
    eig = np.linalg.eigvals(toeplitz_finite(sym, m))
    grid = max(64, next_pow2(4 * sym.width))
    vals = sample(sym, grid).values
    rng = vals[:, 0, 0] if sym.is_scalar else np.linalg.eigvals(vals).ravel()
    return np.concatenate([eig, rng])


def f_of_toeplitz_corner(sym: BlockSymbol, f: FunctionSpec, n: int, m: int) -> np.ndarray:
    """Top-left n-block corner of f(T_m(phi))."""
    if m < n:
        raise OutOfRange(f"truncation m={m} smaller than corner size n={n}")
    t = toeplitz_finite(sym, m)
    if f.radius is not None and not f.contains(spectrum_proxy(sym, m)):
        raise RegionViolation(f"spectrum of T_{m}(phi) leaves the disc |z| < {f.radius}")
    nn = n * sym.block_size
    return corner(f.of_matrix(t), nn, nn)


def to_csv(mat: np.ndarray, path) -> None:
    """Dump a matrix as row-major CSV with ``re+imi`` cells."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in np.asarray(mat, dtype=complex):
            fh.write(",".join(f"{z.real:.17g}{z.imag:+.17g}i" for z in row))
            fh.write("\n")
