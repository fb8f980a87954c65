"""Canonical Wiener-Hopf factorizations of matrix symbols.

Conventions: a left factorization is ``phi = u_minus u_plus``, a right one is
``phi = v_plus v_minus``.  In both cases the constant coefficient of the minus
factor is the identity; the constant split does not enter any determinant
formula.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import IllConditioned, NonzeroWinding, ResidualTooLarge, SingularSymbol
from .operators import toeplitz_finite
from .symbols import (
    BlockSymbol,
    evaluate,
    exp_symbol,
    grid_max_error,
    invert_symbol,
    log_det_series,
    multiply,
    next_pow2,
    reflect,
    sample,
    winding_number,
)

logger = logging.getLogger(__name__)

RCOND_MIN = 1e-10
NORMALIZATION_TOL = 1e-8
RESIDUAL_TOL = 1e-9
MAX_TRUNCATION = 4096


@dataclass(frozen=True)
class CanonicalFactorization:
    side: str
    minus_factor: BlockSymbol
    plus_factor: BlockSymbol
    residual: float
    normalized: bool = True
    truncation: int | None = None

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {self.side!r}")
        if self.minus_factor.max_index > 0 or self.plus_factor.min_index < 0:
            raise ValueError("factor supports violate the minus/plus convention")

    def product(self) -> BlockSymbol:
        if self.side == "left":
            return multiply(self.minus_factor, self.plus_factor)
        return multiply(self.plus_factor, self.minus_factor)

    # u_-, u_+ / v_-, v_+ aliases read better next to the formulas
    @property
    def minus(self) -> BlockSymbol:
        return self.minus_factor

    @property
    def plus(self) -> BlockSymbol:
        return self.plus_factor


@dataclass(frozen=True)
class AntiFactor:
    """xi_minus with phi reflect(phi)^{-1} = xi_minus reflect(xi_minus)^{-1}."""

    xi_minus: BlockSymbol
    residual: float


def _grid_for(*syms: BlockSymbol) -> int:
    return max(128, next_pow2(4 * sum(s.width for s in syms)))


def _reconstruction_residual(sym: BlockSymbol, fac_product: BlockSymbol) -> float:
    return grid_max_error(sym, fac_product, _grid_for(sym, fac_product))


def _one_sided(sym: BlockSymbol, sign: int) -> BlockSymbol:
    out = sym.restrict(0, max(0, sym.max_index)) if sign > 0 else sym.restrict(min(0, sym.min_index), 0)
    return out.trim(sym.tail_tol * 1e-2) if out.width > 1 else out


def scalar_factorize(sym: BlockSymbol, m: int | None = None,
                     band: tuple[int, int] | None = None) -> CanonicalFactorization:
    """Split-log factorization of a scalar symbol.

    ``u_minus = exp(sum_{k<0} (log phi)_k z^k)`` and ``u_plus`` carries the rest,
    including the constant.  Left and right factors coincide.
    """
    if not sym.is_scalar:
        raise ValueError("scalar_factorize needs a scalar symbol")
    beta, winding = log_det_series(sym, m, band)
    if winding != 0:
        raise NonzeroWinding(f"symbol has winding number {winding}")
    minus = _one_sided(exp_symbol(beta.restrict(min(beta.min_index, -1), -1)), -1)
    plus = _one_sided(exp_symbol(beta.restrict(0, max(beta.max_index, 0))), +1)
    res = _reconstruction_residual(sym, multiply(minus, plus))
    return CanonicalFactorization("left", minus, plus, res, True)


def as_right(fac: CanonicalFactorization) -> CanonicalFactorization:
    """Reinterpret a commutative (scalar) factorization as a right one."""
    return CanonicalFactorization("right", fac.minus_factor, fac.plus_factor, fac.residual,
                                  fac.normalized, fac.truncation)


def _first_block_column(t: np.ndarray, n: int) -> np.ndarray:
    rcond = 1.0 / np.linalg.cond(t)
    if not np.isfinite(rcond) or rcond < RCOND_MIN:
        raise IllConditioned(f"finite Toeplitz section has rcond {rcond:.2e}", stage="factorize")
    e0 = np.zeros((t.shape[0], n), dtype=complex)
    e0[:n, :n] = np.eye(n)
    x = np.linalg.solve(t, e0)
    return x.reshape(-1, n, n)


def _plus_from_column(col: np.ndarray, tail_tol: float) -> BlockSymbol:
    # the lower half of the column feels the truncation boundary
    keep = col[: max(1, col.shape[0] // 2)]
    return BlockSymbol(0, keep, tail_tol).trim(tail_tol * 1e-2)


def _check_normalization(minus: BlockSymbol) -> bool:
    return bool(np.abs(minus[0] - np.eye(minus.block_size)).max() < NORMALIZATION_TOL)


def _left_at(sym: BlockSymbol, m: int) -> CanonicalFactorization:
    n = sym.block_size
    plus_inv = _plus_from_column(_first_block_column(toeplitz_finite(sym, m), n), sym.tail_tol)
    plus = _one_sided(invert_symbol(plus_inv), +1)
    minus = _one_sided(multiply(sym, plus_inv), -1)
    res = _reconstruction_residual(sym, multiply(minus, plus))
    return CanonicalFactorization("left", minus, plus, res, _check_normalization(minus), m)


def _right_at(sym: BlockSymbol, inv: BlockSymbol, m: int) -> CanonicalFactorization:
    n = sym.block_size
    plus = _plus_from_column(_first_block_column(toeplitz_finite(inv, m), n), sym.tail_tol)
    plus_inv = invert_symbol(plus)
    minus = _one_sided(multiply(plus_inv, sym), -1)
    res = _reconstruction_residual(sym, multiply(plus, minus))
    return CanonicalFactorization("right", minus, plus, res, _check_normalization(minus), m)


def _doubling(step, sym: BlockSymbol, m: int | None, tol: float, stage: str) -> CanonicalFactorization:
    if winding_number(sym) != 0:
        raise NonzeroWinding("det phi has nonzero winding number")
    if m is not None:
        fac = step(m)
        if fac.residual > tol:
            raise ResidualTooLarge(f"{stage}: residual {fac.residual:.2e} at m={m}", stage=stage)
        return fac
    m = max(64, 8 * sym.bandwidth)
    passes = 0
    fac = None
    while m <= MAX_TRUNCATION:
        fac = step(m)
        logger.debug("%s m=%d residual=%.2e", stage, m, fac.residual)
        passes = passes + 1 if fac.residual < tol else 0
        if passes >= 2:
            return fac
        m *= 2
    raise ResidualTooLarge(
        f"{stage}: residual {fac.residual:.2e} above {tol:g} up to m={MAX_TRUNCATION}; "
        "T(phi) is likely not invertible", stage=stage)


def matrix_factorize_left(sym: BlockSymbol, m: int | None = None,
                          tol: float = RESIDUAL_TOL) -> CanonicalFactorization:
    """phi = u_minus u_plus from the first block column of T_m(phi)^{-1}.

    That column stacks the coefficients of u_plus^{-1} because the minus
    factor is normalized to have constant term I.
    """
    return _doubling(lambda mm: _left_at(sym, mm), sym, m, tol, "matrix_factorize_left")


def matrix_factorize_right(sym: BlockSymbol, m: int | None = None,
                           tol: float = RESIDUAL_TOL) -> CanonicalFactorization:
    """phi = v_plus v_minus from the first block column of T_m(phi^{-1})^{-1}."""
    inv = invert_symbol(sym)
    return _doubling(lambda mm: _right_at(sym, inv, mm), sym, m, tol, "matrix_factorize_right")


def factorize(sym: BlockSymbol, side: str = "right", m: int | None = None) -> CanonicalFactorization:
    """Pick the split-log route for scalar symbols and the Toeplitz route otherwise."""
    if sym.is_scalar:
        fac = scalar_factorize(sym)
        return as_right(fac) if side == "right" else fac
    if side == "left":
        return matrix_factorize_left(sym, m)
    return matrix_factorize_right(sym, m)


def _anchor_angle(sym: BlockSymbol) -> float:
    """z = 1 unless phi(1) is close to singular, then z = -1."""
    for theta in (0.0, np.pi):
        val = evaluate(sym, theta)
        if 1.0 / np.linalg.cond(val) > RCOND_MIN:
            return theta
    raise SingularSymbol("phi is near-singular at both z = 1 and z = -1")


def anti_factorize(sym: BlockSymbol, m: int | None = None, tol: float = 1e-8) -> AntiFactor:
    """Factor rho = phi reflect(phi)^{-1} as xi_minus reflect(xi_minus)^{-1}.

    A left factorization rho = a_minus a_plus always has a_plus equal to
    reflect(a_minus)^{-1} up to a constant G, and G = I is forced by
    continuity at z = 1 (or z = -1).  The constant is checked at the anchor
    point and the relation is then verified on the whole grid.
    """
    rho = multiply(sym, invert_symbol(reflect(sym)))
    rho = rho.trim(sym.tail_tol * 1e-2)
    if rho.allclose(BlockSymbol.identity(sym.block_size)):
        xi = BlockSymbol.identity(sym.block_size)
        return AntiFactor(xi, 0.0)
    fac = factorize(rho, side="left", m=m)
    xi = fac.minus_factor
    theta = _anchor_angle(sym)
    a_plus = evaluate(fac.plus_factor, theta)
    xi_refl_inv = np.linalg.inv(evaluate(xi, -theta))
    gap = float(np.abs(a_plus - xi_refl_inv).max())
    if gap > tol:
        raise ResidualTooLarge(f"anti_factorize: constant mismatch {gap:.2e} at theta={theta}",
                               stage="anti_factorize")
    grid = _grid_for(rho, xi, xi)
    xi_vals = sample(xi, grid).values
    xi_refl_vals = sample(reflect(xi), grid).values
    recon = xi_vals @ np.linalg.inv(xi_refl_vals)
    res = float(np.abs(sample(rho, grid).values - recon).max())
    if res > tol:
        raise ResidualTooLarge(f"anti_factorize: residual {res:.2e} exceeds {tol:g}",
                               stage="anti_factorize")
    return AntiFactor(xi, res)
