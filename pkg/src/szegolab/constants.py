"""E_M(phi) for Toeplitz-plus-Hankel maps and the constant for f(T(phi))."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .determinants import DEFAULT_M0, ConvergedValue, operator_determinant
from .errors import NonzeroWinding, NotEven, RegionViolation
from .operators import (
    FunctionSpec,
    MVariant,
    m_operator_finite,
    product_corner,
    spectrum_proxy,
    toeplitz_finite,
)
from .symbols import BlockSymbol, invert_symbol, is_even, log_det_series, winding_number


@dataclass(frozen=True)
class EMRequest:
    symbol: BlockSymbol
    variant: MVariant
    even: bool = False

    def __post_init__(self):
        object.__setattr__(self, "variant", MVariant.parse(self.variant))
        if self.even and not is_even(self.symbol):
            raise NotEven("EMRequest flagged even but reflect(symbol) != symbol")


def e_m_operator(req: EMRequest, tol: float = 1e-10, m0: int = DEFAULT_M0,
                 inverse: BlockSymbol | None = None) -> ConvergedValue:
    """E_M(phi) = det T(phi^{-1}) M(phi) by finite sections of the product."""
    phi = req.symbol
    inv = invert_symbol(phi) if inverse is None else inverse
    n = phi.block_size
    builders = [lambda s: toeplitz_finite(inv, s), lambda s: m_operator_finite(phi, req.variant, s)]
    return operator_determinant(lambda m: product_corner(builders, m, n), tol, m0,
                                stage=f"e_m_operator[{req.variant.value}]")


def _odd_sum(beta: BlockSymbol, start: int) -> complex:
    return sum(beta[k][0, 0] for k in range(start, beta.max_index + 1, 2))


def _even_sum(beta: BlockSymbol) -> complex:
    return sum(beta[k][0, 0] for k in range(2, beta.max_index + 1, 2))


def e_m_scalar_even(beta: BlockSymbol, variant: MVariant, include_beta1: bool = False) -> complex:
    """Closed form of E_M(exp(beta)) for an even scalar exponent ``beta``.

    With ``include_beta1=False`` the odd sum of cases I/II runs over
    beta_3, beta_5, ...; with ``True`` it starts at beta_1, which is
    tr H(beta).  Cases III/IV do not involve the odd coefficients.
    """
    variant = MVariant.parse(variant)
    if not beta.is_scalar:
        raise ValueError("e_m_scalar_even needs a scalar exponent")
    if not is_even(beta):
        raise NotEven("beta is not even")
    half = 0.5 * sum(k * beta[k][0, 0] ** 2 for k in range(1, beta.max_index + 1))
    odd = _odd_sum(beta, 1 if include_beta1 else 3)
    trace_part = {
        MVariant.I: odd,
        MVariant.II: -odd,
        MVariant.III: -_even_sum(beta),
        MVariant.IV: _even_sum(beta),
    }[variant]
    return complex(np.exp(trace_part + half))


def compare_em_readings(phi: BlockSymbol, variant: MVariant, tol: float = 1e-6,
                        operator_value: ConvergedValue | None = None) -> dict:
    """Which reading of the odd sum in the scalar closed form matches the operator value."""
    variant = MVariant.parse(variant)
    beta, winding = log_det_series(phi)
    if winding != 0:
        raise NonzeroWinding(f"symbol has winding number {winding}")
    op = operator_value or e_m_operator(EMRequest(phi, variant, even=True))
    printed = e_m_scalar_even(beta, variant, include_beta1=False)
    with_b1 = e_m_scalar_even(beta, variant, include_beta1=True)
    err_printed = abs(printed / op.value - 1)
    err_b1 = abs(with_b1 / op.value - 1)
    ok_printed, ok_b1 = err_printed < tol, err_b1 < tol
    matches = {(True, True): "both", (True, False): "printed",
               (False, True): "with_beta1", (False, False): "neither"}[(ok_printed, ok_b1)]
    return {
        "variant": variant.value,
        "operator": op.value,
        "printed": printed,
        "with_beta1": with_b1,
        "rel_err_printed": err_printed,
        "rel_err_with_beta1": err_b1,
        "matches": matches,
    }


def _check_region(sym: BlockSymbol, f: FunctionSpec, m: int) -> None:
    if f.radius is not None and not f.contains(spectrum_proxy(sym, m)):
        raise RegionViolation(f"spectrum proxy at m={m} leaves |z| < {f.radius}")


def f_toeplitz_constant(sym: BlockSymbol, f: FunctionSpec, tol: float = 1e-10,
                        m0: int = DEFAULT_M0) -> ConvergedValue:
    """det f(T(phi)) T(f(phi)^{-1}) by finite sections."""
    fphi = f.of_symbol(sym)
    if winding_number(fphi) != 0:
        raise NonzeroWinding("f(phi) has nonzero winding number")
    finv = invert_symbol(fphi)
    n = sym.block_size

    def f_of_t(s):
        _check_region(sym, f, s)
        return f.of_matrix(toeplitz_finite(sym, s))

    builders = [f_of_t, lambda s: toeplitz_finite(finv, s)]
    return operator_determinant(lambda m: product_corner(builders, m, n), tol, m0,
                                stage="f_toeplitz_constant")


def exp_toeplitz_scalar_constant(sym: BlockSymbol) -> complex:
    """exp(1/2 sum_{k>=1} k phi_k phi_{-k}) for scalar phi."""
    if not sym.is_scalar:
        raise ValueError("exp_toeplitz_scalar_constant needs a scalar symbol")
    kmax = max(sym.max_index, -sym.min_index, 0)
    total = sum(k * sym[k][0, 0] * sym[-k][0, 0] for k in range(1, kmax + 1))
    return complex(np.exp(0.5 * total))
