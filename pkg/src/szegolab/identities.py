"""Both-sides checks of the exact determinant identities and the limit theorems.

Every check returns an :class:`IdentityReport` whose rows hold, per ``n``,
the logarithms of the two sides and the relative residual
``|exp(lhs - rhs) - 1|``.  Exact identities must give residuals that are
flat in ``n``; asymptotic statements must give residuals that die out, and
are judged on the last row.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .constants import EMRequest, e_m_operator, f_toeplitz_constant
from .determinants import (
    DEFAULT_M0,
    ConvergedValue,
    e_constant,
    log_ratio_residual,
    logdet_dense,
    operator_determinant,
)
from .errors import NotBanded, NotEven, NumericalFailure, SingularMatrix
from .operators import (
    FunctionSpec,
    MVariant,
    corner,
    f_of_toeplitz_corner,
    hankel_finite,
    m_operator_finite,
    product_corner,
    qn_compress,
    toeplitz_finite,
)
from .symbols import (
    BlockSymbol,
    invert_symbol,
    is_even,
    log_g_constant,
    multiply,
    reflect,
)
from .wiener_hopf import anti_factorize, factorize

logger = logging.getLogger(__name__)

FLATNESS_FACTOR = 3.0
# residuals at or below this level are rounding noise; flatness is judged above it
NOISE_FLOOR = 1e-13


class TheoremTag(enum.Enum):
    BOCG = "BOCG"
    SZEGO_WIDOM = "SZEGO_WIDOM"
    BANDED_E = "BANDED_E"
    TH_GENERAL = "TH_GENERAL"
    TH_COROLLARY = "TH_COROLLARY"
    BEF_EVEN = "BEF_EVEN"
    TH_NONEVEN = "TH_NONEVEN"
    F_TOEPLITZ = "F_TOEPLITZ"

    @property
    def exact(self) -> bool:
        return self in (TheoremTag.BOCG, TheoremTag.BANDED_E, TheoremTag.BEF_EVEN, TheoremTag.TH_NONEVEN)


@dataclass(frozen=True)
class Row:
    n: int
    lhs: complex
    rhs: complex
    residual: float


@dataclass
class IdentityReport:
    theorem_tag: TheoremTag
    rows: list[Row]
    params: dict
    tol: float
    extras: dict = field(default_factory=dict)
    failure: dict | None = None

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual for r in self.rows])

    @property
    def tail_residual(self) -> float:
        return float(self.rows[-1].residual) if self.rows else float("inf")

    def is_flat(self, factor: float = FLATNESS_FACTOR, floor: float = NOISE_FLOOR) -> bool:
        """max residual <= factor * median residual, counting noise-level values at the floor."""
        if not self.rows:
            return False
        res = np.maximum(self.residuals, floor)
        return bool(res.max() <= factor * np.median(res))

    @property
    def passed(self) -> bool:
        if self.failure is not None or not self.rows:
            return False
        if self.theorem_tag.exact:
            return bool(np.all(self.residuals < self.tol))
        return self.tail_residual < self.tol

    def to_dict(self) -> dict:
        return {
            "theorem_tag": self.theorem_tag.value,
            "tol": self.tol,
            "pass": self.passed,
            "flat": self.is_flat() if self.theorem_tag.exact and self.rows else None,
            "params": _jsonable(self.params),
            "extras": _jsonable(self.extras),
            "failure": self.failure,
            "rows": [
                {"n": r.n, "lhs_log": [r.lhs.real, r.lhs.imag],
                 "rhs_log": [r.rhs.real, r.rhs.imag], "residual": r.residual}
                for r in self.rows
            ],
        }

    def csv_rows(self) -> list[list]:
        return [[r.n, r.lhs.real, r.lhs.imag, r.rhs.real, r.rhs.imag, r.residual] for r in self.rows]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, ConvergedValue):
        return obj.to_dict()
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, BlockSymbol):
        return symbol_fingerprint(obj)
    return obj


def symbol_fingerprint(sym: BlockSymbol) -> str:
    """Short stable hash of the stored coefficients."""
    h = hashlib.sha256()
    h.update(json.dumps([sym.block_size, sym.offset, sym.data.shape[0]]).encode())
    h.update(np.ascontiguousarray(sym.data).tobytes())
    return h.hexdigest()[:12]


def _row(n: int, lhs: complex, rhs: complex) -> Row:
    return Row(n, complex(lhs), complex(rhs), log_ratio_residual(lhs, rhs))


def _identity_minus(mat: np.ndarray) -> np.ndarray:
    return np.eye(mat.shape[0]) - mat


def _failure(exc: Exception) -> dict:
    return {"stage": getattr(exc, "stage", None) or type(exc).__name__,
            "error": type(exc).__name__, "message": str(exc)}


# -- Toeplitz ----------------------------------------------------------------

def bocg_check(sym: BlockSymbol, n_range: Iterable[int], tol: float = 1e-8,
               m0: int = DEFAULT_M0) -> IdentityReport:
    """det T_n = G^n E det(I - H(z^{-n} v_- u_+^{-1}) H(reflect(u_-^{-1}) reflect(v_+) z^{-n}))."""
    ns = sorted(n_range)
    left = factorize(sym, "left")
    right = factorize(sym, "right")
    log_g = log_g_constant(sym)
    e = e_constant(sym, tol=min(tol, 1e-10) * 1e-2, m0=m0)
    a = multiply(right.minus, invert_symbol(left.plus))
    b = multiply(reflect(invert_symbol(left.minus)), reflect(right.plus))
    rows, corrections = [], {}
    for n in ns:
        a_n, b_n = a.shift(-n), b.shift(-n)
        corr = operator_determinant(
            lambda m: _identity_minus(hankel_finite(a_n, m) @ hankel_finite(b_n, m)),
            tol=min(tol, 1e-10) * 1e-2, m0=m0, stage="bocg_correction")
        corrections[n] = corr.value
        lhs = logdet_dense(toeplitz_finite(sym, n))
        rows.append(_row(n, lhs, n * log_g + e.log_value + corr.log_value))
    return IdentityReport(TheoremTag.BOCG, rows,
                          {"symbol": sym, "n_range": [ns[0], ns[-1]], "m0": m0},
                          tol, {"G": np.exp(log_g), "E": e, "corrections": corrections,
                                "factor_residuals": [left.residual, right.residual]})


def _logdets(sym: BlockSymbol, ns: Sequence[int]) -> dict[int, complex]:
    out = {}
    for n in ns:
        try:
            out[n] = logdet_dense(toeplitz_finite(sym, n))
        except SingularMatrix:
            logger.warning("D_%d vanishes; point skipped", n)
    return out


def szego_widom_fit(sym: BlockSymbol, n_range: Iterable[int], tol: float = 1e-6):
    """Least-squares line through (n, log D_n) over the upper half of the range.

    Returns ``(G_fit, E_fit, report)``; the report rows compare log D_n with
    n log G + log E computed from the symbol.
    """
    ns = sorted(n_range)
    logs = _logdets(sym, ns)
    xs = np.array(sorted(logs), dtype=float)
    ys = np.array([logs[n] for n in sorted(logs)])
    # principal arguments unwrapped along n keep the line continuous
    ys = ys.real + 1j * np.unwrap(np.angle(np.exp(1j * ys.imag)))
    tail = slice(len(xs) // 2, None) if len(xs) >= 4 else slice(None)
    design = np.vstack([xs[tail], np.ones_like(xs[tail])]).T
    (slope, intercept), *_ = np.linalg.lstsq(design.astype(complex), ys[tail], rcond=None)
    g_fit, e_fit = complex(np.exp(slope)), complex(np.exp(intercept))
    log_g = log_g_constant(sym)
    e = e_constant(sym)
    rows = [_row(int(n), y, n * log_g + e.log_value) for n, y in zip(xs, ys)]
    report = IdentityReport(TheoremTag.SZEGO_WIDOM, rows,
                            {"symbol": sym, "n_range": [ns[0], ns[-1]]}, tol,
                            {"G_fit": g_fit, "E_fit": e_fit, "G": np.exp(log_g), "E": e,
                             "G_rel_err": abs(g_fit / np.exp(log_g) - 1),
                             "E_rel_err": abs(e_fit / e.value - 1)})
    return g_fit, e_fit, report


def check_banded(sym: BlockSymbol, n: int) -> None:
    if sym.max_index > n and sym.min_index < -n:
        raise NotBanded(f"symbol not banded: coefficients on both sides beyond |k| = {n}")


def banded_e_check(sym: BlockSymbol, n_range: Iterable[int], tol: float = 1e-8) -> IdentityReport:
    """E(phi) against G(phi)^n det T_n(phi^{-1}) for one-sidedly banded phi."""
    ns = sorted(n_range)
    for n in ns:
        check_banded(sym, n)
    inv = invert_symbol(sym)
    # T(phi) and T(phi^{-1}) must be invertible; the factorizations certify both
    factorize(sym, "left")
    factorize(sym, "right")
    log_g = log_g_constant(sym)
    e = e_constant(sym, tol=min(tol, 1e-10) * 1e-2, inverse=inv)
    rows = [_row(n, e.log_value, n * log_g + logdet_dense(toeplitz_finite(inv, n))) for n in ns]
    return IdentityReport(TheoremTag.BANDED_E, rows, {"symbol": sym, "n_range": [ns[0], ns[-1]]},
                          tol, {"E": e, "G": np.exp(log_g)})


# -- general perturbations and Toeplitz-plus-Hankel ---------------------------

def hankel_builder(psi: BlockSymbol) -> Callable[[int], np.ndarray]:
    return lambda m: hankel_finite(psi, m)


def th_general_check(phi: BlockSymbol, k_builder: Callable[[int], np.ndarray],
                     n_range: Iterable[int], tol: float = 1e-8, m0: int = DEFAULT_M0,
                     tag: TheoremTag = TheoremTag.TH_GENERAL) -> IdentityReport:
    """det P_n (T(phi) + K) P_n against G^n det T(phi^{-1}) (T(phi) + K).

    ``k_builder(m)`` must return the m-block finite section of K.
    """
    ns = sorted(n_range)
    nb = phi.block_size
    factorize(phi, "right")
    inv = invert_symbol(phi)
    log_g = log_g_constant(phi)
    const = operator_determinant(
        lambda m: product_corner([lambda s: toeplitz_finite(inv, s),
                                  lambda s: toeplitz_finite(phi, s) + k_builder(s)], m, nb),
        tol=min(tol, 1e-10) * 1e-2, m0=m0, stage="th_general_constant")
    big = max(ns)
    k_big = k_builder(big)
    rows = []
    for n in ns:
        lhs = logdet_dense(toeplitz_finite(phi, n) + corner(k_big, n * nb, n * nb))
        rows.append(_row(n, lhs, n * log_g + const.log_value))
    return IdentityReport(tag, rows, {"symbol": phi, "n_range": [ns[0], ns[-1]], "m0": m0},
                          tol, {"constant": const, "G": np.exp(log_g)})


def th_corollary_constant(phi: BlockSymbol, psi: BlockSymbol, tol: float = 1e-10,
                          m0: int = DEFAULT_M0) -> ConvergedValue:
    """E(phi) det(I + T(phi)^{-1} H(psi)), the constant when T(phi) is invertible."""
    e = e_constant(phi, tol=tol, m0=m0)
    nb = phi.block_size

    def build(m):
        t = toeplitz_finite(phi, 2 * m)
        x = np.linalg.solve(t, hankel_finite(psi, 2 * m))
        return np.eye(m * nb) + x[: m * nb, : m * nb]

    corr = operator_determinant(build, tol, m0, stage="th_corollary")
    return ConvergedValue(e.log_value + corr.log_value, corr.schedule, corr.achieved_tol, True)


def k_builder_even(plus: BlockSymbol, variant: MVariant) -> Callable[[int], np.ndarray]:
    """m -> finite section of K = M(phi_+^{-1}) T(phi_+) - I in Hankel form."""
    variant = MVariant.parse(variant)
    plus_inv = invert_symbol(plus)
    g = multiply(plus_inv, reflect(plus))
    if variant is MVariant.I:
        return lambda m: hankel_finite(g, m)
    if variant is MVariant.II:
        return lambda m: -hankel_finite(g, m)
    if variant is MVariant.III:
        return lambda m: -hankel_finite(g.shift(-1), m)
    zg, zplus = g.shift(1), reflect(plus).shift(1)
    # T(phi_+^{-1}) is lower triangular, so its finite section multiplies exactly
    return lambda m: hankel_finite(zg, m) - toeplitz_finite(plus_inv, m) @ hankel_finite(zplus, m)


def k_builder_generic(a: BlockSymbol, variant: MVariant,
                      a_inv: BlockSymbol | None = None) -> Callable[[int], np.ndarray]:
    """m -> finite section of M(a) T(a^{-1}) - I, formed with padded products."""
    variant = MVariant.parse(variant)
    a_inv = invert_symbol(a) if a_inv is None else a_inv
    nb = a.block_size

    def build(m):
        prod = product_corner([lambda s: m_operator_finite(a, variant, s),
                               lambda s: toeplitz_finite(a_inv, s)], m, nb)
        return prod - np.eye(m * nb)

    return build


def _qn_correction(k_of_m: Callable[[int], np.ndarray], n: int, nb: int, tol: float,
                   m0: int, stage: str) -> ConvergedValue:
    """det(I + Q_n K Q_n) on the window [n, m), doubled in m."""
    def build(m):
        k = k_of_m(m)
        return qn_compress(np.eye(k.shape[0]) + k, n * nb)
    return operator_determinant(build, tol, max(m0, 2 * n), stage=stage)


def _th_rows(phi: BlockSymbol, variant: MVariant, ns, log_g, e_m: ConvergedValue,
             k_of_m, tol, m0, stage) -> tuple[list[Row], dict]:
    nb = phi.block_size
    rows, corrections = [], {}
    for n in ns:
        corr = _qn_correction(k_of_m, n, nb, tol, m0, stage)
        corrections[n] = corr.value
        lhs = logdet_dense(m_operator_finite(phi, variant, n))
        rows.append(_row(n, lhs, n * log_g + e_m.log_value + corr.log_value))
    return rows, corrections


def bef_even_check(phi: BlockSymbol, variant: MVariant, n_range: Iterable[int],
                   tol: float = 1e-6, m0: int = DEFAULT_M0) -> IdentityReport:
    """det M_n(phi) = G^n E_M det(I + Q_n K Q_n) for even phi."""
    variant = MVariant.parse(variant)
    if not is_even(phi):
        raise NotEven("bef_even_check needs an even symbol")
    ns = sorted(n_range)
    inner = min(tol, 1e-10) * 1e-2
    plus = factorize(phi, "right").plus
    log_g = log_g_constant(phi)
    e_m = e_m_operator(EMRequest(phi, variant, even=True), tol=inner, m0=m0)
    rows, corrections = _th_rows(phi, variant, ns, log_g, e_m, k_builder_even(plus, variant),
                                 inner, m0, "bef_correction")
    return IdentityReport(TheoremTag.BEF_EVEN, rows,
                          {"symbol": phi, "variant": variant, "n_range": [ns[0], ns[-1]], "m0": m0},
                          tol, {"E_M": e_m, "G": np.exp(log_g), "corrections": corrections})


def th_noneven_check(phi: BlockSymbol, variant: MVariant, n_range: Iterable[int],
                     tol: float = 1e-6, m0: int = DEFAULT_M0) -> IdentityReport:
    """Same identity without evenness, via the anti-factorization of phi reflect(phi)^{-1}.

    A failed anti-factorization is recorded in ``report.failure`` instead of raised.
    """
    variant = MVariant.parse(variant)
    ns = sorted(n_range)
    params = {"symbol": phi, "variant": variant, "n_range": [ns[0], ns[-1]], "m0": m0}
    inner = min(tol, 1e-10) * 1e-2
    right = factorize(phi, "right")
    try:
        anti = anti_factorize(phi)
    except NumericalFailure as exc:
        logger.warning("anti-factorization hypothesis fails: %s", exc)
        return IdentityReport(TheoremTag.TH_NONEVEN, [], params, tol, failure=_failure(exc))
    log_g = log_g_constant(phi)
    e_m = e_m_operator(EMRequest(phi, variant), tol=inner, m0=m0)
    a = multiply(invert_symbol(right.plus), anti.xi_minus)
    a_inv = multiply(invert_symbol(anti.xi_minus), right.plus)
    k_of_m = k_builder_generic(a, variant, a_inv)

    rows, corrections = _th_rows(phi, variant, ns, log_g, e_m, k_of_m, inner, m0, "noneven_correction")
    return IdentityReport(TheoremTag.TH_NONEVEN, rows, params, tol,
                          {"E_M": e_m, "G": np.exp(log_g), "corrections": corrections,
                           "anti_factor_residual": anti.residual,
                           "factor_residual": right.residual})


def f_toeplitz_check(phi: BlockSymbol, f: FunctionSpec, n_range: Iterable[int],
                     tol: float = 1e-6, m0: int = DEFAULT_M0) -> IdentityReport:
    """det P_n f(T(phi)) P_n against G(f(phi))^n det f(T(phi)) T(f(phi)^{-1})."""
    ns = sorted(n_range)
    inner = min(tol, 1e-10) * 1e-2
    fphi = f.of_symbol(phi)
    log_g = log_g_constant(fphi)
    const = f_toeplitz_constant(phi, f, tol=inner, m0=m0)
    rows, schedules = [], {}
    for n in ns:
        lhs = operator_determinant(lambda m: f_of_toeplitz_corner(phi, f, n, m), inner,
                                   max(m0, 2 * n), stage="f_toeplitz_corner")
        schedules[n] = lhs.schedule[-1][0]
        rows.append(_row(n, lhs.log_value, n * log_g + const.log_value))
    return IdentityReport(TheoremTag.F_TOEPLITZ, rows,
                          {"symbol": phi, "function": str(f), "n_range": [ns[0], ns[-1]], "m0": m0},
                          tol, {"constant": const, "G": np.exp(log_g), "final_truncation": schedules})
