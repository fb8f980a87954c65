"""Log-determinants of dense matrices and truncation-limit operator determinants."""

from __future__ import annotations

import cmath
import logging
import os
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as la

from .errors import NoConvergence, NonzeroWinding, SingularMatrix
from .operators import corner, hankel_finite, qn_compress
from .symbols import BlockSymbol, invert_symbol, log_det_series, reflect

logger = logging.getLogger(__name__)

DEFAULT_M0 = 32
DEFAULT_MAX_DOUBLINGS = 8
MAX_DOUBLINGS_ENV = "SZEGOLAB_MAX_DOUBLINGS"


def max_doublings() -> int:
    raw = os.environ.get(MAX_DOUBLINGS_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_MAX_DOUBLINGS
    value = int(raw)
    if value < 1:
        raise ValueError(f"{MAX_DOUBLINGS_ENV} must be a positive integer")
    return value


def wrap_phase(z: complex) -> complex:
    """Move the imaginary part of a logarithm into (-pi, pi]."""
    return complex(z.real, z.imag - 2 * np.pi * round(z.imag / (2 * np.pi)))


def log_ratio_residual(lhs: complex, rhs: complex) -> float:
    """|exp(lhs - rhs) - 1|, insensitive to 2 pi i branch differences."""
    return abs(cmath.exp(wrap_phase(lhs - rhs)) - 1.0)


def logdet_dense(mat: np.ndarray) -> complex:
    """log det via LU with partial pivoting.

    Returns log|det| + i arg where the argument is accumulated from the
    pivots and the permutation sign, so it is not reduced to (-pi, pi].
    """
    a = np.asarray(mat, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"logdet_dense needs a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        return 0j
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    with warnings.catch_warnings():
        # an exact zero pivot is reported below as SingularMatrix
        warnings.simplefilter("ignore", la.LinAlgWarning)
        lu, piv = la.lu_factor(a, check_finite=False)
    diag = np.diag(lu)
    if np.any(diag == 0):
        raise SingularMatrix("exact zero pivot in LU factorization")
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    return complex(np.log(diag).sum() + (1j * np.pi if swaps % 2 else 0))


def det_dense(mat: np.ndarray) -> complex:
    return complex(np.exp(logdet_dense(mat)))


@dataclass
class ConvergedValue:
    """A truncation limit together with its doubling schedule.

    ``schedule`` holds ``(m, log value)`` pairs in increasing ``m``;
    ``achieved_tol`` is the last successive difference of the logs.
    """

    log_value: complex
    schedule: list[tuple[int, complex]] = field(default_factory=list)
    achieved_tol: float = 0.0
    converged: bool = True

    @property
    def value(self) -> complex:
        return complex(np.exp(self.log_value))

    def to_dict(self) -> dict:
        def c(z):
            return [float(z.real), float(z.imag)]
        return {
            "value": c(self.value),
            "log_value": c(self.log_value),
            "achieved_tol": self.achieved_tol,
            "converged": self.converged,
            "schedule": [{"m": m, "log_value": c(v), "value": c(complex(np.exp(v)))}
                         for m, v in self.schedule],
        }


def operator_determinant(builder: Callable[[int], np.ndarray], tol: float = 1e-10,
                         m0: int = DEFAULT_M0, doublings: int | None = None,
                         stage: str = "operator_determinant") -> ConvergedValue:
    """det(I + K) as the limit of det of ``builder(m)`` for m = m0, 2 m0, 4 m0, ...

    Stops once two consecutive log-differences fall below ``tol``.
    """
    doublings = max_doublings() if doublings is None else doublings
    schedule: list[tuple[int, complex]] = []
    hits = 0
    m = m0
    for _ in range(doublings + 1):
        schedule.append((m, logdet_dense(builder(m))))
        if len(schedule) >= 2:
            delta = abs(wrap_phase(schedule[-1][1] - schedule[-2][1]))
            hits = hits + 1 if delta < tol else 0
            if hits >= 2:
                return ConvergedValue(schedule[-1][1], schedule, delta, True)
        m *= 2
    logger.warning("%s: no convergence after %d doublings", stage, doublings)
    raise NoConvergence(f"{stage}: no convergence to {tol:g} up to m={schedule[-1][0]}",
                        schedule=schedule, stage=stage)


def e_constant(sym: BlockSymbol, tol: float = 1e-10, m0: int = DEFAULT_M0,
               inverse: BlockSymbol | None = None) -> ConvergedValue:
    """E(phi) = det T(phi) T(phi^{-1}) = det(I - H(phi) H(reflect(phi^{-1})))."""
    inv = invert_symbol(sym) if inverse is None else inverse
    inv_reflected = reflect(inv)

    def build(m):
        h = hankel_finite(sym, m) @ hankel_finite(inv_reflected, m)
        return np.eye(h.shape[0]) - h

    return operator_determinant(build, tol, m0, stage="e_constant")


def scalar_szego_e(sym: BlockSymbol) -> complex:
    """exp(sum_k k (log phi)_k (log phi)_{-k}) for scalar phi."""
    if not sym.is_scalar:
        raise ValueError("scalar_szego_e needs a scalar symbol")
    beta, winding = log_det_series(sym)
    if winding != 0:
        raise NonzeroWinding(f"symbol has winding number {winding}")
    kmax = max(beta.max_index, -beta.min_index)
    total = sum(k * beta[k][0, 0] * beta[-k][0, 0] for k in range(1, kmax + 1))
    return complex(np.exp(total))


def jacobi_identity_check(a: np.ndarray, n: int, block_size: int = 1) -> float:
    """Relative residual of det P A P = det A * det Q A^{-1} Q for P = P_n."""
    nn = n * block_size
    lhs = logdet_dense(corner(a, nn, nn))
    la_ = logdet_dense(a)
    try:
        inv = np.linalg.inv(a)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(str(exc)) from exc
    rhs = la_ + logdet_dense(qn_compress(inv, nn))
    return log_ratio_residual(rhs, lhs)
