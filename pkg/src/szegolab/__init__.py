"""Determinants of finite Toeplitz, Toeplitz-plus-Hankel and f(T(phi)) sections."""

from .constants import (
    EMRequest,
    compare_em_readings,
    e_m_operator,
    e_m_scalar_even,
    exp_toeplitz_scalar_constant,
    f_toeplitz_constant,
)
from .determinants import (
    ConvergedValue,
    e_constant,
    jacobi_identity_check,
    logdet_dense,
    operator_determinant,
    scalar_szego_e,
)
from .identities import (
    IdentityReport,
    TheoremTag,
    banded_e_check,
    bef_even_check,
    bocg_check,
    f_toeplitz_check,
    szego_widom_fit,
    th_general_check,
    th_noneven_check,
)
from .operators import (
    FunctionSpec,
    MVariant,
    corner,
    f_of_toeplitz_corner,
    hankel_finite,
    m_operator_finite,
    qn_compress,
    toeplitz_finite,
    toeplitz_plus_hankel,
)
from .symbols import (
    BlockSymbol,
    GridSamples,
    b_norm,
    evaluate,
    exp_symbol,
    fl21_norm,
    fourier_coeffs,
    g_constant,
    invert_symbol,
    log_det_series,
    multiply,
    reflect,
    sample,
)
from .wiener_hopf import (
    AntiFactor,
    CanonicalFactorization,
    anti_factorize,
    matrix_factorize_left,
    matrix_factorize_right,
    scalar_factorize,
)

__version__ = "0.1.0"
