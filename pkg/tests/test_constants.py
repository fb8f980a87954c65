import numpy as np
import pytest

from szegolab.constants import (
    EMRequest,
    compare_em_readings,
    e_m_operator,
    e_m_scalar_even,
    exp_toeplitz_scalar_constant,
    f_toeplitz_constant,
)
from szegolab.determinants import e_constant, scalar_szego_e
from szegolab.errors import NonzeroWinding, NotEven
from szegolab.operators import FunctionSpec, MVariant
from szegolab.symbols import BlockSymbol, exp_symbol, log_det_series

from conftest import fixture_b, fixture_f

PHI_EXP = BlockSymbol.scalar({1: 0.3, -1: 0.2})
BETA_F = BlockSymbol.scalar({1: 0.4, -1: 0.4})


@pytest.mark.parametrize("variant", list(MVariant))
def test_e_m_operator_identity(variant):
    assert e_m_operator(EMRequest(BlockSymbol.identity(), variant)).value == pytest.approx(1)


def test_em_request_flags_noneven(sym_noneven):
    with pytest.raises(NotEven):
        EMRequest(sym_noneven, "I", even=True)
    assert EMRequest(sym_noneven, "II").variant is MVariant.II


@pytest.mark.parametrize("variant", list(MVariant))
def test_e_m_scalar_zero_beta(variant):
    assert e_m_scalar_even(BlockSymbol.zero(), variant) == pytest.approx(1)


def test_e_m_scalar_examples():
    assert e_m_scalar_even(BETA_F, "I") == pytest.approx(np.exp(0.08))
    beta = BlockSymbol.scalar({2: 0.2, -2: 0.2})
    assert e_m_scalar_even(beta, "III") == pytest.approx(np.exp(-0.16))
    assert e_m_scalar_even(beta, "IV") == pytest.approx(np.exp(0.24))
    with pytest.raises(NotEven):
        e_m_scalar_even(BlockSymbol.scalar({1: 0.1}), "I")


def test_e_m_scalar_with_beta1():
    assert e_m_scalar_even(BETA_F, "I", include_beta1=True) == pytest.approx(np.exp(0.48))
    assert e_m_scalar_even(BETA_F, "II", include_beta1=True) == pytest.approx(np.exp(-0.32))


@pytest.mark.parametrize("sym", [fixture_b(), fixture_f()], ids=["B", "F"])
def test_variant_product_equals_szego_e(sym):
    beta, _ = log_det_series(sym)
    prod = e_m_scalar_even(beta, "I") * e_m_scalar_even(beta, "II")
    assert prod == pytest.approx(scalar_szego_e(sym), rel=1e-10)
    prod = e_m_scalar_even(beta, "III") * e_m_scalar_even(beta, "IV")
    assert prod == pytest.approx(scalar_szego_e(sym), rel=1e-10)


def test_e_m_operator_against_beta1_reading():
    # operator values carry the beta_1 term in cases I and II
    for variant, expected in [("I", 0.48), ("II", -0.32), ("III", 0.08), ("IV", 0.08)]:
        val = e_m_operator(EMRequest(fixture_f(), variant, even=True)).value
        assert val == pytest.approx(np.exp(expected), rel=1e-8)


@pytest.mark.parametrize("variant", list(MVariant))
@pytest.mark.parametrize("sym", [fixture_b(), fixture_f()], ids=["B", "F"])
def test_compare_readings(sym, variant):
    report = compare_em_readings(sym, variant)
    if variant in (MVariant.I, MVariant.II):
        assert report["matches"] == "with_beta1"
    else:
        assert report["matches"] == "both"
    assert report["rel_err_with_beta1"] < 1e-6


def test_compare_readings_rejects_winding():
    with pytest.raises(NonzeroWinding):
        compare_em_readings(BlockSymbol.monomial(1), "I")


def test_e_m_tail_invariance(sym_f):
    tail = BlockSymbol.scalar({40: 1e-13, -40: 1e-13})
    a = e_m_operator(EMRequest(sym_f, "III")).value
    b = e_m_operator(EMRequest(sym_f + tail, "III")).value
    assert abs(a / b - 1) < 1e-6


def test_f_toeplitz_constant_examples(sym_b):
    assert f_toeplitz_constant(BlockSymbol.zero(), FunctionSpec.exp()).value == pytest.approx(1)
    assert f_toeplitz_constant(PHI_EXP, FunctionSpec.exp()).value == pytest.approx(np.exp(0.03), rel=1e-10)
    ident = FunctionSpec.polynomial([0, 1])
    assert f_toeplitz_constant(sym_b, ident).value == pytest.approx(4 / 3, rel=1e-10)


def test_exp_scalar_constant_examples():
    assert exp_toeplitz_scalar_constant(BlockSymbol.zero()) == pytest.approx(1)
    assert exp_toeplitz_scalar_constant(PHI_EXP) == pytest.approx(np.exp(0.03))
    assert exp_toeplitz_scalar_constant(BlockSymbol.scalar({1: 0.3})) == pytest.approx(1)


def test_pairing_identity():
    exp = FunctionSpec.exp()
    for phi in (PHI_EXP, BlockSymbol.scalar({1: 0.2, -1: -0.1, 2: 0.05, -2: 0.1})):
        prod = f_toeplitz_constant(phi, exp).value * f_toeplitz_constant(-phi, exp).value
        assert abs(prod / e_constant(exp_symbol(phi)).value - 1) < 1e-6


def test_f_toeplitz_constant_matrix_symbol(rng):
    coeffs = {k: 0.1 * rng.standard_normal((2, 2)) for k in (-1, 0, 1)}
    phi = BlockSymbol.from_coeffs(coeffs)
    val = f_toeplitz_constant(phi, FunctionSpec.exp())
    assert val.converged and np.isfinite(val.value)
