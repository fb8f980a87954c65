import json

import numpy as np
import pytest

from szegolab import identities
from szegolab.errors import NotBanded, NotEven, ResidualTooLarge
from szegolab.identities import (
    IdentityReport,
    Row,
    TheoremTag,
    banded_e_check,
    bef_even_check,
    bocg_check,
    f_toeplitz_check,
    hankel_builder,
    k_builder_even,
    k_builder_generic,
    symbol_fingerprint,
    szego_widom_fit,
    th_corollary_constant,
    th_general_check,
    th_noneven_check,
)
from szegolab.determinants import logdet_dense
from szegolab.operators import FunctionSpec, MVariant, corner, hankel_finite, toeplitz_finite
from szegolab.symbols import BlockSymbol, invert_symbol
from szegolab.wiener_hopf import factorize

from conftest import block_fixture, fixture_b, fixture_c, fixture_f, noneven, random_block_symbol

PHI_EXP = BlockSymbol.scalar({1: 0.3, -1: 0.2})


def d_n(n, r=0.5):
    return (1 - r ** (2 * n + 2)) / (1 - r * r)


# -- BOCG ---------------------------------------------------------------------

def test_bocg_identity_symbol():
    rep = bocg_check(BlockSymbol.identity(), range(1, 5))
    assert rep.passed
    for row in rep.rows:
        assert abs(row.lhs) < 1e-14 and abs(row.rhs) < 1e-14


def test_bocg_fixture_b_closed_form(sym_b):
    rep = bocg_check(sym_b, range(1, 11))
    assert rep.passed and rep.is_flat()
    row2 = rep.rows[1]
    assert np.exp(row2.lhs) == pytest.approx(1.3125)
    assert np.exp(row2.rhs) == pytest.approx(1.3125)
    for n, corr in rep.extras["corrections"].items():
        assert corr == pytest.approx(1 - 0.5 ** (2 * n + 2), rel=1e-10)


@pytest.mark.parametrize("sym", [fixture_c(), block_fixture()], ids=["C", "block"])
def test_bocg_residuals(sym):
    rep = bocg_check(sym, range(1, 11))
    assert rep.passed and rep.is_flat()
    assert rep.residuals.max() < 1e-8


def test_bocg_random_matrix_symbol(rng):
    sym = random_block_symbol(rng, n=2, width=1, scale=0.12)
    rep = bocg_check(sym, range(1, 8))
    assert rep.passed and rep.residuals.max() < 1e-8


def test_bocg_correction_tends_to_one(sym_b, sym_c):
    for sym in (sym_b, sym_c):
        rep = bocg_check(sym, range(15, 19))
        assert all(abs(c - 1) < 1e-6 for c in rep.extras["corrections"].values())


# -- Szego-Widom ----------------------------------------------------------------

def test_szego_fit_identity():
    g, e, rep = szego_widom_fit(BlockSymbol.identity(), range(1, 11))
    assert g == pytest.approx(1, abs=1e-14) and e == pytest.approx(1, abs=1e-14)
    assert rep.passed


def test_szego_fit_b(sym_b):
    g, e, rep = szego_widom_fit(sym_b, range(1, 41))
    assert abs(g - 1) < 1e-10 and abs(e - 4 / 3) < 1e-9
    assert rep.passed
    assert rep.theorem_tag is TheoremTag.SZEGO_WIDOM and not rep.theorem_tag.exact
    # residual is the closed-form tail r^{2n+2}
    for row in rep.rows[:10]:
        assert row.residual == pytest.approx(0.5 ** (2 * row.n + 2), rel=1e-6)


def test_szego_fit_c(sym_c):
    _, e, rep = szego_widom_fit(sym_c, range(1, 31))
    assert abs(e - np.exp(0.06)) < 1e-6
    assert rep.passed


def test_szego_residuals_eventually_decrease(sym_c):
    _, _, rep = szego_widom_fit(sym_c, range(1, 12))
    res = rep.residuals
    tail = res[res > 1e-14]
    assert np.all(np.diff(tail) < 0)


# -- banded E -------------------------------------------------------------------

def test_banded_e_examples(sym_b):
    rep = banded_e_check(BlockSymbol.identity(), [1])
    assert rep.passed
    rep = banded_e_check(sym_b, range(1, 6))
    assert rep.passed and rep.is_flat()
    assert np.exp(rep.rows[0].rhs) == pytest.approx(4 / 3, rel=1e-12)
    assert rep.residuals.max() < 1e-8


def test_banded_e_one_sided_band():
    # phi_k = 0 for k > 1 only; the theorem needs one side banded
    sym = BlockSymbol.scalar({1: -0.3, 0: 1}) * invert_symbol(BlockSymbol.scalar({0: 1, -1: -0.4}))
    rep = banded_e_check(sym, range(1, 5))
    assert rep.passed


def test_banded_e_rejects_unbanded(sym_c):
    with pytest.raises(NotBanded):
        banded_e_check(sym_c, range(1, 4))


# -- general perturbations ------------------------------------------------------

def test_th_general_k_zero(sym_b):
    rep = th_general_check(sym_b, lambda m: np.zeros((m, m)), range(1, 21))
    assert rep.rows[-1].residual < 1e-8
    assert rep.extras["constant"].value == pytest.approx(4 / 3, rel=1e-10)


def test_th_general_rank_one():
    def k(m):
        out = np.zeros((m, m))
        out[0, 0] = 0.5
        return out

    rep = th_general_check(BlockSymbol.identity(), k, range(1, 6))
    assert rep.extras["constant"].value == pytest.approx(1.5)
    for row in rep.rows:
        assert np.exp(row.lhs) == pytest.approx(1.5)
    assert rep.passed


def test_th_corollary_hankel(sym_b):
    psi = sym_b
    rep = th_general_check(sym_b, hankel_builder(psi), range(1, 26), tag=TheoremTag.TH_COROLLARY)
    assert rep.passed
    const = rep.extras["constant"].value
    assert const == pytest.approx(th_corollary_constant(sym_b, psi).value, rel=1e-9)
    # dense oracle at m = 256: det T_m(phi^{-1}) (T_m(phi) + H_m(psi)), inner size padded
    m = 256
    inv = invert_symbol(sym_b)
    big = toeplitz_finite(inv, 2 * m) @ (toeplitz_finite(sym_b, 2 * m) + hankel_finite(psi, 2 * m))
    dense = np.exp(logdet_dense(big[:m, :m]))
    assert const == pytest.approx(dense, rel=1e-9)


# -- Toeplitz-plus-Hankel --------------------------------------------------------

@pytest.mark.parametrize("variant", list(MVariant))
def test_bef_identity(variant):
    rep = bef_even_check(BlockSymbol.identity(), variant, range(1, 4))
    assert rep.passed
    assert all(abs(r.lhs) < 1e-14 and abs(r.rhs) < 1e-14 for r in rep.rows)


def test_bef_examples(sym_f, sym_b):
    rep = bef_even_check(sym_f, "I", range(1, 9))
    assert rep.passed and rep.residuals.max() < 1e-7
    rep = bef_even_check(sym_b, "II", range(1, 9))
    assert rep.passed and rep.residuals.max() < 1e-7


def test_bef_rejects_noneven(sym_noneven):
    with pytest.raises(NotEven):
        bef_even_check(sym_noneven, "I", range(1, 3))


@pytest.mark.parametrize("variant", list(MVariant))
@pytest.mark.parametrize("sym", [fixture_b(), fixture_f()], ids=["B", "F"])
def test_even_k_matches_generic(sym, variant):
    plus = factorize(sym, "right").plus
    k_even = k_builder_even(plus, variant)
    k_gen = k_builder_generic(invert_symbol(plus), variant, plus)
    m, n = 48, 12
    assert np.abs(corner(k_even(m), n) - corner(k_gen(m), n)).max() < 1e-12


@pytest.mark.parametrize("variant", list(MVariant))
def test_noneven_even_reduction(sym_f, variant):
    a = th_noneven_check(sym_f, variant, range(1, 6))
    b = bef_even_check(sym_f, variant, range(1, 6))
    assert a.passed and b.passed
    for ra, rb in zip(a.rows, b.rows):
        assert abs(ra.rhs - rb.rhs) < 1e-10


@pytest.mark.parametrize("variant", list(MVariant))
def test_noneven_theorem(sym_noneven, variant):
    rep = th_noneven_check(sym_noneven, variant, range(1, 7))
    assert rep.passed and rep.is_flat()
    assert rep.residuals.max() < 1e-6
    assert rep.extras["anti_factor_residual"] < 1e-8


def test_noneven_matrix_symbol(rng):
    sym = random_block_symbol(rng, n=2, width=1, scale=0.1)
    rep = th_noneven_check(sym, "I", range(1, 5))
    assert rep.passed


def test_noneven_records_hypothesis_failure(sym_noneven, monkeypatch):
    def broken(_sym, *args, **kwargs):
        raise ResidualTooLarge("anti_factorize: residual 1e-2", stage="anti_factorize")

    monkeypatch.setattr(identities, "anti_factorize", broken)
    rep = th_noneven_check(sym_noneven, "I", range(1, 3))
    assert not rep.passed
    assert rep.failure["stage"] == "anti_factorize"
    assert rep.to_dict()["failure"]["error"] == "ResidualTooLarge"


# -- f(T(phi)) -------------------------------------------------------------------

def test_f_toeplitz_zero():
    rep = f_toeplitz_check(BlockSymbol.zero(), FunctionSpec.exp(), range(1, 4))
    assert rep.passed
    assert all(abs(r.lhs) < 1e-14 for r in rep.rows)


def test_f_toeplitz_exp():
    rep = f_toeplitz_check(PHI_EXP, FunctionSpec.exp(), [5, 10, 20])
    assert rep.rows[-1].residual < 1e-6
    assert rep.extras["constant"].value == pytest.approx(np.exp(0.03), rel=1e-10)
    assert rep.extras["G"] == pytest.approx(1, abs=1e-14)


def test_f_toeplitz_identity_polynomial(sym_b):
    rep = f_toeplitz_check(sym_b, FunctionSpec.polynomial([0, 1]), range(1, 16))
    assert rep.passed
    for row in rep.rows:
        assert np.exp(row.lhs) == pytest.approx(d_n(row.n), rel=1e-12)


# -- reports -------------------------------------------------------------------

def _report(residuals, tag=TheoremTag.BOCG, tol=1e-8):
    rows = [Row(i + 1, 0j, 0j, r) for i, r in enumerate(residuals)]
    return IdentityReport(tag, rows, {}, tol)


def test_report_pass_rules():
    assert _report([1e-9, 1e-9]).passed
    assert not _report([1e-9, 1e-7]).passed
    # asymptotic tags look at the last row only
    assert _report([1e-2, 1e-9], tag=TheoremTag.SZEGO_WIDOM).passed
    assert not _report([]).passed


def test_report_flatness():
    assert _report([1e-10, 2e-10, 1.5e-10]).is_flat()
    assert not _report([1e-10, 1e-10, 1e-9]).is_flat()
    # rounding-level values count as the noise floor
    assert _report([1e-17, 0.0, 2e-14, 5e-16]).is_flat()


def test_report_serialization_is_reproducible(sym_b):
    a = bocg_check(sym_b, range(1, 6))
    b = bocg_check(sym_b, range(1, 6))
    dump = lambda r: json.dumps(r.to_dict(), sort_keys=True)
    assert dump(a) == dump(b)
    d = a.to_dict()
    assert d["theorem_tag"] == "BOCG" and d["pass"] and d["flat"]
    assert len(a.csv_rows()[0]) == 6


def test_symbol_fingerprint(sym_b, sym_c):
    assert symbol_fingerprint(sym_b) == symbol_fingerprint(fixture_b())
    assert symbol_fingerprint(sym_b) != symbol_fingerprint(sym_c)
    assert len(symbol_fingerprint(sym_b)) == 12
