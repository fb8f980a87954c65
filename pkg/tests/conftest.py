import json

import numpy as np
import pytest

from szegolab.io import symbol_to_spec
from szegolab.symbols import BlockSymbol, exp_symbol, multiply

R = 0.5


def fixture_b() -> BlockSymbol:
    """(1 - r z)(1 - r/z) with r = 0.5."""
    return BlockSymbol.scalar({-1: -R, 0: 1 + R * R, 1: -R})


def fixture_c() -> BlockSymbol:
    return exp_symbol(BlockSymbol.scalar({1: 0.3, -1: 0.2}))


def fixture_f() -> BlockSymbol:
    return exp_symbol(BlockSymbol.scalar({1: 0.4, -1: 0.4}))


def noneven() -> BlockSymbol:
    return multiply(BlockSymbol.scalar({0: 1, 1: -0.3}), BlockSymbol.scalar({0: 1, -1: -0.2}))


def block_fixture() -> BlockSymbol:
    return BlockSymbol.block_diag(fixture_b(), fixture_c())


def random_block_symbol(rng, n=2, width=1, scale=0.15) -> BlockSymbol:
    coeffs = {k: scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
              for k in range(-width, width + 1)}
    coeffs[0] = coeffs[0] + np.eye(n)
    return BlockSymbol.from_coeffs(coeffs, block_size=n)


@pytest.fixture
def sym_b():
    return fixture_b()


@pytest.fixture
def sym_c():
    return fixture_c()


@pytest.fixture
def sym_f():
    return fixture_f()


@pytest.fixture
def sym_noneven():
    return noneven()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def write_symbol(tmp_path):
    def _write(spec, name="sym.json"):
        if isinstance(spec, BlockSymbol):
            spec = symbol_to_spec(spec)
        path = tmp_path / name
        path.write_text(json.dumps(spec))
        return path
    return _write


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
