"""Symbol specification files and report writers."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from .symbols import DEFAULT_TAIL_TOL, BlockSymbol, exp_symbol, invert_symbol, product

CSV_COLUMNS = ["n", "lhs_log_re", "lhs_log_im", "rhs_log_re", "rhs_log_im", "residual"]


class SymbolSpecError(ValueError):
    pass


def _cell(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise SymbolSpecError(f"complex cell must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)):
        return complex(value)
    raise SymbolSpecError(f"cannot read matrix entry {value!r}")


def symbol_from_spec(spec: Any) -> BlockSymbol:
    """Parse a coefficient spec or a derived-symbol builder spec."""
    if not isinstance(spec, dict):
        raise SymbolSpecError("symbol spec must be a JSON object")
    kind = spec.get("kind")
    if kind is not None:
        of = spec.get("of")
        if of is None:
            raise SymbolSpecError(f"builder {kind!r} needs an 'of' field")
        if kind == "exp":
            return exp_symbol(symbol_from_spec(of))
        if kind == "inverse":
            return invert_symbol(symbol_from_spec(of))
        if kind == "product":
            if not isinstance(of, list) or not of:
                raise SymbolSpecError("product builder needs a nonempty list in 'of'")
            return product(symbol_from_spec(s) for s in of)
        raise SymbolSpecError(f"unknown builder kind {kind!r}")
    try:
        n = int(spec["block_size"])
        entries = spec["coefficients"]
    except KeyError as exc:
        raise SymbolSpecError(f"missing field {exc}") from None
    if n < 1:
        raise SymbolSpecError("block_size must be positive")
    tail_tol = float(spec.get("tail_tol", DEFAULT_TAIL_TOL))
    coeffs = {}
    for entry in entries:
        k = int(entry["k"])
        mat = np.array([[_cell(c) for c in row] for row in entry["matrix"]], dtype=complex)
        if mat.shape != (n, n):
            raise SymbolSpecError(f"coefficient k={k} has shape {mat.shape}, expected {(n, n)}")
        if k in coeffs:
            raise SymbolSpecError(f"duplicate coefficient k={k}")
        coeffs[k] = mat
    return BlockSymbol.from_coeffs(coeffs, block_size=n, tail_tol=tail_tol)


def symbol_to_spec(sym: BlockSymbol, role: str | None = None) -> dict:
    out: dict = {
        "block_size": sym.block_size,
        "coefficients": [
            {"k": k, "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in mat]}
            for k, mat in sym.coeffs.items()
        ],
        "tail_tol": sym.tail_tol,
    }
    if role is not None:
        out["role"] = role
    return out


def factorization_to_spec(fac) -> dict:
    return {
        "side": fac.side,
        "residual": fac.residual,
        "factors": [symbol_to_spec(fac.minus_factor, role="minus"),
                    symbol_to_spec(fac.plus_factor, role="plus")],
    }


def load_symbol(path) -> BlockSymbol:
    with open(path, encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SymbolSpecError(f"{path}: invalid JSON ({exc})") from None
    return symbol_from_spec(spec)


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def rows_to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()
