"""Command-line front end: determinant sweeps and identity checks with CSV/JSON reports.

Exit status: 0 when the report passes, 1 when it was computed but fails its
tolerance, 2 on bad input, 3 when a numerical stage does not converge.
"""

from __future__ import annotations

import argparse
import cmath
import datetime as _dt
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .determinants import logdet_dense
from .errors import NotBanded, NumericalFailure, SzegoLabError
from .identities import (
    IdentityReport,
    banded_e_check,
    bef_even_check,
    bocg_check,
    f_toeplitz_check,
    symbol_fingerprint,
    szego_widom_fit,
    th_noneven_check,
)
from .io import CSV_COLUMNS, SymbolSpecError, atomic_write_text, dumps_json, load_symbol, rows_to_csv
from .operators import FunctionSpec, MVariant, toeplitz_finite
from .symbols import is_even

logger = logging.getLogger(__name__)

COMMANDS = ("det-seq", "szego-fit", "bocg", "banded-e", "th", "ftoeplitz")
EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(SzegoLabError):
    exit_status = EXIT_INPUT


@dataclass
class RunConfig:
    command: str
    symbol_path: Path
    n_min: int
    n_max: int
    tol: float = 1e-8
    m0: int = 32
    variant: MVariant | None = None
    function: FunctionSpec | None = None
    output_dir: Path = field(default_factory=lambda: Path("."))
    format: str = "csv"

    @property
    def n_range(self) -> range:
        return range(self.n_min, self.n_max + 1)


def parse_n_range(text: str) -> tuple[int, int]:
    parts = text.split("..")
    try:
        if len(parts) == 1:
            lo = hi = int(parts[0])
        elif len(parts) == 2:
            lo, hi = int(parts[0]), int(parts[1])
        else:
            raise ValueError
    except ValueError:
        raise UsageError(f"bad n range {text!r}; expected a..b") from None
    if lo < 1 or lo > hi:
        raise UsageError(f"n range {text!r} must satisfy 1 <= a <= b")
    return lo, hi


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="szegolab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--symbol", required=True, help="symbol specification (JSON)")
        p.add_argument("--n", required=True, help="inclusive range a..b")
        p.add_argument("--tol", type=float, default=1e-8)
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if name == "th":
            p.add_argument("--variant", required=True, choices=[v.value for v in MVariant])
        if name == "ftoeplitz":
            p.add_argument("--function", default="exp", help="exp or poly:c0,c1,...")
    return parser


def parse_args(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    n_min, n_max = parse_n_range(ns.n)
    if not ns.tol > 0:
        raise UsageError("--tol must be positive")
    path = Path(ns.symbol)
    if not path.is_file():
        raise UsageError(f"symbol file {path} not found")
    function = None
    if ns.command == "ftoeplitz":
        try:
            function = FunctionSpec.parse(ns.function)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    variant = MVariant.parse(ns.variant) if ns.command == "th" else None
    if ns.verbose:
        logging.basicConfig(level=logging.INFO)
    return RunConfig(ns.command, path, n_min, n_max, ns.tol, variant=variant, function=function,
                     output_dir=Path(ns.out), format=ns.format)


def _base_name(config: RunConfig, tag: str, fingerprint: str) -> str:
    suffix = f"-{config.variant.value}" if config.variant is not None else ""
    return f"{tag.lower()}{suffix}_{fingerprint}"


def _config_echo(config: RunConfig) -> dict:
    return {
        "command": config.command,
        "symbol": config.symbol_path.name,
        "n": [config.n_min, config.n_max],
        "tol": config.tol,
        "variant": config.variant.value if config.variant else None,
        "function": str(config.function) if config.function else None,
    }


def _write(config: RunConfig, name: str, payload: dict, header: list[str], rows: list[list]) -> Path:
    out = config.output_dir / f"{name}.{config.format}"
    if config.format == "json":
        stamp = _dt.datetime.now(_dt.timezone.utc).isoformat()
        atomic_write_text(out, dumps_json({"payload": payload, "sidecar": {"created_utc": stamp}}))
    else:
        atomic_write_text(out, rows_to_csv(header, rows))
    return out


def _write_report(config: RunConfig, report: IdentityReport, fingerprint: str) -> Path:
    payload = {"config": _config_echo(config), "report": report.to_dict()}
    return _write(config, _base_name(config, report.theorem_tag.value, fingerprint),
                  payload, CSV_COLUMNS, report.csv_rows())


def _write_failure(config: RunConfig, exc: Exception, fingerprint: str) -> Path:
    failure = {"stage": getattr(exc, "stage", None) or type(exc).__name__,
               "error": type(exc).__name__, "message": str(exc)}
    payload = {"config": _config_echo(config), "report": {"pass": False, "failure": failure}}
    out = config.output_dir / f"{_base_name(config, config.command, fingerprint)}_failure.json"
    atomic_write_text(out, dumps_json({"payload": payload}))
    return out


def _det_seq(config: RunConfig, sym, fingerprint: str) -> int:
    rows = []
    for n in config.n_range:
        log_d = logdet_dense(toeplitz_finite(sym, n))
        d = complex(cmath.exp(log_d))
        rows.append([n, log_d.real, log_d.imag, d.real, d.imag])
    header = ["n", "log_det_re", "log_det_im", "det_re", "det_im"]
    payload = {"config": _config_echo(config), "rows": rows}
    path = _write(config, _base_name(config, "det_seq", fingerprint), payload, header, rows)
    print(f"det-seq: {len(rows)} rows -> {path}")
    return EXIT_PASS


def _dispatch(config: RunConfig, sym) -> IdentityReport:
    cmd = config.command
    if cmd == "szego-fit":
        return szego_widom_fit(sym, config.n_range, config.tol)[2]
    if cmd == "bocg":
        return bocg_check(sym, config.n_range, config.tol, m0=config.m0)
    if cmd == "banded-e":
        return banded_e_check(sym, config.n_range, config.tol)
    if cmd == "th":
        check = bef_even_check if is_even(sym) else th_noneven_check
        return check(sym, config.variant, config.n_range, config.tol, m0=config.m0)
    if cmd == "ftoeplitz":
        return f_toeplitz_check(sym, config.function or FunctionSpec.exp(), config.n_range,
                                config.tol, m0=config.m0)
    raise UsageError(f"unknown command {cmd!r}")


def run(config: RunConfig) -> int:
    try:
        sym = load_symbol(config.symbol_path)
    except (SymbolSpecError, SzegoLabError, OSError, ValueError) as exc:
        print(f"szegolab: bad symbol file: {exc}", file=sys.stderr)
        return EXIT_INPUT
    fingerprint = symbol_fingerprint(sym)
    if config.command == "det-seq":
        return _det_seq(config, sym, fingerprint)
    try:
        report = _dispatch(config, sym)
    except NotBanded:
        print("szegolab: symbol not banded", file=sys.stderr)
        return EXIT_INPUT
    except NumericalFailure as exc:
        path = _write_failure(config, exc, fingerprint)
        print(f"szegolab: {exc} (stage: {exc.stage}); see {path}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SzegoLabError, ValueError) as exc:
        print(f"szegolab: {exc}", file=sys.stderr)
        return EXIT_INPUT
    path = _write_report(config, report, fingerprint)
    if report.failure is not None:
        print(f"szegolab: stage {report.failure['stage']} failed; see {path}", file=sys.stderr)
        return EXIT_NUMERIC
    status = "pass" if report.passed else "FAIL"
    print(f"{report.theorem_tag.value}: {status} (max residual {report.residuals.max():.3g}) -> {path}")
    return EXIT_PASS if report.passed else EXIT_FAIL


def main(argv=None) -> int:
    try:
        config = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"szegolab: usage error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
