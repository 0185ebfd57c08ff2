"""Subcommand dispatch and report rendering for momentgap"""

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .errors import MomentGapError, ParameterError
from .expsums import (
    DIAGNOSTIC_COLUMNS,
    MAX_DIAGNOSTIC_M,
    ExpSumSet,
    bourgain_diagnostics,
    expsum_row,
    moment_table,
    random_set,
    squares_set,
)
from .hypercube import (
    DELTA_WINDOW,
    REMARK_CONJECTURE,
    REMARK_WINDOW,
    CubeFunction,
    delta_integral,
    poincare_report,
    remark_integral,
)
from .models import RunConfig
from .rademacher import (
    EXACT_MAX_TERMS,
    BiasedSumSpec,
    exact_sum_distribution,
    stone_empirical_sup,
    stone_rhs,
    summarize,
)
from .rv_core import FiniteRV
from .sharp_constant import DEFAULT_TOL, c_lower_bound, compute_c
from .verify import verify_report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2

C46_WINDOW = 1e-6
EXPSUM_DEFAULT_TOL = 1e-6
TREND_GRID = (2, 5, 10, 20, 50, 100, 200, 500)
MAX_LISTED_ATOMS = 64


@dataclass
class CommandResult:
    """Report of one subcommand.

    Attributes:
        report: JSON-ready report
        exit_code: 0 on success, 1 on failed checks or numerical failure, 2 on bad input
        rows: Tabular part of the report, rendered by the csv format
        columns: Column order for rows
    """
    report: Dict[str, Any]
    exit_code: int = EXIT_OK
    rows: List[Dict[str, Any]] = field(default_factory=list)
    columns: Sequence[str] = ()


def _read_json(path: str, what: str) -> Any:
    try:
        with open(path, "r") as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise ParameterError(f"{what} file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ParameterError(f"invalid {what} file {path}: {e}") from e


def run_constant(p: float, q: float, tol: Optional[float] = None) -> CommandResult:
    """C(p, q) with its minimizer, lower bound and solver diagnostics."""
    result = compute_c(p, q, DEFAULT_TOL if tol is None else tol)
    report = result.to_dict()
    report["diagnostics"] = result.diagnostics()
    return CommandResult(report)


def _window_entry(name: str, value: float, low: float, high: float, **extra: Any) -> Dict[str, Any]:
    in_window = low <= value <= high
    if not in_window:
        logger.warning(f"{name} = {value!r} outside [{low}, {high}]")
    return {"name": name, "value": value, "window": [low, high], "in_window": in_window, **extra}


def run_reproduce() -> CommandResult:
    """Headline numbers, each checked against its tolerance window.

    Every value is computed and reported even when an earlier one misses.
    """
    entries: List[Dict[str, Any]] = []

    c46 = compute_c(4.0, 6.0)
    entries.append(_window_entry("C(4,6)", c46.c_value, 1.0 / 3.0 - C46_WINDOW, 1.0 / 3.0 + C46_WINDOW,
                                 argmin=[c46.a_star, c46.c_star]))
    lower = c_lower_bound(4.0, 6.0)
    entries.append(_window_entry("lower_bound(4,6)", lower, 1.0 / 256.0 - 1e-15, 1.0 / 256.0 + 1e-15))

    delta = delta_integral()
    entries.append(_window_entry("delta", delta.value, *DELTA_WINDOW, est_error=delta.est_error))

    remark = remark_integral()
    verbatim = remark_integral(reading="verbatim")
    entries.append(_window_entry("remark", remark.value, *REMARK_WINDOW, est_error=remark.est_error,
                                 reading="regrouped", conjecture=REMARK_CONJECTURE,
                                 verbatim_value=verbatim.value))

    ramon1 = delta_integral(bound="ramon1")
    stone_verbatim = stone_rhs(0.5, "verbatim")
    sup, sup_k = stone_empirical_sup(0.5)
    informational = [
        {"name": "delta_ramon1", "value": ramon1.value, "est_error": ramon1.est_error},
        {
            "name": "stone_anomaly",
            "bias": 0.5,
            "verbatim": stone_verbatim,
            "regrouped": stone_rhs(0.5, "regrouped"),
            "indicator_sup": sup,
            "indicator_sup_k": sup_k,
            "flagged": stone_verbatim > 1.0,
        },
    ]

    passed = all(e["in_window"] for e in entries)
    report = {"passed": passed, "checks": entries, "informational": informational}
    return CommandResult(report, EXIT_OK if passed else EXIT_FAILED, rows=entries,
                         columns=("name", "value", "window", "in_window"))


def run_verify(seed: int, samples: int, inject_c: Optional[float] = None,
               rv: Optional[FiniteRV] = None) -> CommandResult:
    """Randomized invariant suites; nonzero exit when any check fails."""
    report = verify_report(seed, samples, inject_c, rv)
    rows = [{k: v for k, v in check.items() if k != "failures"} for check in report["checks"]]
    return CommandResult(report, EXIT_OK if report["passed"] else EXIT_FAILED, rows=rows,
                         columns=("name", "count", "max_violation", "passed"))


def run_rademacher(spec: BiasedSumSpec) -> CommandResult:
    """Distribution summary, moments and the bias bounds side by side."""
    rv = exact_sum_distribution(spec) if spec.n <= EXACT_MAX_TERMS else None
    report = {"spec": spec.to_dict(), **summarize(spec, rv)}
    report["stone_rhs"] = {
        "verbatim": stone_rhs(spec.bias, "verbatim"),
        "regrouped": stone_rhs(spec.bias, "regrouped"),
    }
    if rv is not None and len(rv) <= MAX_LISTED_ATOMS:
        report["distribution"] = rv.to_json()
    return CommandResult(report)


def run_poincare(f: CubeFunction) -> CommandResult:
    """E|f - Ef| against (pi/2 - delta) E|grad f| for one table."""
    report = poincare_report(f)
    return CommandResult(report, EXIT_OK if report["holds"] else EXIT_FAILED)


def build_set(kind: str, m: int, elements: Optional[Sequence[int]] = None, seed: int = 42) -> ExpSumSet:
    """squares: {1, ..., m^2}; list: the given elements; random: m integers from [0, m^2]."""
    if kind == "squares":
        return squares_set(m)
    if kind == "list":
        if not elements:
            raise ParameterError("--set list requires --elements")
        return ExpSumSet.from_elements(elements)
    if kind == "random":
        return random_set(np.random.default_rng(seed), m, m * m)
    raise ParameterError(f"unknown set kind {kind!r}")


def run_expsum(kind: str, m: int, elements: Optional[Sequence[int]] = None, p: float = 4.0,
               q: float = 6.0, n_power: float = 2.0, tol: Optional[float] = None,
               seed: int = 42) -> CommandResult:
    """Theorem bound against the quadrature L1 norm, plus the squares trend table."""
    tol = EXPSUM_DEFAULT_TOL if tol is None else tol
    C = 1.0 / 3.0 if (p, q) == (4.0, 6.0) else compute_c(p, q).c_value

    if kind == "squares" and m <= MAX_DIAGNOSTIC_M:
        grid = [x for x in TREND_GRID if x < m] + [m]
        rows = bourgain_diagnostics(grid, n_power, tol) if (p, q) == (4.0, 6.0) else [
            expsum_row(squares_set(x), p, q, C, n_power, tol, m=x) for x in grid
        ]
        S = squares_set(m)
    else:
        S = build_set(kind, m, elements, seed)
        rows = [expsum_row(S, p, q, C, n_power, tol)]

    violated = [row for row in rows if row["gap"] < -tol]
    report = {
        "set": kind,
        "size": S.size,
        "span": S.span,
        "p": p,
        "q": q,
        "C": C,
        "n_power": n_power,
        "tol": tol,
        "bound_holds": not violated,
        "moments": moment_table(S, (1.0, 4.0), tol).to_dict(),
        "rows": rows,
    }
    return CommandResult(report, EXIT_FAILED if violated else EXIT_OK, rows=rows,
                         columns=DIAGNOSTIC_COLUMNS)


class CommandRunner:
    """Routes a RunConfig to its subcommand handler.

    Input errors become a report with an ``error`` entry and exit code 2;
    numerical failures keep their diagnostics and exit with 1.
    """

    HANDLERS = {
        "constant": "_handle_constant",
        "verify": "_handle_verify",
        "rademacher": "_handle_rademacher",
        "poincare": "_handle_poincare",
        "expsum": "_handle_expsum",
        "reproduce": "_handle_reproduce",
    }

    def __init__(self, config: RunConfig):
        """Initialize the runner.

        Args:
            config: Validated run configuration
        """
        self.config = config

    def route(self) -> CommandResult:
        """Run the configured subcommand.

        Returns:
            CommandResult; never raises for MomentGapError
        """
        subcommand = self.config.subcommand
        try:
            self.config.validate()
            handler: Callable[[], CommandResult] = getattr(self, self.HANDLERS[subcommand])
            logger.info(f"Running {subcommand}")
            return handler()
        except MomentGapError as e:
            code = EXIT_INPUT if isinstance(e, ValueError) else EXIT_FAILED
            logger.error(f"{subcommand} failed: {e}")
            report: Dict[str, Any] = {
                "subcommand": subcommand,
                "error": {"type": type(e).__name__, "message": str(e)},
            }
            diagnostics = getattr(e, "diagnostics", None)
            if diagnostics:
                report["error"]["diagnostics"] = diagnostics
            return CommandResult(report, code)

    def _handle_constant(self) -> CommandResult:
        return run_constant(self.config.p, self.config.q, self.config.tol)

    def _handle_reproduce(self) -> CommandResult:
        return run_reproduce()

    def _handle_verify(self) -> CommandResult:
        rv = None
        if self.config.rv_path:
            rv = FiniteRV.from_json(_read_json(self.config.rv_path, "random variable"))
        return run_verify(self.config.seed, self.config.samples, self.config.inject_c, rv)

    def _handle_rademacher(self) -> CommandResult:
        if self.config.spec_path:
            spec = BiasedSumSpec.from_dict(_read_json(self.config.spec_path, "spec"))
        elif self.config.coeffs:
            spec = BiasedSumSpec.create(self.config.bias, self.config.coeffs, self.config.normalize)
        else:
            raise ParameterError("rademacher requires --coeffs or --spec")
        return run_rademacher(spec)

    def _handle_poincare(self) -> CommandResult:
        if not self.config.table_path:
            raise ParameterError("poincare requires --table")
        return run_poincare(CubeFunction.from_json(_read_json(self.config.table_path, "table")))

    def _handle_expsum(self) -> CommandResult:
        c = self.config
        return run_expsum(c.set, c.m, c.elements, c.p, c.q, c.n_power, c.tol, c.seed)


def _text_lines(value: Any, indent: int = 0) -> List[str]:
    pad = "  " * indent
    if isinstance(value, dict):
        lines = []
        for k, v in value.items():
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.extend(_text_lines(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
        return lines
    if isinstance(value, list):
        lines = []
        for item in value:
            if isinstance(item, (dict, list)):
                lines.append(f"{pad}-")
                lines.extend(_text_lines(item, indent + 1))
            else:
                lines.append(f"{pad}- {_scalar(item)}")
        return lines
    return [f"{pad}{_scalar(value)}"]


def _scalar(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.12g}" if math.isfinite(value) else str(value)
    if isinstance(value, (list, dict)):
        return json.dumps(value)
    return str(value)


def render(result: CommandResult, fmt: str) -> str:
    """Render a result as json, csv or text; identical inputs give identical bytes."""
    if fmt == "json":
        return json.dumps(result.report, indent=2) + "\n"
    if fmt == "text":
        return "\n".join(_text_lines(result.report)) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        if result.rows:
            columns = list(result.columns) or list(result.rows[0])
            writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
            writer.writeheader()
            for row in result.rows:
                writer.writerow({k: _scalar(row.get(k)) if isinstance(row.get(k), (list, dict)) else row.get(k)
                                 for k in columns})
        else:
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(("key", "value"))
            for k, v in result.report.items():
                writer.writerow((k, _scalar(v)))
        return buf.getvalue()
    raise ParameterError(f"unknown format {fmt!r}")
