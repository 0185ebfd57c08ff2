"""Core data models for momentgap"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

from .errors import ParameterError


@dataclass(frozen=True)
class GapReport:
    """Evaluation of the refined inequality on one random variable.

    Attributes:
        l1: ||X||_1
        lp_p: E X^p
        lq_q: E X^q
        rhs: Upper bound for ||X||_1 given by the refined inequality
        gap: rhs - l1 (nonnegative whenever the inequality holds)
        degenerate: True when E X^q - 1 vanished and rhs was set to 1
        p: Lower exponent
        q: Upper exponent
        constant: Constant C used in the bound
        term: Moment term (E X^p - 1)^theta / (E X^q - 1)^(theta - 1)
    """
    l1: float
    lp_p: float
    lq_q: float
    rhs: float
    gap: float
    degenerate: bool
    p: float = 0.0
    q: float = 0.0
    constant: float = 0.0
    term: float = 0.0

    @property
    def holds(self) -> bool:
        """Whether the inequality holds up to 1e-12."""
        return self.gap >= -1e-12

    @property
    def effective_constant(self) -> float:
        """Largest constant this variable tolerates.

        (||X||_2 - ||X||_1) / term, where ||X||_2 = rhs + C * term. For a
        normalized two-point variable this equals the objective at (a, 1/b).
        """
        if self.degenerate or self.term <= 0.0:
            return math.inf
        return (self.rhs + self.constant * self.term - self.l1) / self.term

    def recomputed_gap(self) -> float:
        """Recompute the gap from the stored fields."""
        return self.rhs - self.l1

    def to_dict(self) -> Dict[str, Any]:
        """Convert report to dictionary format for JSON serialization."""
        return {
            "p": self.p,
            "q": self.q,
            "C": self.constant,
            "l1": self.l1,
            "lp_p": self.lp_p,
            "lq_q": self.lq_q,
            "rhs": self.rhs,
            "gap": self.gap,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class SharpConstantResult:
    """Computed value of C(p, q).

    Attributes:
        p: Lower exponent
        q: Upper exponent
        c_value: Computed infimum
        argmin: Minimizing (a*, c*), possibly on the boundary of the square
        iterations: Objective evaluations spent in local refinement
        achieved_tol: Estimated distance of c_value from the local infimum
        lower_bound: Closed-form lower bound for C(p, q)
        tol: Requested tolerance
        candidate: Which candidate won ("interior", "edge a=1", ...)
    """
    p: float
    q: float
    c_value: float
    argmin: Tuple[float, float]
    iterations: int
    achieved_tol: float
    lower_bound: float
    tol: float
    candidate: str = "interior"

    @property
    def a_star(self) -> float:
        return self.argmin[0]

    @property
    def c_star(self) -> float:
        return self.argmin[1]

    @property
    def on_boundary(self) -> bool:
        return self.candidate != "interior"

    def to_dict(self) -> Dict[str, Any]:
        """Convert result to dictionary format for JSON serialization."""
        return {
            "p": self.p,
            "q": self.q,
            "C": self.c_value,
            "a_star": self.a_star,
            "c_star": self.c_star,
            "lower_bound": self.lower_bound,
            "tol": self.tol,
        }

    def diagnostics(self) -> Dict[str, Any]:
        """Solver diagnostics that are not part of the serialized result."""
        return {
            "iterations": self.iterations,
            "achieved_tol": self.achieved_tol,
            "candidate": self.candidate,
        }


@dataclass(frozen=True)
class TorsionReport:
    """Leading principal minors of the derivative matrix of the moment curve.

    Attributes:
        t: Curve parameter in (0, 1)
        p: Lower exponent
        q: Upper exponent
        minors: Numeric determinants of the leading 1x1..4x4 blocks
        closed_forms: Closed-form values of the same minors
        max_rel_err: Largest relative disagreement between the two
        displayed_a22: The 2x2 closed form as usually displayed, t^(p-1) 2p(p-1)
    """
    t: float
    p: float
    q: float
    minors: Tuple[float, float, float, float]
    closed_forms: Tuple[float, float, float, float]
    max_rel_err: float
    displayed_a22: float = 0.0

    @property
    def all_positive(self) -> bool:
        return all(m > 0.0 for m in self.minors)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t": self.t,
            "p": self.p,
            "q": self.q,
            "minors": list(self.minors),
            "closed_forms": list(self.closed_forms),
            "max_rel_err": self.max_rel_err,
            "displayed_a22": self.displayed_a22,
        }


@dataclass(frozen=True)
class QuadratureResult:
    """Result of a one-dimensional quadrature.

    Attributes:
        value: Integral (or derived quantity)
        est_error: Estimated absolute error
        subdivisions: Number of subintervals used
        breakpoints: Interior breakpoints, in the original p variable
        label: Which integral or reading was computed
    """
    value: float
    est_error: float
    subdivisions: int
    breakpoints: Tuple[float, ...] = ()
    label: str = ""

    def to_dict(self, max_breakpoints: int = 10) -> Dict[str, Any]:
        return {
            "label": self.label,
            "value": self.value,
            "est_error": self.est_error,
            "subdivisions": self.subdivisions,
            "breakpoint_count": len(self.breakpoints),
            "breakpoints": list(self.breakpoints[:max_breakpoints]),
        }


@dataclass
class CheckResult:
    """Outcome of one randomized invariant check.

    Attributes:
        name: Check name, prefixed with its module
        count: Number of individual checks performed
        max_violation: Largest amount by which a check was violated (<= 0 when all hold)
        failures: Serialized witnesses for the first failing cases
    """
    name: str
    count: int = 0
    max_violation: float = -math.inf
    failures: List[Dict[str, Any]] = field(default_factory=list)

    MAX_WITNESSES = 5

    @property
    def passed(self) -> bool:
        return not self.failures

    def record(self, violation: float, witness: Optional[Dict[str, Any]] = None) -> None:
        """Record one check; positive violation means failure."""
        self.count += 1
        if violation > self.max_violation:
            self.max_violation = violation
        if violation > 0.0 and len(self.failures) < self.MAX_WITNESSES:
            self.failures.append({"violation": violation, **(witness or {})})

    def record_many(self, violations, witness: Callable[[int], Dict[str, Any]]) -> None:
        """Record a batch; ``witness(i)`` is only called for failing entries."""
        violations = [float(v) for v in violations]
        if not violations:
            return
        self.count += len(violations)
        self.max_violation = max(self.max_violation, max(violations))
        for i, v in enumerate(violations):
            if v > 0.0 and len(self.failures) < self.MAX_WITNESSES:
                self.failures.append({"violation": v, **witness(i)})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "count": self.count,
            "max_violation": self.max_violation if self.count else None,
            "passed": self.passed,
            "failures": self.failures,
        }


SUBCOMMANDS = ("constant", "verify", "rademacher", "poincare", "expsum", "reproduce")
FORMATS = ("json", "csv", "text")
SET_KINDS = ("squares", "list", "random")


@dataclass
class RunConfig:
    """Configuration for one CLI run.

    Attributes:
        subcommand: One of SUBCOMMANDS
        p: Lower exponent
        q: Upper exponent
        tol: Tolerance override (None: each module's default)
        seed: Seed for every randomized sweep
        samples: Base sample count for verify
        m: Number of squares for expsum
        set: Set kind for expsum ("squares", "list" or "random")
        elements: Explicit set for ``--set list``
        format: Output format
        output: Output path (None: stdout)
        bias: Bias for rademacher
        coeffs: Coefficients for rademacher
        normalize: Rescale coefficients to unit norm
        spec_path: JSON file with a {bias, coeffs, normalize} spec
        table_path: JSON file with a {n, values} cube function
        rv_path: JSON file with a [{value, prob}, ...] random variable
        inject_c: Constant to test in verify instead of C(4,6) = 1/3
        n_power: Corollary exponent N for the expsum trend column
    """
    subcommand: str = "reproduce"
    p: float = 4.0
    q: float = 6.0
    tol: Optional[float] = None
    seed: int = 42
    samples: int = 10000
    m: int = 10
    set: str = "squares"
    elements: Optional[List[int]] = None
    format: str = "json"
    output: Optional[str] = None
    bias: float = 0.75
    coeffs: Optional[List[float]] = None
    normalize: bool = True
    spec_path: Optional[str] = None
    table_path: Optional[str] = None
    rv_path: Optional[str] = None
    inject_c: Optional[float] = None
    n_power: float = 2.0

    def validate(self) -> None:
        """Validate configuration values.

        Raises:
            ParameterError: If configuration is invalid
        """
        if self.subcommand not in SUBCOMMANDS:
            raise ParameterError(f"subcommand must be one of {', '.join(SUBCOMMANDS)}")
        if self.format not in FORMATS:
            raise ParameterError(f"format must be one of {', '.join(FORMATS)}")
        if self.set not in SET_KINDS:
            raise ParameterError(f"set must be one of {', '.join(SET_KINDS)}")
        try:
            self._validate_numbers()
        except TypeError as e:
            # Config files may carry strings where numbers belong
            raise ParameterError(f"invalid configuration value: {e}") from e

    def _validate_numbers(self) -> None:
        if not (math.isfinite(self.p) and math.isfinite(self.q)):
            raise ParameterError("p and q must be finite")
        if self.tol is not None and not (self.tol > 0 and math.isfinite(self.tol)):
            raise ParameterError("tol must be a positive finite number")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")
        if self.samples < 1:
            raise ParameterError("samples must be at least 1")
        if self.m < 2:
            raise ParameterError("m must be at least 2")
        if self.set == "list" and not self.elements:
            raise ParameterError("--set list requires --elements")
        if self.inject_c is not None and not self.inject_c > 0:
            raise ParameterError("inject_c must be positive")
