"""Biased Rademacher sums: exact distributions, moments and L1 bounds"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import binom

from .errors import CapacityError, NormalizationError, ParameterError
from .rv_core import MERGE_RTOL, FiniteRV, merge_atoms

logger = logging.getLogger(__name__)

EXACT_MAX_TERMS = 24
KHINCHIN_MAX_TERMS = 20
UNIT_NORM_TOL = 1e-12
STONE_READINGS = ("verbatim", "regrouped")


def _check_bias(p: float, closed: bool = False) -> None:
    ok = (0.0 <= p <= 1.0) if closed else (0.0 < p < 1.0)
    if not (math.isfinite(p) and ok):
        interval = "[0, 1]" if closed else "(0, 1)"
        raise ParameterError(f"bias must lie in {interval}, got {p!r}")


@dataclass(frozen=True, eq=False)
class SignedRV:
    """Finite-support random variable that keeps the sign of its values."""
    values: np.ndarray
    probs: np.ndarray

    def moment(self, k: float) -> float:
        """E xi^k (signed for integer k)."""
        return float(np.dot(self.probs, np.power(self.values, k)))

    @property
    def atoms(self):
        return list(zip(self.values.tolist(), self.probs.tolist()))

    def abs(self) -> FiniteRV:
        return FiniteRV(self.values, self.probs)


def biased_xi(p: float) -> SignedRV:
    """Mean-zero unit-variance variable: sqrt((1-p)/p) w.p. p, -sqrt(p/(1-p)) w.p. 1-p."""
    _check_bias(p)
    values = np.array([math.sqrt((1.0 - p) / p), -math.sqrt(p / (1.0 - p))])
    probs = np.array([p, 1.0 - p])
    return SignedRV(values, probs)


def xi_fourth_moment(p: float) -> float:
    """E xi^4 = 1 / (p(1-p)) - 3."""
    _check_bias(p)
    return 1.0 / (p * (1.0 - p)) - 3.0


@dataclass(frozen=True)
class BiasedSumSpec:
    """Weighted sum sum_j a_j xi_j of i.i.d. biased variables.

    Attributes:
        bias: Bias p of every xi_j
        coeffs: Coefficients a_1..a_n with sum a_j^2 = 1
    """
    bias: float
    coeffs: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        _check_bias(self.bias)
        if not self.coeffs:
            raise ParameterError("at least one coefficient is required")
        if not all(math.isfinite(a) for a in self.coeffs):
            raise ParameterError("coefficients must be finite")
        norm2 = math.fsum(a * a for a in self.coeffs)
        if abs(norm2 - 1.0) > UNIT_NORM_TOL:
            raise NormalizationError(f"sum of squared coefficients is {norm2!r}, expected 1")

    @classmethod
    def create(cls, bias: float, coeffs: Iterable[float], normalize: bool = True) -> "BiasedSumSpec":
        """Build a spec, optionally rescaling the coefficients to unit norm.

        Raises:
            ParameterError: If the bias is out of range or all coefficients vanish
            NormalizationError: If normalize is False and the coefficients are not unit norm
        """
        values = [float(a) for a in coeffs]
        if normalize:
            norm = math.sqrt(math.fsum(a * a for a in values))
            if norm == 0.0 or not math.isfinite(norm):
                raise ParameterError("coefficients must not all vanish")
            values = [a / norm for a in values]
        return cls(bias=float(bias), coeffs=tuple(values))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BiasedSumSpec":
        """Parse ``{"bias": p, "coeffs": [...], "normalize": bool}``."""
        try:
            return cls.create(data["bias"], data["coeffs"], bool(data.get("normalize", True)))
        except (KeyError, TypeError) as e:
            raise ParameterError(f"malformed spec: {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        return {"bias": self.bias, "coeffs": list(self.coeffs), "normalize": False}

    @property
    def n(self) -> int:
        return len(self.coeffs)

    @property
    def coeff_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)


def exact_sum_distribution(spec: BiasedSumSpec, merge_rtol: float = MERGE_RTOL) -> FiniteRV:
    """Exact law of |sum_j a_j xi_j| by iterated two-point convolution.

    Raises:
        CapacityError: If spec has more than 24 terms
    """
    if spec.n > EXACT_MAX_TERMS:
        raise CapacityError(
            f"exact mode supports at most {EXACT_MAX_TERMS} terms, got {spec.n}; "
            f"use fourth_moment / sixth_moment_bound instead"
        )
    xi = biased_xi(spec.bias)
    up, down = xi.values
    p = spec.bias

    values = np.zeros(1)
    probs = np.ones(1)
    for a in spec.coeffs:
        values = np.concatenate((values + a * up, values + a * down))
        probs = np.concatenate((probs * p, probs * (1.0 - p)))
        values, probs = merge_atoms(values, probs, merge_rtol)

    # Absorb float drift in the total before FiniteRV checks it
    probs = probs / probs.sum()
    rv = FiniteRV(values, probs, merge_rtol)
    logger.debug(f"Exact distribution of {spec.n}-term sum has {len(rv)} atoms")
    return rv


def fourth_moment(spec: BiasedSumSpec) -> float:
    """E|X|^4 = 3 + (E xi^4 - 3) sum_j a_j^4."""
    a = spec.coeff_array
    return 3.0 + (xi_fourth_moment(spec.bias) - 3.0) * float(np.sum(a ** 4))


def fourth_moment_lower_bound(p: float) -> float:
    """1 + min{2, (2p-1)^2 / (p(1-p))}, a lower bound for fourth_moment."""
    _check_bias(p)
    return 1.0 + min(2.0, (2.0 * p - 1.0) ** 2 / (p * (1.0 - p)))


def sixth_moment_bound(p: float) -> float:
    """15 / (p(1-p))^3."""
    _check_bias(p)
    return 15.0 / (p * (1.0 - p)) ** 3


def khinchin6_check(b: Sequence[float]) -> Tuple[float, float]:
    """Exact average of |sum eps_i b_i|^6 over all sign vectors, and 15 (sum b_i^2)^3.

    Raises:
        CapacityError: If more than 20 coefficients are given
    """
    coeffs = [float(x) for x in b]
    if len(coeffs) > KHINCHIN_MAX_TERMS:
        raise CapacityError(f"Khinchin enumeration supports at most {KHINCHIN_MAX_TERMS} terms, got {len(coeffs)}")
    sums = np.zeros(1)
    for x in coeffs:
        sums = np.concatenate((sums + x, sums - x))
    lhs = float(np.mean(sums ** 6))
    rhs = 15.0 * math.fsum(x * x for x in coeffs) ** 3
    return lhs, rhs


def _bias_min_term(p: float) -> float:
    m = p * (1.0 - p)
    return min(4.0 * m ** 3, (2.0 * p - 1.0) ** 4 * m)


def dax1_rhs(p: float) -> float:
    """1 - min{4m^3, (2p-1)^4 m} / (45 - 3m^3), m = p(1-p); equal to 1 at p in {0, 1/2, 1}."""
    _check_bias(p, closed=True)
    m = p * (1.0 - p)
    return 1.0 - _bias_min_term(p) / (45.0 - 3.0 * m ** 3)


def ramon1_rhs(p: float) -> float:
    """sqrt(1 - min{4m^3, (2p-1)^4 m} / 480), m = p(1-p)."""
    _check_bias(p, closed=True)
    return math.sqrt(1.0 - _bias_min_term(p) / 480.0)


def stone_n(s) -> np.ndarray:
    """N(s) = floor(1 / (1 - (1-s)^2)) for s in (0, 1)."""
    s = np.asarray(s, dtype=float)
    # Guard exact integers against rounding just below them
    return np.floor((1.0 / (s * (2.0 - s))) * (1.0 + 1e-12)).astype(np.int64)


def stone_piece(s, k, reading: str = "verbatim") -> np.ndarray:
    """Stone-type expression at p* = s with the jump index held at k.

    verbatim:  2 sqrt(k s) (1-s)^(k-1)
    regrouped: 2 sqrt(k s (1-s)) (1-s)^(k-1)
    """
    if reading not in STONE_READINGS:
        raise ParameterError(f"reading must be one of {', '.join(STONE_READINGS)}, got {reading!r}")
    s = np.asarray(s, dtype=float)
    k = np.asarray(k, dtype=float)
    inner = k * s if reading == "verbatim" else k * s * (1.0 - s)
    return 2.0 * np.sqrt(inner) * np.exp((k - 1.0) * np.log1p(-s))


def stone_rhs(p: float, reading: str = "verbatim") -> float:
    """2 sqrt(N(p*) p*) (1-p*)^(N(p*)-1) with p* = min(p, 1-p).

    The verbatim reading exceeds 1 near p = 1/2 although it bounds an
    L1/L2 ratio; a warning is logged when that happens.
    """
    _check_bias(p)
    s = min(p, 1.0 - p)
    value = float(stone_piece(s, stone_n(s), reading))
    if value > 1.0:
        logger.warning(f"stone_rhs({p:g}, {reading}) = {value:.6f} exceeds 1")
    return value


def indicator_ratio(p: float, k: int) -> float:
    """Exact ||sum_{j<=k} xi_j||_1 / sqrt(k) for k equal coefficients."""
    _check_bias(p)
    if k < 1:
        raise ParameterError(f"k must be at least 1, got {k}")
    up, down = biased_xi(p).values
    successes = np.arange(k + 1)
    pmf = binom.pmf(successes, k, p)
    totals = np.abs(successes * up + (k - successes) * down)
    return float(np.dot(pmf, totals)) / math.sqrt(k)


def stone_empirical_sup(p: float, k_max: int = 200) -> Tuple[float, int]:
    """Largest indicator_ratio(p, k) over k <= k_max, with the k attaining it."""
    best, best_k = -math.inf, 1
    for k in range(1, k_max + 1):
        value = indicator_ratio(p, k)
        if value > best:
            best, best_k = value, k
    return best, best_k


def summarize(spec: BiasedSumSpec, rv: Optional[FiniteRV] = None) -> Dict[str, Any]:
    """Side-by-side report of moments and bounds for one spec."""
    if rv is None and spec.n <= EXACT_MAX_TERMS:
        rv = exact_sum_distribution(spec)
    p = spec.bias
    report: Dict[str, Any] = {
        "bias": p,
        "n": spec.n,
        "fourth_moment": fourth_moment(spec),
        "fourth_moment_lower_bound": fourth_moment_lower_bound(p),
        "sixth_moment_bound": sixth_moment_bound(p),
        "dax1_rhs": dax1_rhs(p),
        "ramon1_rhs": ramon1_rhs(p),
    }
    if rv is not None:
        report.update({
            "atoms": len(rv),
            "l1": rv.moment(1.0),
            "l2_2": rv.moment(2.0),
            "exact_fourth_moment": rv.moment(4.0),
            "exact_sixth_moment": rv.moment(6.0),
        })
        report["dax1_holds"] = report["l1"] <= report["dax1_rhs"] + 1e-12
    return report
