"""Exponential sums X_S = |S|^(-1/2) sum_{j in S} e^(2 pi i j theta)

Even moments come from exact additive-energy counts; other L^p norms
from a periodic trapezoid rule evaluated with blocked FFTs.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import CapacityError, ParameterError, QuadratureError
from .rv_core import DEGENERATE_TOL, moment_term, validate_exponents
from .workers import map_ordered

logger = logging.getLogger(__name__)

MAX_SQUARES = 1000
MAX_DIAGNOSTIC_M = 500
BRUTE_FORCE_MAX_SIZE = 6
INT64_LIMIT = 2 ** 63
QUADRATURE_DEFAULT_TOL = 1e-9
GRID_OVERSAMPLE = 64
FFT_BLOCK = 2 ** 18
RESIDUE_CHUNK = 4
MAX_GRID_POINTS = 2 ** 27
DENSE_L1_LIMIT = math.sqrt(math.pi) / 2.0


@dataclass(frozen=True)
class ExpSumSet:
    """Finite set S of distinct integers, |S| >= 2, stored sorted."""
    elements: Tuple[int, ...]

    def __post_init__(self):
        if len(self.elements) < 2:
            raise ParameterError(f"need at least 2 elements, got {len(self.elements)}")
        if any(b <= a for a, b in zip(self.elements, self.elements[1:])):
            raise ParameterError("elements must be distinct and strictly increasing")

    @classmethod
    def from_elements(cls, elements: Iterable[int]) -> "ExpSumSet":
        """Sort the given integers; duplicates are rejected."""
        values = []
        for x in elements:
            if isinstance(x, float) and not x.is_integer():
                raise ParameterError(f"elements must be integers, got {x!r}")
            values.append(int(x))
        if len(set(values)) != len(values):
            raise ParameterError("elements must be distinct")
        return cls(tuple(sorted(values)))

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def span(self) -> int:
        return self.elements[-1] - self.elements[0]

    @property
    def offsets(self) -> np.ndarray:
        return np.asarray(self.elements, dtype=np.int64) - self.elements[0]

    def shifted(self, t: int) -> "ExpSumSet":
        return ExpSumSet(tuple(x + t for x in self.elements))

    def reflected(self) -> "ExpSumSet":
        return ExpSumSet(tuple(-x for x in reversed(self.elements)))


def squares_set(m: int) -> ExpSumSet:
    """Q = {1, 4, ..., m^2} for 2 <= m <= 1000."""
    if not 2 <= m <= MAX_SQUARES:
        raise ParameterError(f"m must lie in [2, {MAX_SQUARES}], got {m}")
    return ExpSumSet(tuple(j * j for j in range(1, m + 1)))


def random_set(rng: np.random.Generator, size: int, span: int) -> ExpSumSet:
    """``size`` distinct integers drawn uniformly from [0, span]."""
    if not 2 <= size <= span + 1:
        raise ParameterError(f"cannot draw {size} distinct integers from [0, {span}]")
    return ExpSumSet.from_elements(rng.choice(span + 1, size=size, replace=False).tolist())


def _check_k(k: int) -> None:
    if k not in (1, 2, 3):
        raise ParameterError(f"k must be 1, 2 or 3, got {k}")


def energy(S: ExpSumSet, k: int) -> int:
    """r_k(S): number of 2k-tuples from S whose two k-fold sums agree.

    Convolves the 0/1 indicator of the offsets with itself k times in
    int64 and sums the squared coefficients.

    Raises:
        CapacityError: If k! |S|^(2k-1) does not fit in a signed 64-bit integer
    """
    _check_k(k)
    bound = math.factorial(k) * S.size ** (2 * k - 1)
    if bound >= INT64_LIMIT:
        raise CapacityError(
            f"r_{k} for |S|={S.size} may exceed int64 (bound {bound}); "
            f"use brute_force_energy or Python integers instead"
        )
    offsets = S.offsets
    poly = np.zeros(S.span + 1, dtype=np.int64)
    poly[offsets] = 1
    for _ in range(k - 1):
        grown = np.zeros(poly.size + S.span, dtype=np.int64)
        for o in offsets:
            grown[o:o + poly.size] += poly
        poly = grown
    return int(np.dot(poly, poly))


def exact_even_moment(S: ExpSumSet, k: int) -> Fraction:
    """||X_S||_{2k}^{2k} = r_k(S) / |S|^k as an exact fraction."""
    return Fraction(energy(S, k), S.size ** k)


def brute_force_energy(S: ExpSumSet, k: int) -> int:
    """r_k(S) by direct enumeration of all 2k-tuples; |S| <= 6."""
    _check_k(k)
    if S.size > BRUTE_FORCE_MAX_SIZE:
        raise CapacityError(f"brute force supports |S| <= {BRUTE_FORCE_MAX_SIZE}, got {S.size}")
    count = 0
    for tup in itertools.product(S.elements, repeat=2 * k):
        if sum(tup[:k]) == sum(tup[k:]):
            count += 1
    return count


def _residue_power_sum(offsets: np.ndarray, size: int, M: int, block: int,
                       residues: Sequence[int], p: float, shift: int) -> float:
    """Sum of |X|^p over grid points t = q + (M / block) r for q in residues."""
    folded = offsets % block
    total = []
    for q in residues:
        # Exact integer phase index over the doubled grid
        idx = (offsets * (2 * q + shift)) % (2 * M)
        angle = (np.pi / M) * idx.astype(float)
        coeff = (np.bincount(folded, weights=np.cos(angle), minlength=block)
                 + 1j * np.bincount(folded, weights=np.sin(angle), minlength=block))
        amp2 = np.abs(np.fft.ifft(coeff) * block) ** 2 / size
        total.append(float(np.sum(amp2 ** (p / 2.0))))
    return math.fsum(total)


def _grid_power_sum(S: ExpSumSet, M: int, p: float, shift: int) -> float:
    """Sum over t < M of |X_S((t + shift/2) / M)|^p."""
    block = min(M, FFT_BLOCK)
    stride = M // block
    offsets = S.offsets
    chunks = [range(q, min(q + RESIDUE_CHUNK, stride)) for q in range(0, stride, RESIDUE_CHUNK)]
    parts = map_ordered(lambda qs: _residue_power_sum(offsets, S.size, M, block, qs, p, shift), chunks)
    return math.fsum(parts)


def initial_grid(S: ExpSumSet) -> int:
    """Smallest power of two >= 64 (span + 1)."""
    target = GRID_OVERSAMPLE * (S.span + 1)
    return 1 << (target - 1).bit_length()


def quadrature_norm(S: ExpSumSet, p: float, tol: float = QUADRATURE_DEFAULT_TOL) -> Tuple[float, float]:
    """||X_S||_p by the periodic trapezoid rule with grid doubling.

    Each doubling adds the half-shifted grid, so earlier evaluations are
    reused. The error estimate is |T_2M^(1/p) - T_M^(1/p)|.

    Returns:
        Tuple of (value, est_error)

    Raises:
        ParameterError: If p < 1 or tol < 1e-10
        QuadratureError: If the grid cap of 2^27 points is reached first
    """
    if not (math.isfinite(p) and p >= 1.0):
        raise ParameterError(f"p must be finite and at least 1, got {p!r}")
    if not (math.isfinite(tol) and tol >= 1e-10):
        raise ParameterError(f"tol must be at least 1e-10, got {tol!r}")

    M = initial_grid(S)
    if M > MAX_GRID_POINTS:
        raise QuadratureError(
            f"span {S.span} needs {M} points, above the cap of {MAX_GRID_POINTS}",
            {"points": M, "size": S.size, "span": S.span},
        )
    total = _grid_power_sum(S, M, p, 0)
    value = (total / M) ** (1.0 / p)
    while 2 * M <= MAX_GRID_POINTS:
        total += _grid_power_sum(S, M, p, 1)
        M *= 2
        refined = (total / M) ** (1.0 / p)
        err = abs(refined - value)
        value = refined
        logger.debug(f"|S|={S.size} p={p:g}: M={M} value={value!r} err={err:.2e}")
        if err <= tol:
            return value, err

    raise QuadratureError(
        f"||X_S||_{p:g} did not reach tol={tol:.1e} within {MAX_GRID_POINTS} points",
        {"value": value, "points": M, "size": S.size, "span": S.span},
    )


def _moment(S: ExpSumSet, p: float, tol: float) -> float:
    """E|X_S|^p, exact for p in {2, 4, 6}."""
    if p in (2.0, 4.0, 6.0):
        return float(exact_even_moment(S, int(p) // 2))
    return quadrature_norm(S, p, tol)[0] ** p


def theorem_upper_bound(S: ExpSumSet, p: float, q: float, C: float,
                        tol: float = QUADRATURE_DEFAULT_TOL) -> float:
    """1 - C (||X_S||_p^p - 1)^theta / (||X_S||_q^q - 1)^(theta - 1).

    Returns 1 when the q-th moment excess vanishes.
    """
    validate_exponents(p, q)
    if not (math.isfinite(C) and C > 0.0):
        raise ParameterError(f"constant C must be finite and positive, got {C!r}")
    lp_p = _moment(S, p, tol)
    lq_q = _moment(S, q, tol)
    if lq_q - 1.0 < DEGENERATE_TOL:
        return 1.0
    return 1.0 - C * moment_term(lp_p, lq_q, (q - 2.0) / (q - p))


def corollary_exponent(q: float) -> float:
    """N = (q - 2) / (q - 4) reached by choosing q > 4."""
    if not (math.isfinite(q) and q > 4.0):
        raise ParameterError(f"q must exceed 4, got {q!r}")
    return (q - 2.0) / (q - 4.0)


def exponent_to_q(n_power: float) -> float:
    """Inverse of corollary_exponent: q = (4N - 2) / (N - 1), N > 1."""
    if not (math.isfinite(n_power) and n_power > 1.0):
        raise ParameterError(f"N must exceed 1, got {n_power!r}")
    return (4.0 * n_power - 2.0) / (n_power - 1.0)


@dataclass
class MomentTable:
    """Exact even moments and quadrature norms of one set."""
    set: ExpSumSet
    exact_even: Dict[int, Fraction] = field(default_factory=dict)
    quadrature: Dict[float, Tuple[float, float]] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "size": self.set.size,
            "span": self.set.span,
            "exact_even": {str(k): float(v) for k, v in sorted(self.exact_even.items())},
            "quadrature": {f"{p:g}": {"value": v, "est_error": e} for p, (v, e) in sorted(self.quadrature.items())},
        }


def moment_table(S: ExpSumSet, p_values: Sequence[float] = (1.0, 4.0),
                 tol: float = QUADRATURE_DEFAULT_TOL) -> MomentTable:
    """Collect r_k / |S|^k for k = 1..3 and the quadrature norm at each p."""
    table = MomentTable(set=S)
    for k in (1, 2, 3):
        try:
            table.exact_even[k] = exact_even_moment(S, k)
        except CapacityError as e:
            logger.warning(f"Skipping exact moment k={k}: {e}")
    for p in p_values:
        table.quadrature[float(p)] = quadrature_norm(S, p, tol)
    return table


DIAGNOSTIC_COLUMNS = ("m", "l1", "l4_4_exact", "l6_6_exact", "theorem_bound", "gap",
                      "l4_4_over_log_m", "l6_6_over_m", "corollary_trend")


def expsum_row(S: ExpSumSet, p: float = 4.0, q: float = 6.0, C: float = 1.0 / 3.0,
               n_power: float = 2.0, tol: float = 1e-6, m: Optional[int] = None) -> Dict[str, Any]:
    """One report row: L1 norm, exact moments, theorem bound and trend columns."""
    l1, l1_err = quadrature_norm(S, 1.0, tol)
    l4 = float(exact_even_moment(S, 2))
    l6 = float(exact_even_moment(S, 3))
    bound = theorem_upper_bound(S, p, q, C, tol)
    size = S.size
    log_size = math.log(size)
    return {
        "m": m if m is not None else size,
        "l1": l1,
        "l4_4_exact": l4,
        "l6_6_exact": l6,
        "theorem_bound": bound,
        "gap": bound - l1,
        "l4_4_over_log_m": l4 / log_size,
        "l6_6_over_m": l6 / size,
        "corollary_trend": (1.0 - l1) * size / log_size ** n_power,
        "l1_est_error": l1_err,
    }


def bourgain_diagnostics(m_values: Sequence[int], n_power: float = 2.0, tol: float = 1e-6) -> List[Dict[str, Any]]:
    """Trend table over squares sets: moment ratios and the corollary quantity.

    No constant is fitted; the rows only show whether the ratios stay in a band.

    Raises:
        ParameterError: If some m exceeds 500
    """
    if n_power <= 0:
        raise ParameterError(f"N must be positive, got {n_power!r}")
    rows = []
    for m in m_values:
        if not 2 <= m <= MAX_DIAGNOSTIC_M:
            raise ParameterError(f"m must lie in [2, {MAX_DIAGNOSTIC_M}], got {m}")
        rows.append(expsum_row(squares_set(m), n_power=n_power, tol=tol, m=m))
        logger.info(f"m={m}: l1={rows[-1]['l1']:.8f} bound={rows[-1]['theorem_bound']:.8f}")
    return rows
