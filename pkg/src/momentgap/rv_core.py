"""Finite-support random variables and the refined L1 inequality"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .errors import DegenerateInputError, NormalizationError, ParameterError
from .models import GapReport

logger = logging.getLogger(__name__)

PROB_SUM_TOL = 1e-12
MERGE_RTOL = 1e-12
NORMALIZATION_TOL = 1e-10
DEGENERATE_TOL = 1e-14


def merge_atoms(
    values: np.ndarray,
    probs: np.ndarray,
    rtol: float = MERGE_RTOL,
) -> Tuple[np.ndarray, np.ndarray]:
    """Merge atoms whose values agree within ``rtol`` of the largest value.

    Values may be signed. Merged atoms take the probability-weighted
    mean value and the summed probability. Output is sorted by value.

    Args:
        values: Atom values
        probs: Atom probabilities (same length)
        rtol: Relative merge tolerance

    Returns:
        Tuple of (values, probs) with distinct values
    """
    if values.size == 0:
        return values, probs
    order = np.argsort(values, kind="stable")
    values = values[order]
    probs = probs[order]
    scale = max(abs(values[0]), abs(values[-1]))
    if scale == 0.0:
        return values[:1].copy(), np.array([probs.sum()])

    # A new group starts wherever the gap to the previous value is too big
    starts = np.flatnonzero(np.diff(values) > rtol * scale) + 1
    starts = np.concatenate(([0], starts))
    if starts.size == values.size:
        return values, probs

    merged_probs = np.add.reduceat(probs, starts)
    weighted = np.add.reduceat(values * probs, starts)
    # Callers drop zero-probability atoms first, so every group has mass
    return weighted / merged_probs, merged_probs


class FiniteRV:
    """Nonnegative random variable with finitely many atoms.

    Values are stored as absolute values, zero-probability atoms are
    dropped and coinciding values are merged. The arrays are read-only.
    """

    __slots__ = ("_values", "_probs")

    def __init__(self, values: Sequence[float], probs: Sequence[float], merge_rtol: float = MERGE_RTOL):
        """Build a random variable from parallel value and probability lists.

        Args:
            values: Atom values (signs are discarded)
            probs: Atom probabilities in [0, 1], summing to 1 within 1e-12
            merge_rtol: Relative tolerance for merging equal values

        Raises:
            ParameterError: If the atoms do not describe a probability distribution
        """
        v = np.abs(np.asarray(values, dtype=float).ravel())
        w = np.asarray(probs, dtype=float).ravel()
        if v.shape != w.shape:
            raise ParameterError(f"values and probs differ in length ({v.size} vs {w.size})")
        if v.size == 0:
            raise ParameterError("a random variable needs at least one atom")
        if not np.all(np.isfinite(v)):
            raise ParameterError("atom values must be finite")
        if not np.all(np.isfinite(w)) or np.any(w < 0.0) or np.any(w > 1.0):
            raise ParameterError("probabilities must lie in [0, 1]")
        total = float(w.sum())
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ParameterError(f"probabilities sum to {total!r}, expected 1")

        keep = w > 0.0
        v, w = merge_atoms(v[keep], w[keep], merge_rtol)
        v.setflags(write=False)
        w.setflags(write=False)
        self._values = v
        self._probs = w

    @classmethod
    def from_atoms(cls, atoms: Iterable[Tuple[float, float]]) -> "FiniteRV":
        pairs = list(atoms)
        return cls([v for v, _ in pairs], [w for _, w in pairs])

    @classmethod
    def constant(cls, value: float = 1.0) -> "FiniteRV":
        return cls([value], [1.0])

    @classmethod
    def from_json(cls, data: List[Dict[str, Any]]) -> "FiniteRV":
        """Parse a JSON array of ``{"value": ..., "prob": ...}`` records."""
        if not isinstance(data, list):
            raise ParameterError("random variable JSON must be an array of {value, prob} records")
        try:
            return cls([float(item["value"]) for item in data], [float(item["prob"]) for item in data])
        except (KeyError, TypeError) as e:
            raise ParameterError(f"malformed atom record: {e}") from e

    def to_json(self) -> List[Dict[str, float]]:
        return [{"value": float(v), "prob": float(w)} for v, w in zip(self._values, self._probs)]

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    @property
    def atoms(self) -> List[Tuple[float, float]]:
        return list(zip(self._values.tolist(), self._probs.tolist()))

    def __len__(self) -> int:
        return self._values.size

    def __repr__(self) -> str:
        return f"FiniteRV(atoms={len(self)})"

    def _relative_moment(self, p: float) -> Tuple[float, float]:
        """(E (X / max X)^p, max X); the first entry lies in (0, 1]."""
        top = float(self._values.max()) if self._values.size else 0.0
        if top == 0.0:
            return 0.0, 0.0
        return float(np.dot(self._probs, np.power(self._values / top, p))), top

    def moment(self, p: float) -> float:
        """E X^p over the discrete measure; inf only when the moment itself overflows."""
        inner, top = self._relative_moment(p)
        if top == 0.0:
            return 0.0
        return float(inner * np.power(top, p))

    def norm(self, p: float) -> float:
        """(E X^p)^(1/p), finite for every finite support."""
        inner, top = self._relative_moment(p)
        return inner ** (1.0 / p) * top

    def scaled(self, factor: float) -> "FiniteRV":
        """Return the variable ``factor * X`` (absolute value taken)."""
        if not math.isfinite(factor):
            raise ParameterError(f"scale factor must be finite, got {factor!r}")
        out = FiniteRV.__new__(FiniteRV)
        v = self._values * abs(factor)
        v.setflags(write=False)
        out._values = v
        out._probs = self._probs
        return out


def _check_positive_exponent(p: float) -> None:
    if not (math.isfinite(p) and p > 0.0):
        raise ParameterError(f"exponent must be finite and positive, got {p!r}")


def validate_exponents(p: float, q: float) -> None:
    """Raise ParameterError unless 2 < p < q < infinity."""
    if not (math.isfinite(p) and math.isfinite(q)):
        raise ParameterError(f"p and q must be finite, got p={p!r}, q={q!r}")
    if not 2.0 < p < q:
        raise ParameterError(f"need 2 < p < q, got p={p!r}, q={q!r}")


def theta(p: float, q: float) -> float:
    """Exponent (q - 2) / (q - p) of the refined inequality."""
    validate_exponents(p, q)
    return (q - 2.0) / (q - p)


def lp_norm(rv: FiniteRV, p: float) -> float:
    """Compute ||X||_p = (E X^p)^(1/p).

    Raises:
        ParameterError: If p is not finite and positive
    """
    _check_positive_exponent(p)
    return rv.norm(p)


def normalize_l2(rv: FiniteRV) -> FiniteRV:
    """Rescale ``rv`` to unit L2 norm.

    Raises:
        DegenerateInputError: If rv is identically zero
    """
    norm = lp_norm(rv, 2.0)
    if norm == 0.0:
        raise DegenerateInputError("cannot normalize the zero random variable")
    if norm == 1.0:
        return rv
    return rv.scaled(1.0 / norm)


@dataclass(frozen=True)
class TwoPointRV:
    """Two-point variable with P{X = a} = r, P{X = b} = 1 - r and E X^2 = 1."""
    a: float
    b: float
    r: float

    @classmethod
    def from_ac(cls, a: float, c: float) -> "TwoPointRV":
        """Build from the optimizer coordinates (a, c) with b = 1/c."""
        if not 0.0 < c < 1.0:
            raise ParameterError(f"c must lie in (0, 1), got {c!r}")
        return two_point(a, 1.0 / c)

    @property
    def c(self) -> float:
        return 1.0 / self.b

    @property
    def upper_prob(self) -> float:
        """P{X = b} = (1 - a^2) / (b^2 - a^2), accurate when r rounds to 1."""
        c = 1.0 / self.b
        return (1.0 - self.a * self.a) * c * c / (1.0 - (self.a * c) ** 2)

    @property
    def mean(self) -> float:
        return self.a * self.r + self.b * self.upper_prob

    @property
    def mean_closed_form(self) -> float:
        """E X = (1 + ab) / (a + b)."""
        return (1.0 + self.a * self.b) / (self.a + self.b)

    @property
    def second_moment(self) -> float:
        return self.a * self.a * self.r + (1.0 - self.a * self.a) / (1.0 - (self.a / self.b) ** 2)

    def to_rv(self) -> FiniteRV:
        return FiniteRV([self.a, self.b], [self.r, self.upper_prob])


def two_point(a: float, b: float) -> TwoPointRV:
    """Build the unit-L2 two-point variable on {a, b}.

    Args:
        a: Lower value in (0, 1)
        b: Upper value in (1, inf)

    Returns:
        TwoPointRV with r = (b^2 - 1) / (b^2 - a^2)

    Raises:
        ParameterError: If a or b is out of range
    """
    if not 0.0 < a < 1.0:
        raise ParameterError(f"a must lie in (0, 1), got {a!r}")
    if not (1.0 < b and math.isfinite(b)):
        raise ParameterError(f"b must lie in (1, inf), got {b!r}")
    r = (1.0 - b ** -2) / (1.0 - (a / b) ** 2)
    return TwoPointRV(a=a, b=b, r=r)


def _check_constant(C: float) -> None:
    if not (math.isfinite(C) and C > 0.0):
        raise ParameterError(f"constant C must be finite and positive, got {C!r}")


def moment_term(lp_p: float, lq_q: float, th: float) -> float:
    """(E X^p - 1)^theta / (E X^q - 1)^(theta - 1), evaluated in log space."""
    excess_p = max(lp_p - 1.0, 0.0)
    excess_q = lq_q - 1.0
    if excess_p == 0.0:
        return 0.0
    return math.exp(th * math.log(excess_p) - (th - 1.0) * math.log(excess_q))


def main_inequality_rhs(rv: FiniteRV, p: float, q: float, C: float) -> GapReport:
    """Evaluate 1 - C (E X^p - 1)^theta / (E X^q - 1)^(theta - 1) against ||X||_1.

    Args:
        rv: Random variable with ||X||_2 = 1 within 1e-10
        p: Lower exponent
        q: Upper exponent
        C: Constant to test

    Returns:
        GapReport; gap >= 0 means the inequality holds

    Raises:
        ParameterError: If p, q or C is out of range
        NormalizationError: If rv is not normalized
    """
    validate_exponents(p, q)
    _check_constant(C)
    l2 = math.sqrt(rv.moment(2.0))
    if abs(l2 - 1.0) > NORMALIZATION_TOL:
        raise NormalizationError(f"||X||_2 = {l2!r}, call normalize_l2 first")

    l1 = rv.moment(1.0)
    lp_p = rv.moment(p)
    lq_q = rv.moment(q)
    if lq_q - 1.0 < DEGENERATE_TOL:
        rhs, term, degenerate = 1.0, 0.0, True
    else:
        term = moment_term(lp_p, lq_q, (q - 2.0) / (q - p))
        rhs = 1.0 - C * term
        degenerate = False

    return GapReport(
        l1=l1, lp_p=lp_p, lq_q=lq_q, rhs=rhs, gap=rhs - l1,
        degenerate=degenerate, p=p, q=q, constant=C, term=term,
    )


def rescaled_inequality(rv: FiniteRV, p: float, q: float, C: float) -> GapReport:
    """Homogeneous form of the inequality for a variable of any L2 norm.

    ||X||_2 - ||X||_1 >= (C / ||X||_2) (E X^p - ||X||_2^p)^theta / (E X^q - ||X||_2^q)^(theta - 1)

    The returned rhs and gap are those of the normalized variable scaled
    by ||X||_2; moments are those of X itself.
    """
    norm = lp_norm(rv, 2.0)
    if norm == 0.0:
        raise DegenerateInputError("cannot evaluate the inequality on the zero random variable")
    unit = main_inequality_rhs(normalize_l2(rv), p, q, C)
    l1 = rv.moment(1.0)
    rhs = norm * unit.rhs
    return GapReport(
        l1=l1, lp_p=rv.moment(p), lq_q=rv.moment(q), rhs=rhs, gap=rhs - l1,
        degenerate=unit.degenerate, p=p, q=q, constant=C, term=norm * unit.term,
    )


def _require_unit(rv: FiniteRV) -> None:
    l2 = math.sqrt(rv.moment(2.0))
    if abs(l2 - 1.0) > NORMALIZATION_TOL:
        raise NormalizationError(f"||X||_2 = {l2!r}, call normalize_l2 first")


def handel_rhs(rv: FiniteRV) -> float:
    """Earlier moment bound sqrt(1 - (E X^4 - 1)^2 / (32 E X^6)) for ||X||_2 = 1."""
    _require_unit(rv)
    m4 = rv.moment(4.0)
    m6 = rv.moment(6.0)
    return math.sqrt(min(1.0, max(0.0, 1.0 - (m4 - 1.0) ** 2 / (32.0 * m6))))


def holder_floor(rv: FiniteRV, p: float) -> float:
    """||X||_1^eta ||X||_p^(1 - eta) with eta = (p - 2) / (2(p - 1)); at least ||X||_2."""
    if not (math.isfinite(p) and p > 2.0):
        raise ParameterError(f"p must be finite and greater than 2, got {p!r}")
    eta = (p - 2.0) / (2.0 * (p - 1.0))
    return lp_norm(rv, 1.0) ** eta * lp_norm(rv, p) ** (1.0 - eta)


def gap_sweep(values: np.ndarray, probs: np.ndarray, p: float, q: float, C: float) -> np.ndarray:
    """Vectorized gaps for a batch of padded random variables.

    Each row of ``values``/``probs`` is one variable; padding atoms carry
    probability zero. Rows are normalized to unit L2 norm before evaluation,
    so row i agrees with ``main_inequality_rhs(normalize_l2(rv_i), p, q, C).gap``.

    Returns:
        Array of gaps, one per row
    """
    validate_exponents(p, q)
    _check_constant(C)
    values = np.abs(np.asarray(values, dtype=float))
    probs = np.asarray(probs, dtype=float)

    l2 = np.sqrt(np.einsum("ij,ij->i", probs, values * values))
    if np.any(l2 == 0.0):
        raise DegenerateInputError("batch contains an all-zero random variable")
    x = values / l2[:, None]
    l1 = np.einsum("ij,ij->i", probs, x)
    excess_p = np.maximum(np.einsum("ij,ij->i", probs, x ** p) - 1.0, 0.0)
    excess_q = np.einsum("ij,ij->i", probs, x ** q) - 1.0

    th = (q - 2.0) / (q - p)
    degenerate = excess_q < DEGENERATE_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        log_term = th * np.log(excess_p) - (th - 1.0) * np.log(np.where(degenerate, 1.0, excess_q))
        term = np.where((excess_p > 0.0) & ~degenerate, np.exp(log_term), 0.0)
    rhs = 1.0 - C * term
    return rhs - l1


def random_batch(
    rng: np.random.Generator,
    count: int,
    min_atoms: int = 2,
    max_atoms: int = 8,
) -> Tuple[np.ndarray, np.ndarray]:
    """Draw ``count`` random finite-support variables as padded arrays.

    Values are lognormal with a per-row spread, so batches mix nearly
    constant variables with heavy-tailed ones. Probabilities are powered
    exponential weights, which produces both balanced and tiny atoms.
    """
    if not 1 <= min_atoms <= max_atoms:
        raise ParameterError(f"need 1 <= min_atoms <= max_atoms, got {min_atoms}, {max_atoms}")
    sizes = rng.integers(min_atoms, max_atoms + 1, size=count)
    mask = np.arange(max_atoms)[None, :] < sizes[:, None]

    sigma = rng.uniform(0.05, 3.0, size=(count, 1))
    values = rng.lognormal(mean=0.0, sigma=1.0, size=(count, max_atoms)) ** sigma
    weights = rng.exponential(size=(count, max_atoms)) ** rng.uniform(1.0, 4.0, size=(count, 1))
    weights = np.where(mask, weights + 1e-300, 0.0)
    probs = weights / weights.sum(axis=1, keepdims=True)
    return np.where(mask, values, 0.0), probs


def random_finite_rv(rng: np.random.Generator, min_atoms: int = 2, max_atoms: int = 8) -> FiniteRV:
    """Draw one random variable from the same family as random_batch."""
    values, probs = random_batch(rng, 1, min_atoms, max_atoms)
    row_probs = probs[0]
    # FiniteRV checks the sum to 1e-12; renormalize after float division
    row_probs = row_probs / row_probs.sum()
    return FiniteRV(values[0], row_probs)
