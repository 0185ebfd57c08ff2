"""Discrete gradient and L1 Poincare functional on the Boolean hypercube

Vertices are indexed by bitmask; coordinate j (1-based) of vertex ``idx``
is x_j = 1 - 2 * bit_{j-1}(idx). This module also carries the two
one-dimensional quadratures of the Poincare improvement: the delta
integral and the remark integral built from the stone expression.
"""

import logging
import math
from functools import lru_cache
from typing import Any, Callable, Dict, Iterator, NamedTuple, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import CapacityError, DegenerateInputError, ParameterError, QuadratureError
from .models import QuadratureResult
from .rademacher import STONE_READINGS, stone_piece
from .workers import map_ordered

logger = logging.getLogger(__name__)

MAX_DIMENSION = 20
COORD_CHUNK = 4
DELTA_BOUNDS = ("dax1", "ramon1")
DELTA_DEFAULT_TOL = 1e-10
DELTA_CHAIN_TOL = 1e-8
DELTA_WINDOW = (0.000125, 0.000135)
REMARK_DEFAULT_TOL = 1e-6
REMARK_WINDOW = (0.145, 0.153)
REMARK_CONJECTURE = math.pi / 2.0 - math.sqrt(math.pi / 2.0)
REMARK_PIECE_CHUNK = 65536
REMARK_MAX_PIECES = 2 ** 25
# Limit of the stone integrand as p -> 1, in the u variable
REMARK_TAIL_LIMIT = math.sqrt(2.0) * math.exp(-0.5)


class CubeFunction:
    """Real-valued function on {-1, 1}^n stored as a table of 2^n values."""

    __slots__ = ("n", "values")

    def __init__(self, n: int, values: Sequence[float]):
        """Create a cube function.

        Args:
            n: Dimension, 1 <= n <= 20
            values: Table of 2^n values indexed by vertex bitmask

        Raises:
            ParameterError: If n < 1, the table has the wrong length or a value is not finite
            CapacityError: If n > 20
        """
        if n < 1:
            raise ParameterError(f"dimension must be at least 1, got {n}")
        if n > MAX_DIMENSION:
            raise CapacityError(f"dimension {n} exceeds the supported maximum {MAX_DIMENSION}")
        table = np.array(values, dtype=float).ravel()
        if table.size != 1 << n:
            raise ParameterError(f"table for n={n} needs {1 << n} values, got {table.size}")
        if not np.all(np.isfinite(table)):
            raise ParameterError("cube function values must be finite")
        table.setflags(write=False)
        self.n = n
        self.values = table

    def __repr__(self) -> str:
        return f"CubeFunction(n={self.n})"

    @classmethod
    def from_callable(cls, n: int, fn: Callable[[np.ndarray], np.ndarray]) -> "CubeFunction":
        """Evaluate ``fn`` on the (2^n, n) matrix of vertices, one row per vertex."""
        return cls(n, fn(vertices(n)))

    @classmethod
    def dictator(cls, n: int, j: int = 1) -> "CubeFunction":
        _check_coordinate(n, j)
        return cls.from_callable(n, lambda x: x[:, j - 1])

    @classmethod
    def majority(cls, n: int) -> "CubeFunction":
        if n % 2 == 0:
            raise ParameterError(f"majority needs an odd dimension, got {n}")
        return cls.from_callable(n, lambda x: np.sign(x.sum(axis=1)))

    @classmethod
    def linear(cls, coeffs: Sequence[float]) -> "CubeFunction":
        a = np.asarray(coeffs, dtype=float)
        return cls.from_callable(a.size, lambda x: x @ a)

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "CubeFunction":
        """Parse ``{"n": n, "values": [...]}``."""
        try:
            return cls(int(data["n"]), data["values"])
        except (KeyError, TypeError) as e:
            raise ParameterError(f"malformed cube function: {e}") from e

    def to_json(self) -> Dict[str, Any]:
        return {"n": self.n, "values": self.values.tolist()}

    def shifted(self, constant: float) -> "CubeFunction":
        return CubeFunction(self.n, self.values + constant)

    def scaled(self, factor: float) -> "CubeFunction":
        return CubeFunction(self.n, self.values * factor)

    def flipped(self, mask: int) -> "CubeFunction":
        """Compose with the sign flip of every coordinate set in ``mask``."""
        idx = np.arange(1 << self.n)
        return CubeFunction(self.n, self.values[idx ^ mask])

    def permuted(self, perm: Sequence[int]) -> "CubeFunction":
        """Compose with a coordinate permutation (0-based: new coordinate i reads old perm[i])."""
        if sorted(perm) != list(range(self.n)):
            raise ParameterError(f"not a permutation of range({self.n}): {list(perm)}")
        idx = np.arange(1 << self.n)
        source = np.zeros_like(idx)
        for i, old in enumerate(perm):
            source |= ((idx >> i) & 1) << old
        return CubeFunction(self.n, self.values[source])

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.values == self.values[0]))


def vertices(n: int) -> np.ndarray:
    """(2^n, n) matrix of +-1 coordinates, row ``idx`` is the vertex with bitmask idx."""
    idx = np.arange(1 << n)[:, None]
    bits = (idx >> np.arange(n)[None, :]) & 1
    return 1 - 2 * bits


def _check_coordinate(n: int, j: int) -> None:
    if not 1 <= j <= n:
        raise ParameterError(f"coordinate j must lie in [1, {n}], got {j}")


def partial_difference(f: CubeFunction, j: int) -> CubeFunction:
    """D_j f(x) = (f(x) - f(S_j x)) / 2, S_j flipping coordinate j."""
    _check_coordinate(f.n, j)
    idx = np.arange(1 << f.n)
    return CubeFunction(f.n, (f.values - f.values[idx ^ (1 << (j - 1))]) / 2.0)


def _squared_differences(f: CubeFunction, coords: range) -> np.ndarray:
    idx = np.arange(1 << f.n)
    total = np.zeros(1 << f.n)
    for j in coords:
        d = (f.values - f.values[idx ^ (1 << (j - 1))]) / 2.0
        total += d * d
    return total


def gradient_modulus(f: CubeFunction) -> CubeFunction:
    """|grad f|(x) = (sum_j |D_j f(x)|^2)^(1/2)."""
    chunks = [range(j, min(j + COORD_CHUNK, f.n + 1)) for j in range(1, f.n + 1, COORD_CHUNK)]
    partials = map_ordered(lambda coords: _squared_differences(f, coords), chunks)
    total = partials[0]
    for part in partials[1:]:
        total = total + part
    return CubeFunction(f.n, np.sqrt(total))


def mean_abs_deviation(f: CubeFunction) -> float:
    """E|f - E f| under the uniform measure."""
    return float(np.mean(np.abs(f.values - np.mean(f.values))))


def poincare_ratio(f: CubeFunction) -> float:
    """E|f - E f| / E|grad f|.

    Raises:
        DegenerateInputError: If f is constant
    """
    grad = float(np.mean(gradient_modulus(f).values))
    if grad == 0.0:
        raise DegenerateInputError("poincare_ratio is undefined for a constant function")
    return mean_abs_deviation(f) / grad


def boolean_functions(n: int) -> Iterator[CubeFunction]:
    """All 2^(2^n) functions {-1, 1}^n -> {-1, 1}, n <= 4."""
    if not 1 <= n <= 4:
        raise CapacityError(f"exhaustive enumeration supports 1 <= n <= 4, got {n}")
    size = 1 << n
    bits = np.arange(size)
    for code in range(1 << size):
        yield CubeFunction(n, 1 - 2 * ((code >> bits) & 1))


def random_cube_function(rng: np.random.Generator, n: int) -> CubeFunction:
    """Draw from a mix of Gaussian, Boolean and sparse spike functions; never constant."""
    size = 1 << n
    kind = int(rng.integers(3))
    if kind == 0:
        values = rng.standard_normal(size)
    elif kind == 1:
        values = rng.choice(np.array([-1.0, 1.0]), size=size)
        if np.all(values == values[0]):
            values[int(rng.integers(size))] *= -1.0
    else:
        values = np.zeros(size)
        spikes = rng.choice(size, size=min(size - 1, int(rng.integers(1, 4))), replace=False)
        values[spikes] = rng.standard_normal(spikes.size) + np.where(rng.random(spikes.size) < 0.5, -3.0, 3.0)
    return CubeFunction(n, values)


def delta_integrand(u, bound: str = "dax1") -> np.ndarray:
    """Delta integrand in the variable u, where p = (1 + cos u) / 2 and dp / sqrt(p(1-p)) = du."""
    if bound not in DELTA_BOUNDS:
        raise ParameterError(f"bound must be one of {', '.join(DELTA_BOUNDS)}, got {bound!r}")
    u = np.asarray(u, dtype=float)
    m = np.sin(u) ** 2 / 4.0
    cos4 = np.cos(u) ** 4
    low = np.minimum(4.0 * m ** 3, cos4 * m)
    if bound == "dax1":
        return low / (45.0 - 3.0 * m ** 3)
    # 1 - sqrt(1 - x) without cancellation
    x = low / 480.0
    return x / (1.0 + np.sqrt(1.0 - x))


def delta_breakpoint() -> float:
    """u where the two branches of the minimum cross: tan^2 u = 2."""
    return math.acos(1.0 / math.sqrt(3.0))


def delta_integral(tol: float = DELTA_DEFAULT_TOL, bound: str = "dax1") -> QuadratureResult:
    """Integral over p in (1/2, 1) of the bias gain, weighted by dp / sqrt(p(1-p)).

    Integrated in u on [0, pi/2], split at the branch crossing of the minimum.

    Raises:
        ParameterError: If tol < 1e-12 or bound is unknown
        QuadratureError: If quad does not reach tol
    """
    if not (math.isfinite(tol) and tol >= 1e-12):
        raise ParameterError(f"tol must be at least 1e-12, got {tol!r}")
    u0 = delta_breakpoint()
    result = quad(lambda u: float(delta_integrand(u, bound)), 0.0, math.pi / 2.0,
                  points=[u0], epsabs=tol, epsrel=0.0, limit=200, full_output=1)
    value, err, info = result[0], result[1], result[2]
    diagnostics = {"value": value, "est_error": err, "subdivisions": int(info["last"]), "bound": bound}
    if len(result) > 3 or err > tol:
        message = result[3] if len(result) > 3 else "error estimate above tolerance"
        raise QuadratureError(f"delta integral did not converge: {message}", diagnostics)

    p0 = (1.0 + math.cos(u0)) / 2.0
    logger.info(f"delta ({bound}) = {value:.10g} +- {err:.1e}")
    return QuadratureResult(value=value, est_error=err, subdivisions=int(info["last"]),
                            breakpoints=(p0,), label=f"delta:{bound}")


@lru_cache(maxsize=4)
def _chain_delta(tol: float) -> float:
    return delta_integral(tol).value


class ChainBound(NamedTuple):
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def chain_bound(f: CubeFunction, delta: Optional[float] = None) -> ChainBound:
    """E|f - E f| against (pi/2 - delta) E|grad f|, delta from delta_integral(1e-8)."""
    if delta is None:
        delta = _chain_delta(DELTA_CHAIN_TOL)
    lhs = mean_abs_deviation(f)
    rhs = (math.pi / 2.0 - delta) * float(np.mean(gradient_modulus(f).values))
    return ChainBound(lhs, rhs)


def _piece_edges(k: np.ndarray) -> np.ndarray:
    """Upper end s_k of the piece where N(s) = k: s_k = 1 - sqrt(1 - 1/k), s_1 = 1/2."""
    k = np.asarray(k, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (1.0 / k) / (1.0 + np.sqrt(1.0 - 1.0 / k))
    return np.where(k == 1.0, 0.5, s)


def _s_to_u(s: np.ndarray) -> np.ndarray:
    return 2.0 * np.arcsin(np.sqrt(s))


def remark_pieces(tol: float) -> int:
    """Number of explicit pieces so that the tail bound stays below tol / 3."""
    return int(math.ceil((8.0 / tol) ** (2.0 / 3.0)))


def remark_integral(tol: float = REMARK_DEFAULT_TOL, reading: str = "regrouped") -> QuadratureResult:
    """pi/2 minus the integral over p in (1/2, 1) of the stone expression at 1 - p.

    The integrand jumps where N(1 - p) does; each piece is integrated in
    the u variable with 16-point Gauss-Legendre (8-point for the error
    estimate). Near p = 1 the pieces accumulate and the integrand tends to
    sqrt(2) e^(-1/2); that tail is integrated as a constant with an
    O(s^1.5) error bound.

    Args:
        tol: Target absolute error, at least 1e-10
        reading: "regrouped" (default) or "verbatim" stone expression

    Raises:
        ParameterError: If tol or reading is invalid
        QuadratureError: If the error estimate exceeds tol
    """
    if not (math.isfinite(tol) and tol >= 1e-10):
        raise ParameterError(f"tol must be at least 1e-10, got {tol!r}")
    if reading not in STONE_READINGS:
        raise ParameterError(f"reading must be one of {', '.join(STONE_READINGS)}, got {reading!r}")

    n_pieces = remark_pieces(tol)
    if n_pieces > REMARK_MAX_PIECES:
        raise QuadratureError(f"tol={tol!r} needs {n_pieces} pieces, above the cap", {"pieces": n_pieces})

    x16, w16 = np.polynomial.legendre.leggauss(16)
    x8, w8 = np.polynomial.legendre.leggauss(8)

    def integrate(ks: np.ndarray):
        hi = _s_to_u(_piece_edges(ks))
        lo = _s_to_u(_piece_edges(ks + 1))
        mid = ((hi + lo) / 2.0)[:, None]
        half = ((hi - lo) / 2.0)[:, None]
        kk = ks[:, None].astype(float)
        f16 = stone_piece(np.sin((mid + half * x16) / 2.0) ** 2, kk, reading)
        f8 = stone_piece(np.sin((mid + half * x8) / 2.0) ** 2, kk, reading)
        g16 = half[:, 0] * (f16 @ w16)
        g8 = half[:, 0] * (f8 @ w8)
        return float(np.sum(g16)), float(np.sum(np.abs(g16 - g8)))

    chunks = [np.arange(k, min(k + REMARK_PIECE_CHUNK, n_pieces + 1))
              for k in range(1, n_pieces + 1, REMARK_PIECE_CHUNK)]
    parts = map_ordered(integrate, chunks)
    body = math.fsum(v for v, _ in parts)
    body_err = math.fsum(e for _, e in parts)

    s_tail = float(_piece_edges(np.array([n_pieces + 1]))[0])
    tail = REMARK_TAIL_LIMIT * float(_s_to_u(s_tail))
    tail_err = 6.0 * s_tail ** 1.5
    est_error = body_err + tail_err
    if est_error > tol:
        raise QuadratureError(
            f"remark integral error estimate {est_error:.2e} exceeds tol {tol:.2e}",
            {"pieces": n_pieces, "body_error": body_err, "tail_error": tail_err},
        )

    value = math.pi / 2.0 - (body + tail)
    breakpoints = tuple((1.0 - _piece_edges(np.arange(2, n_pieces + 2))).tolist())
    logger.info(f"remark integral ({reading}) = {value:.8f} +- {est_error:.1e} over {n_pieces} pieces")
    return QuadratureResult(value=value, est_error=est_error, subdivisions=n_pieces + 1,
                            breakpoints=breakpoints, label=f"remark:{reading}")


def remark_piece_closed_form(k: int) -> float:
    """Exact integral of the regrouped stone expression over the piece N = k."""
    if k == 1:
        return 2.0 * (math.sqrt(0.5) - 0.5)
    return (2.0 / math.sqrt(k)) * ((1.0 - 1.0 / (k + 1)) ** (k / 2.0) - (1.0 - 1.0 / k) ** (k / 2.0))


def poincare_report(f: CubeFunction, delta: Optional[float] = None) -> Dict[str, Any]:
    """{lhs, rhs, ratio, delta, holds} for one cube function."""
    if delta is None:
        delta = _chain_delta(DELTA_CHAIN_TOL)
    bound = chain_bound(f, delta)
    ratio = None if f.is_constant else poincare_ratio(f)
    return {"n": f.n, "lhs": bound.lhs, "rhs": bound.rhs, "ratio": ratio, "delta": delta, "holds": bound.holds}
