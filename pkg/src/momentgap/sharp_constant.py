"""Sharp constant C(p, q) of the refined L1 inequality

C(p, q) is the infimum over the unit square of
B(a, c, q)^(theta - 1) / B(a, c, p)^theta, theta = (q - 2) / (q - p).
The objective extends continuously to the closed square; compute_c
minimizes it over the interior and the four edges as equal candidates.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .errors import DomainError, IdentityError, ParameterError, SolverError
from .models import SharpConstantResult, TorsionReport
from .rv_core import TwoPointRV, theta, validate_exponents
from .workers import map_ordered

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-7
DOMAIN_MARGIN = 1e-9
GRID_SIZE = 512
GRID_MARGIN = 1e-6
GRID_CHUNK = 32
EDGE_POINTS = 513
LOG_DOMAIN_THETA = 30.0
IDENTITY_RTOL = 1e-10
LOWER_BOUND_SLACK = 1e-9
RICHARDSON_KS = (10, 27)

EDGES: Dict[str, Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]] = {
    "edge a=0": lambda s: (np.zeros_like(s), s),
    "edge a=1": lambda s: (np.ones_like(s), s),
    "edge c=0": lambda s: (s, np.zeros_like(s)),
    "edge c=1": lambda s: (s, np.ones_like(s)),
}


def _check_p(p: float) -> None:
    if not (math.isfinite(p) and p > 2.0):
        raise ParameterError(f"p must be finite and greater than 2, got {p!r}")


def _check_open(a: float, c: float) -> None:
    for name, x in (("a", a), ("c", c)):
        if not DOMAIN_MARGIN <= x <= 1.0 - DOMAIN_MARGIN:
            raise DomainError(
                f"{name}={x!r} is within {DOMAIN_MARGIN:g} of the boundary; "
                f"use closure_objective for boundary points"
            )


def _check_closed(a: float, c: float) -> None:
    for name, x in (("a", a), ("c", c)):
        if not 0.0 <= x <= 1.0:
            raise DomainError(f"{name}={x!r} lies outside [0, 1]")


def _g(x: np.ndarray, k: float) -> np.ndarray:
    """(1 - x^k) / (1 - x), continuous on [0, 1] with g(1) = k."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.expm1(k * np.log(x)) / (1.0 - x)
    return np.where(x == 1.0, k, out)


def _b_stable(a, c, p: float) -> np.ndarray:
    """B(a, c, p) in the factored form ((1+a) g(c) - c^(p-2) (1+c) a^2 g(a)) / (1 - ac).

    Same quotient as the expanded numerator over (1-c)(1-a)(1-ac), with both
    edge factors cancelled. Finite on the closed square except the corner (1, 1).
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    k = p - 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        num = (1.0 + a) * _g(c, k) - np.power(c, k) * (1.0 + c) * a * a * _g(a, k)
        return num / (1.0 - a * c)


def _log_objective(a, c, p: float, q: float) -> np.ndarray:
    th = (q - 2.0) / (q - p)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (th - 1.0) * np.log(_b_stable(a, c, q)) - th * np.log(_b_stable(a, c, p))


def b_func(a: float, c: float, p: float) -> float:
    """Evaluate B(a, c, p) = (c^(p-2)(a^p - 1) + c^p(a^2 - a^p) + 1 - a^2) / ((1-c)(1-a)(1-ac)).

    Args:
        a: Point in (0, 1), at least 1e-9 from the boundary
        c: Point in (0, 1), at least 1e-9 from the boundary
        p: Exponent greater than 2

    Raises:
        DomainError: If (a, c) is within the margin of the boundary
        ParameterError: If p <= 2
    """
    _check_p(p)
    _check_open(a, c)
    return float(_b_stable(a, c, p))


def b_numerator(a, c, p: float):
    """Expanded numerator c^(p-2)(a^p - 1) + c^p(a^2 - a^p) + 1 - a^2."""
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    ap = np.power(a, p)
    return np.power(c, p - 2.0) * (ap - 1.0) + np.power(c, p) * (a * a - ap) + 1.0 - a * a


def objective(a: float, c: float, p: float, q: float) -> float:
    """B(a, c, q)^(theta - 1) / B(a, c, p)^theta on the open square.

    Evaluated in log space once theta exceeds 30.
    """
    validate_exponents(p, q)
    _check_open(a, c)
    th = theta(p, q)
    if th > LOG_DOMAIN_THETA:
        return math.exp(float(_log_objective(a, c, p, q)))
    bq = float(_b_stable(a, c, q))
    bp = float(_b_stable(a, c, p))
    return bq ** (th - 1.0) / bp ** th


def remark_product_form(a: float, c: float, p: float, q: float) -> float:
    """N_q^((p-2)/(q-p)) / N_p^((q-2)/(q-p)) * (1-c)(1-a)(1-ac) with expanded numerators."""
    validate_exponents(p, q)
    _check_open(a, c)
    nq = float(b_numerator(a, c, q))
    np_ = float(b_numerator(a, c, p))
    scale = (1.0 - c) * (1.0 - a) * (1.0 - a * c)
    log_value = (p - 2.0) / (q - p) * math.log(nq) - (q - 2.0) / (q - p) * math.log(np_)
    return math.exp(log_value) * scale


@dataclass(frozen=True)
class RichardsonEstimate:
    """Extrapolated limit of f(eps) as eps -> 0."""
    value: float
    error: float
    order: int
    samples: int


def richardson_limit(
    fn: Callable[[float], float],
    k_min: int = RICHARDSON_KS[0],
    k_max: int = RICHARDSON_KS[1],
    max_order: int = 6,
) -> RichardsonEstimate:
    """Extrapolate fn(eps) to eps = 0 over eps_k = 2^-k, k = k_min..k_max.

    Builds a Neville tableau assuming an expansion in integer powers of
    eps and returns the entry whose neighbours agree best.

    Raises:
        SolverError: If fn is not finite at some sample
    """
    eps = [2.0 ** -k for k in range(k_min, k_max + 1)]
    values = [float(fn(e)) for e in eps]
    if not all(math.isfinite(v) for v in values):
        raise SolverError("non-finite sample in Richardson extrapolation",
                          {"eps": eps, "values": values})

    table: List[List[float]] = []
    best = RichardsonEstimate(values[-1], math.inf, 0, len(values))
    for i, v in enumerate(values):
        row = [v]
        for j in range(1, min(i, max_order) + 1):
            row.append(row[j - 1] + (row[j - 1] - table[i - 1][j - 1]) / (2.0 ** j - 1.0))
        table.append(row)
        for j in range(1, len(row)):
            err = abs(row[j] - row[j - 1])
            if j < len(table[i - 1]):
                err = max(err, abs(row[j] - table[i - 1][j]))
            if err < best.error:
                best = RichardsonEstimate(row[j], err, j, len(values))
    return best


def boundary_b(a: float, c: float, p: float) -> float:
    """B(a, c, p) on the closed square.

    Direct evaluation everywhere except the corner (1, 1), where the limit
    is extrapolated along the diagonal.
    """
    _check_p(p)
    _check_closed(a, c)
    if a == 1.0 and c == 1.0:
        est = richardson_limit(lambda e: float(_b_stable(1.0 - e, 1.0 - e, p)))
        logger.debug(f"B(1, 1, {p:g}) ~ {est.value!r} (err {est.error:.2e}, order {est.order})")
        return est.value
    return float(_b_stable(a, c, p))


def closure_log_objective(a: float, c: float, p: float, q: float) -> float:
    """Log of the objective, extended to the closed square."""
    th = (q - 2.0) / (q - p)
    if a == 1.0 and c == 1.0:
        return (th - 1.0) * math.log(boundary_b(a, c, q)) - th * math.log(boundary_b(a, c, p))
    _check_closed(a, c)
    return float(_log_objective(a, c, p, q))


def closure_objective(a: float, c: float, p: float, q: float) -> float:
    """Objective extended continuously to the closed square [0, 1]^2."""
    validate_exponents(p, q)
    return math.exp(closure_log_objective(a, c, p, q))


def log_c_lower_bound(p: float, q: float) -> float:
    """Natural log of c_lower_bound(p, q); finite even when the bound underflows."""
    validate_exponents(p, q)
    return ((p - 2.0) / (q - p)) * math.log(min(1.0, q - 2.0)) - (2.0 * (q - 2.0) / (q - p)) * math.log(p)


def c_lower_bound(p: float, q: float) -> float:
    """Closed-form bound (min{1, q-2})^((p-2)/(q-p)) / p^(2(q-2)/(q-p)).

    Underflows to 0.0 when q is very close to p; use log_c_lower_bound there.
    """
    return math.exp(log_c_lower_bound(p, q))


def lemma_bounds(p: float) -> Tuple[float, float]:
    """Bounds min{1, p - 2} <= B(a, c, p) <= p^2."""
    _check_p(p)
    return min(1.0, p - 2.0), p * p


def lemma_sandwich(p: float, n: int = 200, margin: float = 1e-3) -> float:
    """Largest violation of the B bounds on an n x n grid over [margin, 1 - margin]^2.

    Returns a value <= 0 when every grid point satisfies both bounds.
    """
    lo, hi = lemma_bounds(p)
    axis = np.linspace(margin, 1.0 - margin, n)
    A, Cg = np.meshgrid(axis, axis, indexing="ij")
    values = _b_stable(A, Cg, p)
    # Relative slack for rounding in the factored form
    slack = 1e-12 * hi
    return float(max(np.max(lo - values), np.max(values - hi))) - slack


def _scan_rows(rows: np.ndarray, axis: np.ndarray, p: float, q: float) -> Tuple[float, float, float]:
    A, Cg = np.meshgrid(rows, axis, indexing="ij")
    values = _log_objective(A, Cg, p, q)
    if not np.any(np.isfinite(values)):
        return math.inf, float(rows[0]), float(axis[0])
    idx = int(np.nanargmin(values))
    i, j = np.unravel_index(idx, values.shape)
    return float(values[i, j]), float(rows[i]), float(axis[j])


def _grid_minimum(p: float, q: float) -> Tuple[float, float, float]:
    """Minimum of the log objective on the coarse interior grid."""
    axis = np.linspace(GRID_MARGIN, 1.0 - GRID_MARGIN, GRID_SIZE)
    chunks = [axis[i:i + GRID_CHUNK] for i in range(0, GRID_SIZE, GRID_CHUNK)]
    results = map_ordered(lambda rows: _scan_rows(rows, axis, p, q), chunks)
    best = results[0]
    for item in results[1:]:
        if item[0] < best[0]:
            best = item
    return best


@dataclass
class _Candidate:
    name: str
    log_value: float
    a: float
    c: float
    converged: bool
    nfev: int
    spread: float
    message: str = ""


def _interior_candidate(p: float, q: float, tol: float) -> _Candidate:
    grid_value, a0, c0 = _grid_minimum(p, q)
    logger.debug(f"Grid minimum log-objective {grid_value!r} at ({a0:.6f}, {c0:.6f})")

    def fn(x: np.ndarray) -> float:
        value = float(_log_objective(x[0], x[1], p, q))
        return value if math.isfinite(value) else math.inf

    bounds = [(GRID_MARGIN, 1.0 - GRID_MARGIN)] * 2
    res = minimize(
        fn, np.array([a0, c0]), method="Nelder-Mead", bounds=bounds,
        options={"xatol": tol, "fatol": tol * 1e-2, "maxiter": 5000, "maxfev": 10000},
    )
    simplex_values = res.final_simplex[1]
    spread = float(np.max(simplex_values) - np.min(simplex_values))
    if res.fun <= grid_value:
        a, c, value = float(res.x[0]), float(res.x[1]), float(res.fun)
    else:
        a, c, value = a0, c0, grid_value
    return _Candidate("interior", value, a, c, bool(res.success), int(res.nfev), spread, str(res.message))


def _edge_candidate(name: str, p: float, q: float, tol: float) -> _Candidate:
    to_ac = EDGES[name]

    def along(s) -> np.ndarray:
        a, c = to_ac(np.atleast_1d(np.asarray(s, dtype=float)))
        values = _log_objective(a, c, p, q)
        corner = (a == 1.0) & (c == 1.0)
        if np.any(corner):
            values = np.where(corner, closure_log_objective(1.0, 1.0, p, q), values)
        return values

    s_grid = np.linspace(0.0, 1.0, EDGE_POINTS)
    values = along(s_grid)
    i = int(np.nanargmin(values))
    best_s, best_value = float(s_grid[i]), float(values[i])
    lo = s_grid[max(i - 1, 0)]
    hi = s_grid[min(i + 1, EDGE_POINTS - 1)]

    res = minimize_scalar(lambda s: float(along(s)[0]), bounds=(lo, hi), method="bounded",
                          options={"xatol": tol, "maxiter": 500})
    if res.fun < best_value:
        best_s, best_value = float(res.x), float(res.fun)
    step = min(tol, best_s, 1.0 - best_s)
    spread = 0.0
    if step > 0.0:
        neighbours = along(np.array([best_s - step, best_s + step]))
        spread = float(np.max(np.abs(neighbours - best_value)))
    a, c = to_ac(np.array([best_s]))
    return _Candidate(name, best_value, float(a[0]), float(c[0]), bool(res.success),
                      int(res.nfev) + EDGE_POINTS, spread, str(getattr(res, "message", "")))


def _normal_limit(candidate: _Candidate, p: float, q: float) -> RichardsonEstimate:
    """Extrapolate the interior objective toward a boundary point on a=1 or c=1."""
    a, c = candidate.a, candidate.c
    da = -1.0 if a == 1.0 else 0.0
    dc = -1.0 if c == 1.0 else 0.0

    def fn(e: float) -> float:
        # Stay inside the square when the point also touches a zero edge
        return math.exp(float(_log_objective(a + da * e, c + dc * e, p, q)))

    return richardson_limit(fn)


def compute_c(p: float, q: float, tol: float = DEFAULT_TOL) -> SharpConstantResult:
    """Compute C(p, q) as the minimum of the objective over the closed square.

    A 512 x 512 grid on [1e-6, 1 - 1e-6]^2 seeds a bounded Nelder-Mead
    refinement; each edge is scanned on 513 points and polished with a
    bounded scalar minimizer. The smallest candidate wins.

    Args:
        p: Lower exponent, 2 < p
        q: Upper exponent, p < q
        tol: Target accuracy in [1e-10, 1e-3]

    Returns:
        SharpConstantResult

    Raises:
        ParameterError: If p, q or tol is out of range
        SolverError: If the winning candidate did not converge
    """
    validate_exponents(p, q)
    if not 1e-10 <= tol <= 1e-3:
        raise ParameterError(f"tol must lie in [1e-10, 1e-3], got {tol!r}")

    candidates = [_interior_candidate(p, q, tol)]
    candidates.extend(_edge_candidate(name, p, q, tol) for name in EDGES)
    for cand in candidates:
        logger.debug(f"{cand.name}: log-objective {cand.log_value!r} at ({cand.a:.9f}, {cand.c:.9f})")

    best = candidates[0]
    for cand in candidates[1:]:
        if cand.log_value < best.log_value:
            best = cand

    diagnostics = {
        "p": p, "q": q, "tol": tol,
        "candidates": {c.name: {"log_value": c.log_value, "a": c.a, "c": c.c,
                                "converged": c.converged, "nfev": c.nfev, "message": c.message}
                       for c in candidates},
    }
    if not best.converged:
        raise SolverError(f"minimization of C({p:g}, {q:g}) did not converge ({best.name}: {best.message})",
                          diagnostics)

    c_value = math.exp(best.log_value)
    achieved = best.spread * c_value

    if best.a == 1.0 or best.c == 1.0:
        limit = _normal_limit(best, p, q)
        mismatch = abs(limit.value - c_value)
        logger.debug(f"Extrapolated boundary value {limit.value!r} (err {limit.error:.2e}), direct {c_value!r}")
        if mismatch > 10.0 * tol + 1e-9:
            diagnostics["richardson"] = {"value": limit.value, "error": limit.error}
            raise SolverError(f"boundary value {c_value!r} disagrees with its extrapolated limit {limit.value!r}",
                              diagnostics)
        achieved = max(achieved, mismatch)

    lower = c_lower_bound(p, q)
    if c_value < lower - LOWER_BOUND_SLACK:
        raise SolverError(f"C({p:g}, {q:g}) = {c_value!r} is below the closed-form bound {lower!r}", diagnostics)

    result = SharpConstantResult(
        p=p, q=q, c_value=c_value, argmin=(best.a, best.c),
        iterations=sum(c.nfev for c in candidates), achieved_tol=achieved,
        lower_bound=lower, tol=tol, candidate=best.name,
    )
    logger.info(f"C({p:g}, {q:g}) = {c_value:.12g} at (a, c) = ({best.a:.9f}, {best.c:.9f}) [{best.name}]")
    return result


def extremal_two_point(result: SharpConstantResult, margin: float = GRID_MARGIN) -> TwoPointRV:
    """Two-point variable at the minimizer, pulled ``margin`` inside the square."""
    a = min(max(result.a_star, margin), 1.0 - margin)
    c = min(max(result.c_star, margin), 1.0 - margin)
    return TwoPointRV.from_ac(a, c)


def c46_rational(a: float, c: float) -> float:
    """(c(2c-1)a^2 - (c+1)^2 a + 3c^2 - c + 2) / (3(1+c)(1+a)(1+ac))."""
    num = c * (2.0 * c - 1.0) * a * a - (c + 1.0) ** 2 * a + 3.0 * c * c - c + 2.0
    return num / (3.0 * (1.0 + c) * (1.0 + a) * (1.0 + a * c))


def c46_identity_residual(a: float, c: float) -> float:
    """Objective(a, c, 4, 6) - 1/3, checked against its closed rational form.

    Boundary points of the closed square return the rational form, which
    is the continuous extension of the residual.

    Raises:
        DomainError: If (a, c) lies outside [0, 1]^2
        IdentityError: If direct evaluation and the rational form disagree
    """
    _check_closed(a, c)
    rational = c46_rational(a, c)
    if not (DOMAIN_MARGIN <= a <= 1.0 - DOMAIN_MARGIN and DOMAIN_MARGIN <= c <= 1.0 - DOMAIN_MARGIN):
        return rational
    value = objective(a, c, 4.0, 6.0)
    residual = value - 1.0 / 3.0
    if abs(residual - rational) > IDENTITY_RTOL * value:
        raise IdentityError(
            f"C(4,6) identity mismatch at (a, c) = ({a!r}, {c!r})",
            {"objective": value, "residual": residual, "rational": rational},
        )
    return residual


def torsion_matrix(t: float, p: float, q: float) -> np.ndarray:
    """Rows are derivatives of order 1..4 of (t^2, t^p, t^q, -t)."""
    rows = []
    for order in range(1, 5):
        row = []
        for power, sign in ((2.0, 1.0), (p, 1.0), (q, 1.0), (1.0, -1.0)):
            coeff = 1.0
            for i in range(order):
                coeff *= power - i
            row.append(sign * coeff * t ** (power - order) if coeff != 0.0 else 0.0)
        rows.append(row)
    return np.array(rows)


def torsion_closed_forms(t: float, p: float, q: float) -> Tuple[float, float, float, float]:
    a11 = 2.0 * t
    a22 = 2.0 * p * (p - 2.0) * t ** (p - 1.0)
    a33 = 2.0 * p * q * (p - 2.0) * (q - 2.0) * (q - p) * t ** (p + q - 4.0)
    a44 = 2.0 * p * (p - 1.0) * (p - 2.0) * q * (q - 1.0) * (q - 2.0) * (q - p) * t ** (p + q - 7.0)
    return a11, a22, a33, a44


def torsion_minors(t: float, p: float, q: float) -> TorsionReport:
    """Leading principal minors of the derivative matrix of the moment curve.

    The 2x2 closed form is 2p(p-2) t^(p-1); the commonly displayed
    2p(p-1) t^(p-1) is kept in the report for comparison.

    Raises:
        DomainError: If t is not in (0, 1)
        ParameterError: If not 2 < p < q
    """
    validate_exponents(p, q)
    if not 0.0 < t < 1.0:
        raise DomainError(f"t must lie in (0, 1), got {t!r}")
    m = torsion_matrix(t, p, q)
    minors = tuple(float(np.linalg.det(m[:k, :k])) for k in range(1, 5))
    closed = torsion_closed_forms(t, p, q)
    max_rel_err = max(abs(x - y) / abs(y) for x, y in zip(minors, closed))
    return TorsionReport(
        t=t, p=p, q=q, minors=minors, closed_forms=closed, max_rel_err=max_rel_err,
        displayed_a22=2.0 * p * (p - 1.0) * t ** (p - 1.0),
    )
