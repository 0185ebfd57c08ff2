"""Randomized invariant suites behind ``momentgap verify``

Every suite draws from its own child of one ``SeedSequence``, so a run is
fully determined by (seed, samples, inject_c, rv) and adding a suite does
not shift the streams of the others. Reports carry no timings.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .errors import IdentityError, MomentGapError
from .expsums import (
    BRUTE_FORCE_MAX_SIZE,
    brute_force_energy,
    energy,
    exact_even_moment,
    quadrature_norm,
    random_set,
    squares_set,
    theorem_upper_bound,
)
from .hypercube import (
    DELTA_WINDOW,
    boolean_functions,
    chain_bound,
    partial_difference,
    poincare_ratio,
    random_cube_function,
)
from .models import CheckResult, SharpConstantResult
from .rademacher import (
    BiasedSumSpec,
    biased_xi,
    dax1_rhs,
    exact_sum_distribution,
    fourth_moment,
    khinchin6_check,
    sixth_moment_bound,
    xi_fourth_moment,
)
from .rv_core import (
    FiniteRV,
    gap_sweep,
    handel_rhs,
    lp_norm,
    main_inequality_rhs,
    normalize_l2,
    random_batch,
    random_finite_rv,
    two_point,
)
from .sharp_constant import (
    c46_identity_residual,
    compute_c,
    extremal_two_point,
    lemma_sandwich,
    torsion_minors,
)

logger = logging.getLogger(__name__)

GAP_SLACK = 1e-12
C46 = 1.0 / 3.0
SWEEP_FACTOR = 10
SWEEP_CHUNK = 50000
EXTRA_PAIRS = ((3.0, 5.0), (5.0, 9.0))
EXTRA_PAIR_SAMPLES = 10000
LEMMA_EXPONENTS = (2.1, 2.5, 3.0, 4.0, 7.3, 12.0)
LEMMA_GRID = 500
TORSION_SAMPLES = 100
TORSION_RTOL = 1e-8
SHARPNESS_TOL = 1e-4
EXTREMAL_KS = range(4, 21)
EFFECTIVE_RTOL = 1e-4
HANDEL_SAMPLES = 10000
RADEMACHER_SPECS = 1000
RADEMACHER_MAX_TERMS = 12
MOMENT_RTOL = 1e-10
CUBE_SAMPLES = 10000
CUBE_MAX_DIMENSION = 10
POINCARE_CEILING = math.pi / 2.0 - DELTA_WINDOW[0]
EXPSUM_TOL = 1e-6
EXPSUM_L4_TOL = 1e-8
EXPSUM_L4_SETS = 50


@dataclass
class VerifyContext:
    """Inputs shared by all suites.

    Attributes:
        samples: Base sample count; suites derive their own counts from it
        constant: Constant tested against (4, 6)
        rv: Optional user variable checked in the main-inequality suite
        constants: C(p, q) results computed once and shared between suites
    """
    samples: int
    constant: float = C46
    rv: Optional[FiniteRV] = None
    constants: Dict[Tuple[float, float], SharpConstantResult] = field(default_factory=dict)

    def sharp(self, p: float, q: float) -> SharpConstantResult:
        key = (p, q)
        if key not in self.constants:
            self.constants[key] = compute_c(p, q)
        return self.constants[key]

    def scaled(self, cap: int, divisor: int = 1, floor: int = 1) -> int:
        """min(cap, samples // divisor), but at least ``floor``."""
        return max(floor, min(cap, self.samples // divisor))


Suite = Callable[[np.random.Generator, VerifyContext], List[CheckResult]]


def _atoms_witness(values: np.ndarray, probs: np.ndarray) -> Dict[str, Any]:
    mask = probs > 0.0
    return {"atoms": [[float(v), float(r)] for v, r in zip(values[mask], probs[mask])]}


def _sweep(rng: np.random.Generator, check: CheckResult, count: int, p: float, q: float, C: float) -> None:
    done = 0
    while done < count:
        size = min(SWEEP_CHUNK, count - done)
        values, probs = random_batch(rng, size)
        gaps = gap_sweep(values, probs, p, q, C)
        check.record_many(-gaps - GAP_SLACK, lambda i: _atoms_witness(values[i], probs[i]))
        done += size


def main_inequality_suite(rng: np.random.Generator, ctx: VerifyContext) -> List[CheckResult]:
    """Near-extremal two-point variables, then seeded sweeps of the refined inequality."""
    main = CheckResult(f"rv_core.main_inequality(4,6,C={ctx.constant:g})")

    # Two-point variables near the corner a -> 1, c = 1/2; recorded first so they lead the witnesses
    for k in EXTREMAL_KS:
        a = 1.0 - 2.0 ** -k
        report = main_inequality_rhs(two_point(a, 2.0).to_rv(), 4.0, 6.0, ctx.constant)
        main.record(-report.gap - GAP_SLACK, {"a": a, "c": 0.5, "gap": report.gap,
                                              "effective_constant": report.effective_constant})
    _sweep(rng, main, SWEEP_FACTOR * ctx.samples, 4.0, 6.0, ctx.constant)

    if ctx.rv is not None:
        report = main_inequality_rhs(normalize_l2(ctx.rv), 4.0, 6.0, ctx.constant)
        main.record(-report.gap - GAP_SLACK, {"source": "user", **report.to_dict()})

    checks = [main]
    for p, q in EXTRA_PAIRS:
        result = ctx.sharp(p, q)
        check = CheckResult(f"rv_core.main_inequality({p:g},{q:g})")
        _sweep(rng, check, ctx.scaled(EXTRA_PAIR_SAMPLES), p, q, result.c_value)
        checks.append(check)
    return checks


def norm_suite(rng: np.random.Generator, ctx: VerifyContext) -> List[CheckResult]:
    """Monotonicity of p -> ||X||_p, the two-point identities and the sixth-moment bound on ||X||_1."""
    exponents = (0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0)
    mono = CheckResult("rv_core.norm_monotonicity")
    for _ in range(ctx.scaled(1000, 10)):
        rv = random_finite_rv(rng)
        norms = [lp_norm(rv, p) for p in exponents]
        worst = max(lo - hi - 1e-12 * hi for lo, hi in zip(norms, norms[1:]))
        mono.record(worst, {"atoms": rv.atoms})

    identities = CheckResult("rv_core.two_point_identities")
    for _ in range(ctx.scaled(10000)):
        a = float(rng.uniform(1e-3, 1.0 - 1e-3))
        b = float(1.0 + rng.exponential(3.0) + 1e-3)
        x = two_point(a, b)
        violation = max(abs(x.second_moment - 1.0), abs(x.mean - x.mean_closed_form) / x.mean_closed_form)
        identities.record(violation - 1e-12, {"a": a, "b": b})

    handel = CheckResult("rv_core.handel_bound")
    for _ in range(ctx.scaled(HANDEL_SAMPLES, 10)):
        rv = normalize_l2(random_finite_rv(rng))
        l1 = rv.moment(1.0)
        bound = handel_rhs(rv)
        refined = main_inequality_rhs(rv, 4.0, 6.0, C46)
        handel.record(l1 - bound - 1e-12, {"atoms": rv.atoms, "l1": l1, "bound": bound, "refined_rhs": refined.rhs})
    return [mono, identities, handel]


def sharp_constant_suite(rng: np.random.Generator, ctx: VerifyContext) -> List[CheckResult]:
    """Lemma sandwich, torsion minors, the C(4,6) identity and sharpness of C(p, q)."""
    lemma = CheckResult("sharp_constant.lemma_sandwich")
    for p in LEMMA_EXPONENTS:
        lemma.record(lemma_sandwich(p, n=LEMMA_GRID), {"p": p, "n": LEMMA_GRID})

    torsion = CheckResult("sharp_constant.torsion_minors")
    for _ in range(TORSION_SAMPLES):
        t = float(rng.uniform(0.1, 0.9))
        p = float(rng.uniform(2.2, 6.0))
        q = float(p + rng.uniform(0.2, 4.0))
        report = torsion_minors(t, p, q)
        violation = max(report.max_rel_err - TORSION_RTOL, -min(report.minors))
        torsion.record(violation, report.to_dict())

    identity = CheckResult("sharp_constant.c46_identity")
    for _ in range(ctx.scaled(1000, 10)):
        a, c = (float(x) for x in rng.uniform(1e-3, 1.0 - 1e-3, size=2))
        try:
            residual = c46_identity_residual(a, c)
        except IdentityError as e:
            identity.record(math.inf, {"a": a, "c": c, **e.diagnostics})
            continue
        identity.record(-residual - 1e-15, {"a": a, "c": c, "residual": residual})

    sharpness = CheckResult("sharp_constant.sharpness")
    for p, q in ((4.0, 6.0),) + EXTRA_PAIRS:
        result = ctx.sharp(p, q)
        report = main_inequality_rhs(extremal_two_point(result).to_rv(), p, q, result.c_value)
        below = result.c_value - result.lower_bound
        drift = abs(report.effective_constant - result.c_value) / result.c_value
        sharpness.record(max(drift - EFFECTIVE_RTOL, abs(report.gap) - SHARPNESS_TOL, -below - 1e-9),
                         {**result.to_dict(), "gap": report.gap, "effective_constant": report.effective_constant})
    return [lemma, torsion, identity, sharpness]


def _random_spec(rng: np.random.Generator) -> BiasedSumSpec:
    n = int(rng.integers(1, RADEMACHER_MAX_TERMS + 1))
    coeffs = rng.standard_normal(n)
    coeffs[coeffs == 0.0] = 1.0
    return BiasedSumSpec.create(float(rng.uniform(0.02, 0.98)), coeffs.tolist())


def rademacher_suite(rng: np.random.Generator, ctx: VerifyContext) -> List[CheckResult]:
    """dax1 bound, moment identities and the Khinchin sixth-moment check."""
    dax1 = CheckResult("rademacher.dax1_bound")
    fourth = CheckResult("rademacher.fourth_moment")
    sixth = CheckResult("rademacher.sixth_moment_bound")
    khinchin = CheckResult("rademacher.khinchin6")
    xi = CheckResult("rademacher.xi_moments")
    for _ in range(ctx.scaled(RADEMACHER_SPECS, 10)):
        spec = _random_spec(rng)
        rv = exact_sum_distribution(spec)
        witness = spec.to_dict()
        dax1.record(rv.moment(1.0) - dax1_rhs(spec.bias) - 1e-12, witness)
        formula = fourth_moment(spec)
        fourth.record(abs(rv.moment(4.0) - formula) / formula - MOMENT_RTOL, witness)
        sixth.record(rv.moment(6.0) - sixth_moment_bound(spec.bias), witness)
        lhs, rhs = khinchin6_check(spec.coeffs)
        khinchin.record(lhs - rhs * (1.0 + 1e-12), witness)

        law = biased_xi(spec.bias)
        m4 = xi_fourth_moment(spec.bias)
        xi.record(max(abs(law.moment(1)), abs(law.moment(2) - 1.0), abs(law.moment(4) - m4) / m4) - 1e-12,
                  {"bias": spec.bias})
    return [dax1, fourth, sixth, khinchin, xi]


def hypercube_suite(rng: np.random.Generator, ctx: VerifyContext) -> List[CheckResult]:
    """Exhaustive Boolean n = 3 and random real-valued functions against the improved constant."""
    boolean = CheckResult("hypercube.boolean_n3")
    for f in boolean_functions(3):
        bound = chain_bound(f)
        ratio = 0.0 if f.is_constant else poincare_ratio(f)
        boolean.record(max(bound.lhs - bound.rhs, ratio - POINCARE_CEILING), {"values": f.values.tolist()})

    ratios = CheckResult("hypercube.random_ratio")
    zero_sum = CheckResult("hypercube.partial_difference_mean")
    for _ in range(ctx.scaled(CUBE_SAMPLES)):
        n = int(rng.integers(1, CUBE_MAX_DIMENSION + 1))
        f = random_cube_function(rng, n)
        ratios.record(poincare_ratio(f) - POINCARE_CEILING, {"n": n, "values": f.values.tolist()})
        j = int(rng.integers(1, n + 1))
        scale = float(np.max(np.abs(f.values)))
        zero_sum.record(abs(float(np.mean(partial_difference(f, j).values))) - 1e-12 * scale, {"n": n, "j": j})
    return [boolean, ratios, zero_sum]


def expsums_suite(rng: np.random.Generator, ctx: VerifyContext) -> List[CheckResult]:
    """Energy oracles, quadrature against exact moments and the end-to-end theorem bound."""
    brute = CheckResult("expsums.brute_force_energy")
    for _ in range(20):
        size = int(rng.integers(2, BRUTE_FORCE_MAX_SIZE + 1))
        S = random_set(rng, size, int(rng.integers(size, 40)))
        for k in (2, 3):
            brute.record(float(abs(energy(S, k) - brute_force_energy(S, k))),
                         {"elements": list(S.elements), "k": k})

    quad4 = CheckResult("expsums.quadrature_l4")
    invariance = CheckResult("expsums.shift_reflection")
    for _ in range(EXPSUM_L4_SETS):
        size = int(rng.integers(2, 13))
        S = random_set(rng, size, int(rng.integers(size, 60)))
        exact = float(exact_even_moment(S, 2))
        value, _ = quadrature_norm(S, 4.0, EXPSUM_L4_TOL / 16.0)
        quad4.record(abs(value ** 4 - exact) - EXPSUM_L4_TOL, {"elements": list(S.elements), "exact": exact})
        t = int(rng.integers(-1000, 1000))
        moved = [exact_even_moment(S.shifted(t), 3), exact_even_moment(S.reflected(), 3)]
        invariance.record(0.0 if all(m == exact_even_moment(S, 3) for m in moved) else 1.0,
                          {"elements": list(S.elements), "shift": t})

    bound = CheckResult("expsums.theorem_bound")
    m_max = min(100, max(10, ctx.samples // 100))
    for m in range(2, m_max + 1):
        S = squares_set(m)
        l1, _ = quadrature_norm(S, 1.0, EXPSUM_TOL)
        upper = theorem_upper_bound(S, 4.0, 6.0, C46, EXPSUM_TOL)
        bound.record(l1 - upper - EXPSUM_TOL, {"set": "squares", "m": m, "l1": l1, "bound": upper})
    for _ in range(min(100, max(10, ctx.samples // 100))):
        size = int(rng.integers(2, 31))
        S = random_set(rng, size, int(rng.integers(size, 200)))
        l1, _ = quadrature_norm(S, 1.0, EXPSUM_TOL)
        upper = theorem_upper_bound(S, 4.0, 6.0, C46, EXPSUM_TOL)
        bound.record(l1 - upper - EXPSUM_TOL, {"elements": list(S.elements), "l1": l1, "bound": upper})
    return [brute, quad4, invariance, bound]


SUITES: Tuple[Tuple[str, Suite], ...] = (
    ("rv_core", main_inequality_suite),
    ("norms", norm_suite),
    ("sharp_constant", sharp_constant_suite),
    ("rademacher", rademacher_suite),
    ("hypercube", hypercube_suite),
    ("expsums", expsums_suite),
)


def run_suites(seed: int, samples: int, inject_c: Optional[float] = None,
               rv: Optional[FiniteRV] = None) -> List[CheckResult]:
    """Run every suite in a fixed order.

    A suite that raises is reported as one failed check carrying the
    error, and the remaining suites still run.
    """
    ctx = VerifyContext(samples=samples, constant=C46 if inject_c is None else inject_c, rv=rv)
    children = np.random.SeedSequence(seed).spawn(len(SUITES))
    results: List[CheckResult] = []
    for (name, suite), child in zip(SUITES, children):
        try:
            checks = suite(np.random.default_rng(child), ctx)
        except MomentGapError as e:
            logger.error(f"Suite {name} aborted: {e}")
            crashed = CheckResult(f"{name}.aborted")
            crashed.record(math.inf, {"error": type(e).__name__, "message": str(e),
                                      **getattr(e, "diagnostics", {})})
            checks = [crashed]
        for check in checks:
            status = "ok" if check.passed else f"{len(check.failures)} failing"
            logger.info(f"{check.name}: {check.count} checks, {status}")
        results.extend(checks)
    return results


def verify_report(seed: int, samples: int, inject_c: Optional[float] = None,
                  rv: Optional[FiniteRV] = None) -> Dict[str, Any]:
    """JSON-ready summary of run_suites."""
    checks = run_suites(seed, samples, inject_c, rv)
    return {
        "seed": seed,
        "samples": samples,
        "constant_46": C46 if inject_c is None else inject_c,
        "total_checks": sum(c.count for c in checks),
        "failed_checks": sum(1 for c in checks if not c.passed),
        "passed": all(c.passed for c in checks),
        "checks": [c.to_dict() for c in checks],
    }
