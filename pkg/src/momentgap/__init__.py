"""momentgap - sharp constants for a refined Cauchy-Schwarz moment inequality"""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    DegenerateInputError,
    DomainError,
    IdentityError,
    MomentGapError,
    NormalizationError,
    ParameterError,
    QuadratureError,
    SolverError,
)
from .models import (
    CheckResult,
    GapReport,
    QuadratureResult,
    RunConfig,
    SharpConstantResult,
    TorsionReport,
)
from .rv_core import (
    FiniteRV,
    TwoPointRV,
    lp_norm,
    main_inequality_rhs,
    normalize_l2,
    two_point,
)
from .sharp_constant import b_func, c_lower_bound, compute_c, objective

__all__ = [
    "__version__",
    "CapacityError",
    "CheckResult",
    "DegenerateInputError",
    "DomainError",
    "FiniteRV",
    "GapReport",
    "IdentityError",
    "MomentGapError",
    "NormalizationError",
    "ParameterError",
    "QuadratureError",
    "QuadratureResult",
    "RunConfig",
    "SharpConstantResult",
    "SolverError",
    "TorsionReport",
    "TwoPointRV",
    "b_func",
    "c_lower_bound",
    "compute_c",
    "lp_norm",
    "main_inequality_rhs",
    "normalize_l2",
    "objective",
    "two_point",
]
