"""plaplab: desk-scale numerical checks for positive radial solutions of
p-Laplacian type equations near an isolated singular point."""

from ._kernels import BACKEND
from .core import (
    CaseInfo,
    CaseKind,
    ProblemParams,
    RadialFunction,
    XtFamily,
    Zeta,
    alpha_star,
    classify_case,
    fundamental_solution,
    radial_p_laplacian,
)
from .potentials import (
    ConditionStatus,
    ConditionVerdict,
    Family,
    PotentialSpec,
    SignRule,
    check_dini_condition,
    check_fuchsian,
    check_kato_condition,
    eval_potential,
    rescaled_potential_norm,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CaseInfo",
    "CaseKind",
    "ConditionStatus",
    "ConditionVerdict",
    "Family",
    "PotentialSpec",
    "ProblemParams",
    "RadialFunction",
    "SignRule",
    "XtFamily",
    "Zeta",
    "alpha_star",
    "check_dini_condition",
    "check_fuchsian",
    "check_kato_condition",
    "classify_case",
    "eval_potential",
    "fundamental_solution",
    "radial_p_laplacian",
    "rescaled_potential_norm",
    "__version__",
]
