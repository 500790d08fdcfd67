"""Hardy Z(t), Jacob's ladder and the area balance of Z^2(t) around its mean value."""

from .errors import (
    AccuracyError,
    BracketError,
    CheckpointMismatch,
    DegenerateSetError,
    DomainError,
    GridBudgetError,
    QuadratureError,
    ZetaLadderError,
)
from .ladder import (
    LadderPoint,
    TkaReport,
    hl_main_term,
    integral_equation_residual,
    sigma_balasubramanian,
    sigma_moser,
    solve_ladder_parameter,
    solve_phi,
    tka_check,
)
from .oscillation import (
    AreaReport,
    SignDecomposition,
    area_balance_report,
    areas,
    conditional_diagnostics,
    decompose_sign_sets,
    eta_values,
    fourth_moment_check,
    reconstruct_areas_via_eta,
)
from .quad import QuadConfig, QuadResult, SweepCheckpoint, weighted_z2, z2_prefix, z4_prefix
from .zeta_core import EvalConfig, ZEval, gram_point, hardy_z, oscillation_scale, theta

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "AreaReport",
    "BracketError",
    "CheckpointMismatch",
    "DegenerateSetError",
    "DomainError",
    "EvalConfig",
    "GridBudgetError",
    "LadderPoint",
    "QuadConfig",
    "QuadResult",
    "QuadratureError",
    "SignDecomposition",
    "SweepCheckpoint",
    "TkaReport",
    "ZEval",
    "ZetaLadderError",
    "area_balance_report",
    "areas",
    "conditional_diagnostics",
    "decompose_sign_sets",
    "eta_values",
    "fourth_moment_check",
    "gram_point",
    "hardy_z",
    "hl_main_term",
    "integral_equation_residual",
    "oscillation_scale",
    "reconstruct_areas_via_eta",
    "sigma_balasubramanian",
    "sigma_moser",
    "solve_ladder_parameter",
    "solve_phi",
    "theta",
    "tka_check",
    "weighted_z2",
    "z2_prefix",
    "z4_prefix",
]
