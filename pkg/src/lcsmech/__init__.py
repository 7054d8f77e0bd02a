"""Locally conformally symplectic mechanics on cotangent bundles."""

from .expr import Expr, ExprError, evaluate, eval_jet, parse, to_source
from .lcs import (
    Chart,
    LcsModel,
    PhasePoint,
    from_chart,
    hamiltonian_vf,
    lee_vf,
    local_data,
    omega_theta_at,
    sharp,
    flat,
    to_chart,
)
from .dynamics import IntegratorConfig, Trajectory, integrate_phase, integrate_local, diagnostics
from .hj import SectionGamma, CompleteSolution, hj_verify, complete_validate, extract_f
from .jacobi import jacobi_bracket, jacobi_identity_residual, local_bracket
from .modelfile import load_model, validate_model

__version__ = "0.1.0"

__all__ = [
    "Expr",
    "ExprError",
    "parse",
    "to_source",
    "evaluate",
    "eval_jet",
    "Chart",
    "LcsModel",
    "PhasePoint",
    "omega_theta_at",
    "flat",
    "sharp",
    "lee_vf",
    "hamiltonian_vf",
    "to_chart",
    "from_chart",
    "local_data",
    "IntegratorConfig",
    "Trajectory",
    "integrate_phase",
    "integrate_local",
    "diagnostics",
    "SectionGamma",
    "CompleteSolution",
    "hj_verify",
    "complete_validate",
    "extract_f",
    "jacobi_bracket",
    "jacobi_identity_residual",
    "local_bracket",
    "load_model",
    "validate_model",
]
