"""Problem loading, verification pipeline, reports and the command line."""

from .problems import BUILTIN_EXAMPLES, Problem, ProblemSpec, convection_diffusion, laplacian_1d, load_problem
from .report import CheckRecord, VerificationReport, emit_report, render_report
from .verify import run_verification

__all__ = [
    "BUILTIN_EXAMPLES",
    "Problem",
    "ProblemSpec",
    "convection_diffusion",
    "laplacian_1d",
    "load_problem",
    "CheckRecord",
    "VerificationReport",
    "emit_report",
    "render_report",
    "run_verification",
]
