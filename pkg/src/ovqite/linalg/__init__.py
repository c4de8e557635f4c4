from ovqite.linalg.eiv import (
    EivProblem,
    EivResult,
    eiv_gradient,
    eiv_log_likelihood,
    eiv_solve,
    residual_covariance,
)
from ovqite.linalg.pinv import PinvConfig, SolveReport, pinv_solve

__all__ = [
    "EivProblem",
    "EivResult",
    "eiv_gradient",
    "eiv_log_likelihood",
    "eiv_solve",
    "PinvConfig",
    "pinv_solve",
    "residual_covariance",
    "SolveReport",
]
