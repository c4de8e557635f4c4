from __future__ import annotations

import dataclasses

import numpy as np
import numpy.typing as npt
import scipy.linalg

from ovqite.exceptions import DimensionError, SolverError, ValidationError


@dataclasses.dataclass(frozen=True, slots=True)
class PinvConfig:
    """Singular values below ``sigma_max * rcond`` are discarded."""

    rcond: float = 1e-4

    def __post_init__(self) -> None:
        if not 0 < self.rcond < 1:
            raise ValidationError(f"rcond must lie in (0, 1), got {self.rcond}.")


@dataclasses.dataclass(frozen=True, slots=True)
class SolveReport:
    singular_values: npt.NDArray[np.float64]
    kept: int
    residual: float
    threshold: float

    @property
    def truncated_all(self) -> bool:
        return self.kept == 0

    @property
    def condition(self) -> float:
        """Ratio of the largest to the smallest kept singular value."""
        if self.kept == 0:
            return float("inf")
        return float(self.singular_values[0] / self.singular_values[self.kept - 1])


def pinv_solve(
    a: npt.ArrayLike, b: npt.ArrayLike, cfg: PinvConfig | None = None
) -> tuple[npt.NDArray[np.float64], SolveReport]:
    """Least-norm solution of ``a x = b`` through a truncated SVD."""
    cfg = cfg or PinvConfig()
    matrix = np.atleast_2d(np.asarray(a, dtype=np.float64))
    rhs = np.asarray(b, dtype=np.float64).reshape(-1)

    if matrix.size == 0:
        raise ValidationError("Cannot solve an empty system.")

    if matrix.shape[0] != rhs.size:
        rows = matrix.shape[0]
        msg = f"Matrix has {rows} rows but the right-hand side has {rhs.size}."
        raise DimensionError(msg)

    if not (np.all(np.isfinite(matrix)) and np.all(np.isfinite(rhs))):
        raise SolverError("The linear system contains non-finite entries.")

    try:
        u, sigma, vt = scipy.linalg.svd(
            matrix, full_matrices=False, lapack_driver="gesvd"
        )
    except np.linalg.LinAlgError as error:
        raise SolverError("Singular value decomposition did not converge.") from error

    threshold = float(sigma[0] * cfg.rcond) if sigma.size else 0.0
    keep = sigma >= threshold if sigma[0] > 0 else np.zeros_like(sigma, dtype=bool)
    kept = int(keep.sum())

    inverse = np.zeros_like(sigma)
    inverse[keep] = 1 / sigma[keep]
    x = vt.T @ (inverse * (u.T @ rhs))

    residual = float(np.linalg.norm(matrix @ x - rhs))
    return x, SolveReport(sigma, kept, residual, threshold)
