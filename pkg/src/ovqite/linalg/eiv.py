"""Maximum-likelihood solution of linear systems with noisy coefficients.

Both the observed matrix ``A`` and the observed targets ``b`` carry Gaussian
noise. For a candidate ``x`` the residual ``d = b - A x`` is normal with
covariance ``Omega_D = Omega_B + x^T Omega_A x``, where ``Omega_A`` holds
``Cov(A[i, s], A[j, l])`` at index ``[i, s, j, l]``. An optional Gaussian prior
of variance ``lam`` on ``x`` regularizes the likelihood.
"""

from __future__ import annotations

import dataclasses
import logging
import math

import numpy as np
import numpy.typing as npt
import scipy.linalg

from ovqite.exceptions import (
    DefinitenessError,
    DimensionError,
    SolverError,
    ValidationError,
)

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-10


@dataclasses.dataclass(frozen=True, eq=False)
class EivProblem:
    a: npt.NDArray[np.float64]
    b: npt.NDArray[np.float64]
    omega_b: npt.NDArray[np.float64]
    omega_a: npt.NDArray[np.float64]
    lam: float = math.inf

    def __post_init__(self) -> None:
        a = np.atleast_2d(np.asarray(self.a, dtype=np.float64))
        m, k = a.shape
        b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        omega_b = np.asarray(self.omega_b, dtype=np.float64)
        omega_a = np.asarray(self.omega_a, dtype=np.float64)

        if b.size != m:
            raise DimensionError(f"Matrix has {m} rows but b has {b.size} entries.")
        if omega_b.shape != (m, m):
            msg = f"omega_b must have shape {(m, m)}, got {omega_b.shape}."
            raise DimensionError(msg)

        if omega_a.shape == (m * k, m * k):
            omega_a = omega_a.reshape(m, k, m, k)
        elif omega_a.shape != (m, k, m, k):
            expected = f"{(m, k, m, k)} or {(m * k, m * k)}"
            msg = f"omega_a must have shape {expected}, got {omega_a.shape}."
            raise DimensionError(msg)

        if not np.allclose(omega_b, omega_b.T, atol=SYMMETRY_TOLERANCE):
            raise ValidationError("omega_b must be symmetric.")

        flat = omega_a.reshape(m * k, m * k)
        if not np.allclose(flat, flat.T, atol=SYMMETRY_TOLERANCE):
            msg = "omega_a must be symmetric under swapping its index pairs."
            raise ValidationError(msg)

        if not self.lam > 0:
            msg = f"The prior variance must be positive, got {self.lam}."
            raise ValidationError(msg)

        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "omega_b", omega_b)
        object.__setattr__(self, "omega_a", omega_a)

    @classmethod
    def diagonal(
        cls,
        a: npt.ArrayLike,
        b: npt.ArrayLike,
        var_a: npt.ArrayLike,
        var_b: npt.ArrayLike,
        lam: float = math.inf,
        floor: float = 0.0,
    ) -> EivProblem:
        """Independent noise on every entry; ``var_b`` is floored at ``floor``."""
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        var_a = np.asarray(var_a, dtype=np.float64).reshape(-1)
        var_b = np.maximum(np.asarray(var_b, dtype=np.float64).reshape(-1), floor)

        if var_a.size != a.size:
            raise DimensionError(f"Expected {a.size} variances of A, got {var_a.size}.")

        return cls(a, b, np.diag(var_b), np.diag(var_a), lam)

    @property
    def shape(self) -> tuple[int, int]:
        m, k = self.a.shape
        return m, k

    @property
    def prior_precision(self) -> float:
        return 0.0 if math.isinf(self.lam) else 1 / self.lam


def residual_covariance(p: EivProblem, x: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """``Omega_B + x^T Omega_A x`` as a congruence with ``kron(I_m, x)``."""
    m, k = p.shape
    values = _check_vector(p, x)
    lift = np.kron(np.eye(m), values[:, None])
    flat = p.omega_a.reshape(m * k, m * k)
    covariance: npt.NDArray[np.float64] = p.omega_b + lift.T @ flat @ lift
    return (covariance + covariance.T) / 2


def _check_vector(p: EivProblem, x: npt.ArrayLike) -> npt.NDArray[np.float64]:
    values = np.asarray(x, dtype=np.float64).reshape(-1)
    if values.size != p.shape[1]:
        raise DimensionError(f"Expected {p.shape[1]} unknowns, got {values.size}.")
    return values


def _factor(
    covariance: npt.NDArray[np.float64],
) -> tuple[npt.NDArray[np.float64], bool]:
    try:
        factor = scipy.linalg.cho_factor(covariance, lower=True)
        return factor  # type: ignore[no-any-return]
    except np.linalg.LinAlgError as error:
        smallest = float(np.linalg.eigvalsh(covariance)[0])
        msg = "The residual covariance is not positive definite."
        raise DefinitenessError(msg, {"min_eigenvalue": f"{smallest:.3g}"}) from error


def eiv_log_likelihood(p: EivProblem, x: npt.ArrayLike) -> float:
    values = _check_vector(p, x)
    residual = p.b - p.a @ values
    factor = _factor(residual_covariance(p, values))

    quadratic = float(residual @ scipy.linalg.cho_solve(factor, residual))
    log_det = 2 * float(np.sum(np.log(np.diag(factor[0]))))
    prior = 0.5 * p.prior_precision * float(values @ values)
    normalization = 0.5 * p.shape[0] * math.log(2 * math.pi)

    return -0.5 * quadratic - 0.5 * log_det - normalization - prior


def covariance_derivatives(p: EivProblem, x: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """``d Omega_D / d x_s`` stacked along the first axis."""
    values = _check_vector(p, x)
    tensor = p.omega_a
    left = np.einsum("isjl,l->sij", tensor, values)
    right = np.einsum("imjs,m->sij", tensor, values)
    return left + right


def eiv_gradient(p: EivProblem, x: npt.ArrayLike) -> npt.NDArray[np.float64]:
    values = _check_vector(p, x)
    residual = p.b - p.a @ values
    m = p.shape[0]

    factor = _factor(residual_covariance(p, values))
    weights = scipy.linalg.cho_solve(factor, np.eye(m))
    weighted = weights @ residual
    derivatives = covariance_derivatives(p, values)

    trace = np.einsum("ij,sji->s", weights, derivatives)
    quadratic = np.einsum("i,sij,j->s", weighted, derivatives, weighted)

    gradient: npt.NDArray[np.float64] = (
        p.a.T @ weighted + 0.5 * quadratic - 0.5 * trace - p.prior_precision * values
    )
    return gradient


@dataclasses.dataclass(frozen=True, slots=True)
class EivResult:
    x: npt.NDArray[np.float64]
    iterations: int
    gradient_norm: float
    log_likelihoods: tuple[float, ...]
    converged: bool

    @property
    def log_likelihood(self) -> float:
        return self.log_likelihoods[-1]


def eiv_solve(
    p: EivProblem,
    max_iters: int = 500,
    tol: float = 1e-8,
    *,
    initial_step: float = 1.0,
    shrink: float = 0.5,
    sufficient_increase: float = 1e-4,
    min_step: float = 1e-20,
) -> EivResult:
    """Gradient ascent on the log-likelihood from ``x = 0`` with Armijo backtracking.

    The search stops once the gradient norm drops to ``tol``, after
    ``max_iters`` accepted steps, or when no step increases the likelihood any
    more. A search that only fails because every trial point loses positive
    definiteness raises :class:`SolverError`.
    """
    if max_iters < 0:
        raise ValidationError(f"max_iters must be non-negative, got {max_iters}.")

    x = np.zeros(p.shape[1])
    current = eiv_log_likelihood(p, x)
    history = [current]
    gradient = eiv_gradient(p, x)
    norm = float(np.linalg.norm(gradient))
    iteration = 0

    while iteration < max_iters and norm > tol:
        step = initial_step
        lost_definiteness = False

        while True:
            candidate = x + step * gradient
            try:
                value = eiv_log_likelihood(p, candidate)
            except DefinitenessError:
                lost_definiteness = True
                value = -math.inf

            if value >= current + sufficient_increase * step * norm**2:
                break

            step *= shrink
            if step < min_step:
                break

        if step < min_step:
            if lost_definiteness:
                diagnostics = {
                    "iteration": iteration,
                    "gradient_norm": f"{norm:.3g}",
                    "log_likelihood": f"{current:.6g}",
                }
                msg = "Line search failed to keep the covariance definite."
                raise SolverError(msg, diagnostics)

            logger.debug("Line search stalled at iteration %d", iteration)
            break

        x, current = candidate, value
        history.append(current)
        gradient = eiv_gradient(p, x)
        norm = float(np.linalg.norm(gradient))
        iteration += 1

    converged = norm <= tol
    logger.debug(
        "EIV solve finished after %d iterations (gradient norm %.3g, converged=%s)",
        iteration,
        norm,
        converged,
    )
    return EivResult(x, iteration, norm, tuple(history), converged)
