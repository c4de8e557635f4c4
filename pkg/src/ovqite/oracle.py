"""Exact imaginary-time evolution of small registers."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
import numpy.typing as npt
import scipy.linalg

from ovqite.exceptions import CapabilityError, DimensionError, ValidationError
from ovqite.pauli import PauliString, PauliSum, anticommutator_with_sum
from ovqite.statevector import StateVector, expectation, expectation_sum

#: Largest register evolved with dense matrix exponentials.
MAX_ORACLE_QUBITS = 10

Observable = PauliString | PauliSum


def _initial_density(
    initial: StateVector | npt.ArrayLike, dim: int
) -> npt.NDArray[np.complex128]:
    if isinstance(initial, StateVector):
        rho = initial.density_matrix()
    else:
        rho = np.asarray(initial, dtype=np.complex128)

    if rho.shape != (dim, dim):
        msg = f"Initial state has shape {rho.shape}, expected {(dim, dim)}."
        raise DimensionError(msg)
    if not np.allclose(rho, rho.conj().T, atol=1e-10):
        raise ValidationError("The initial density matrix must be Hermitian.")
    if abs(np.trace(rho) - 1) > 1e-10:
        raise ValidationError("The initial density matrix must have unit trace.")

    return rho


def exact_ite_oracle(
    h: PauliSum,
    initial: StateVector | npt.ArrayLike,
    taus: Sequence[float] | npt.ArrayLike,
    observables: Sequence[Observable],
) -> npt.NDArray[np.float64]:
    """Expectations of ``observables`` under normalized imaginary-time evolution.

    The state at time ``tau`` is ``e^{-tau H} rho e^{-tau H} / Tr[e^{-2 tau H} rho]``.
    Returns an array of shape ``(len(taus), len(observables))``.
    """
    if h.n > MAX_ORACLE_QUBITS:
        limit = MAX_ORACLE_QUBITS
        msg = f"The exact evolution oracle is limited to {limit} qubits, got {h.n}."
        raise CapabilityError(msg)

    for o in observables:
        if o.n != h.n:
            msg = f"Observable acts on {o.n} qubits, Hamiltonian on {h.n}."
            raise DimensionError(msg)

    hamiltonian = h.to_matrix()
    dim = hamiltonian.shape[0]
    rho = _initial_density(initial, dim)

    # Shifting by the ground energy keeps the propagator bounded.
    shift = float(scipy.linalg.eigvalsh(hamiltonian, subset_by_index=[0, 0])[0])
    shifted = hamiltonian - shift * np.eye(dim)
    matrices = [o.to_matrix() for o in observables]

    grid = np.asarray(taus, dtype=np.float64).reshape(-1)
    table = np.empty((grid.size, len(matrices)))

    for row, tau in enumerate(grid):
        if tau < 0:
            raise ValidationError(f"Imaginary times must be non-negative, got {tau}.")

        propagator = scipy.linalg.expm(-tau * shifted)
        evolved = propagator @ rho @ propagator.conj().T
        evolved /= np.trace(evolved).real

        for column, matrix in enumerate(matrices):
            table[row, column] = float(np.trace(evolved @ matrix).real)

    return table


def ehrenfest_rhs(h: PauliSum, state: StateVector, o: PauliString) -> float:
    """``d<O>/d tau = -<{H, O}> + 2 <H> <O>`` under normalized imaginary time."""
    anticommutator = anticommutator_with_sum(h, o)
    energy = expectation_sum(state, h)
    return -expectation_sum(state, anticommutator) + 2 * energy * expectation(state, o)
