"""Hardware-efficient ansatz and circuit-based gradients.

The ansatz is an initial column of ``RY`` rotations followed by ``layers``
repetitions of a CNOT staircase ``(0, 1), (1, 2), ..., (n - 2, n - 1)`` and
another ``RY`` column. Parameter ``l * n + q`` drives the rotation of qubit
``q`` in column ``l``.

With ``RY(t) = exp(-i t Y / 2)`` the parameter-shift rule with shift ``pi/2``
is exact, and ``d/dt_j |psi(t)> = |psi(t + pi e_j)> / 2``.
"""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt

from ovqite.exceptions import DimensionError, ValidationError
from ovqite.measurement import (
    CostLedger,
    Estimator,
    Key,
    MeasurementPlan,
    plan_measurements,
)
from ovqite.pauli import PauliString, PauliSum
from ovqite.scheduler import Scheduler, SerialScheduler
from ovqite.statevector import Gate, StateVector, apply_circuit, cnot, ry
from ovqite.types import Phase, Strategy

PSR_SHIFT = math.pi / 2

#: Denominator ``2 sin(s)`` of the parameter-shift rule.
PSR_DENOMINATOR = 2 * math.sin(PSR_SHIFT)

#: Sign pairs ``(a, b)`` of the four survival probabilities per tensor entry.
_QGT_SHIFTS = ((1, 1), (1, -1), (-1, 1), (-1, -1))
_QGT_WEIGHTS = np.array([1.0, -1.0, -1.0, 1.0])


@dataclasses.dataclass(frozen=True, slots=True)
class HeaAnsatz:
    n: int
    layers: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError(f"The ansatz needs at least one qubit, got {self.n}.")
        if self.layers < 0:
            msg = f"Number of layers must be non-negative, got {self.layers}."
            raise ValidationError(msg)

    @property
    def num_parameters(self) -> int:
        return self.n * (self.layers + 1)

    def check_parameters(self, theta: npt.ArrayLike) -> npt.NDArray[np.float64]:
        values = np.asarray(theta, dtype=np.float64).reshape(-1)
        if values.size != self.num_parameters:
            msg = f"Expected {self.num_parameters} parameters, got {values.size}."
            raise DimensionError(msg)
        return values

    def gates(self, theta: npt.ArrayLike) -> list[Gate]:
        values = self.check_parameters(theta)
        gates = [ry(q, values[q]) for q in range(self.n)]

        for layer in range(1, self.layers + 1):
            gates.extend(cnot(q, q + 1) for q in range(self.n - 1))
            gates.extend(ry(q, values[layer * self.n + q]) for q in range(self.n))

        return gates

    def inverse_gates(self, theta: npt.ArrayLike) -> list[Gate]:
        return [gate.inverse() for gate in reversed(self.gates(theta))]

    def prepare_state(self, theta: npt.ArrayLike) -> StateVector:
        return apply_circuit(StateVector.zero(self.n), self.gates(theta))


@dataclasses.dataclass(frozen=True, slots=True)
class Estimate:
    """Estimated values together with their per-entry sampling variances."""

    values: npt.NDArray[np.float64]
    variances: npt.NDArray[np.float64]


def prepare_state(ansatz: HeaAnsatz, theta: npt.ArrayLike) -> StateVector:
    return ansatz.prepare_state(theta)


def shift_parameters(
    theta: npt.NDArray[np.float64], shifts: Sequence[tuple[int, float]]
) -> npt.NDArray[np.float64]:
    shifted = theta.copy()
    for index, amount in shifts:
        shifted[index] += amount
    return shifted


def _check_index(ansatz: HeaAnsatz, j: int) -> None:
    if not 0 <= j < ansatz.num_parameters:
        size = ansatz.num_parameters
        msg = f"Parameter index {j} out of range for {size} parameters."
        raise ValidationError(msg)


def psr_derivative(
    ansatz: HeaAnsatz,
    theta: npt.ArrayLike,
    j: int,
    o: PauliString,
    estimator: Estimator,
    key: Key = (),
) -> float:
    values = ansatz.check_parameters(theta)
    _check_index(ansatz, j)
    plan = plan_measurements([o])

    plus = plan.measure(
        ansatz.prepare_state(shift_parameters(values, [(j, PSR_SHIFT)])),
        estimator,
        (*key, j, 0),
    )
    minus = plan.measure(
        ansatz.prepare_state(shift_parameters(values, [(j, -PSR_SHIFT)])),
        estimator,
        (*key, j, 1),
    )
    return (plus[o] - minus[o]) / PSR_DENOMINATOR


def _shifted_expectations(
    ansatz: HeaAnsatz,
    theta: npt.NDArray[np.float64],
    plan: MeasurementPlan,
    strings: Sequence[PauliString],
    estimator: Estimator,
    phase: Phase,
    scheduler: Scheduler,
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Returns ``(plus, minus)`` arrays of shape ``(len(strings), num_parameters)``."""
    tasks = [(j, sign) for j in range(ansatz.num_parameters) for sign in (0, 1)]

    def evaluate(task: tuple[int, int]) -> npt.NDArray[np.float64]:
        j, sign = task
        shift = PSR_SHIFT if sign == 0 else -PSR_SHIFT
        state = ansatz.prepare_state(shift_parameters(theta, [(j, shift)]))
        estimates = plan.measure(state, estimator, (phase.key, j, sign))
        return np.array([estimates[string] for string in strings])

    results = scheduler.map(evaluate, tasks)
    plus = np.stack(results[0::2], axis=1)
    minus = np.stack(results[1::2], axis=1)
    return plus, minus


def derivative_matrix(
    ansatz: HeaAnsatz,
    theta: npt.ArrayLike,
    members: Sequence[PauliString],
    estimator: Estimator,
    ledger: CostLedger | None = None,
    *,
    strategy: Strategy = Strategy.GROUPED,
    scheduler: Scheduler | None = None,
) -> Estimate:
    """Derivatives ``d<O_i>/d theta_j`` with their sampling variances."""
    values = ansatz.check_parameters(theta)
    members = list(members)
    if not members:
        raise ValidationError("The operator set is empty.")

    plan = plan_measurements(members, strategy)
    scheduler = scheduler or SerialScheduler()
    plus, minus = _shifted_expectations(
        ansatz, values, plan, members, estimator, Phase.M, scheduler
    )

    if ledger is not None:
        circuits = 2 * ansatz.num_parameters * plan.circuits
        ledger.credit(Phase.M, circuits, estimator.nominal_shots)

    variances = estimator.pauli_variance(plus) + estimator.pauli_variance(minus)
    return Estimate((plus - minus) / PSR_DENOMINATOR, variances / PSR_DENOMINATOR**2)


def derivative_matrix_M(  # noqa: N802
    ansatz: HeaAnsatz,
    theta: npt.ArrayLike,
    members: Sequence[PauliString],
    estimator: Estimator,
    ledger: CostLedger | None = None,
    *,
    strategy: Strategy = Strategy.GROUPED,
    scheduler: Scheduler | None = None,
) -> npt.NDArray[np.float64]:
    estimate = derivative_matrix(
        ansatz,
        theta,
        members,
        estimator,
        ledger,
        strategy=strategy,
        scheduler=scheduler,
    )
    return estimate.values


def survival_probability(
    ansatz: HeaAnsatz,
    theta: npt.ArrayLike,
    theta_prime: npt.ArrayLike,
    estimator: Estimator,
    key: Key = (),
) -> float:
    """Overlap ``|<psi(theta)|psi(theta')>|^2``.

    Estimated as the all-zero outcome of ``U(theta')^-1 U(theta)|0>``.
    """
    inverse = ansatz.inverse_gates(theta_prime)
    state = apply_circuit(ansatz.prepare_state(theta), inverse)
    return estimator.zero_probability(state, key)


def _qgt_exact(
    ansatz: HeaAnsatz, theta: npt.NDArray[np.float64], scheduler: Scheduler
) -> npt.NDArray[np.float64]:
    psi = ansatz.prepare_state(theta).amplitudes

    def derivative(j: int) -> npt.NDArray[np.complex128]:
        shifted = shift_parameters(theta, [(j, math.pi)])
        return 0.5 * ansatz.prepare_state(shifted).amplitudes

    d = np.stack(scheduler.map(derivative, range(ansatz.num_parameters)), axis=1)
    overlaps = d.conj().T @ psi
    tensor = d.conj().T @ d - np.outer(overlaps, overlaps.conj())
    g: npt.NDArray[np.float64] = tensor.real
    return (g + g.T) / 2


def qgt(
    ansatz: HeaAnsatz,
    theta: npt.ArrayLike,
    estimator: Estimator,
    ledger: CostLedger | None = None,
    *,
    scheduler: Scheduler | None = None,
) -> Estimate:
    """The real geometric tensor ``-1/2 d^2 F / d theta'_i d theta'_j``.

    The derivatives are taken at ``theta' = theta``.

    Shot estimators measure four survival probabilities for every pair
    ``i <= j`` and mirror the upper triangle; exact estimators evaluate the
    same quantity from derivative states.
    """
    values = ansatz.check_parameters(theta)
    scheduler = scheduler or SerialScheduler()
    size = ansatz.num_parameters

    if ledger is not None:
        ledger.credit(Phase.G, 2 * size * (size + 1), estimator.nominal_shots)

    if estimator.is_exact:
        return Estimate(_qgt_exact(ansatz, values, scheduler), np.zeros((size, size)))

    pairs = [(i, j) for i in range(size) for j in range(i, size)]

    def evaluate(pair: tuple[int, int]) -> npt.NDArray[np.float64]:
        i, j = pair
        return np.array(
            [
                survival_probability(
                    ansatz,
                    values,
                    shift_parameters(values, [(i, a * PSR_SHIFT), (j, b * PSR_SHIFT)]),
                    estimator,
                    (Phase.G.key, i, j, index),
                )
                for index, (a, b) in enumerate(_QGT_SHIFTS)
            ]
        )

    g = np.zeros((size, size))
    variances = np.zeros((size, size))

    for (i, j), fidelities in zip(pairs, scheduler.map(evaluate, pairs), strict=True):
        g[i, j] = g[j, i] = -float(_QGT_WEIGHTS @ fidelities) / 8
        variances[i, j] = variances[j, i] = (
            float(estimator.probability_variance(fidelities).sum()) / 64
        )

    return Estimate(g, variances)


def qgt_vqite(
    ansatz: HeaAnsatz,
    theta: npt.ArrayLike,
    estimator: Estimator,
    ledger: CostLedger | None = None,
    *,
    scheduler: Scheduler | None = None,
) -> npt.NDArray[np.float64]:
    return qgt(ansatz, theta, estimator, ledger, scheduler=scheduler).values


def energy_gradient(
    ansatz: HeaAnsatz,
    theta: npt.ArrayLike,
    h: PauliSum,
    estimator: Estimator,
    ledger: CostLedger | None = None,
    *,
    strategy: Strategy = Strategy.GROUPED,
    scheduler: Scheduler | None = None,
) -> Estimate:
    """``-grad <H>`` by the parameter-shift rule applied to every Hamiltonian string."""
    values = ansatz.check_parameters(theta)
    if h.n != ansatz.n:
        raise DimensionError(f"Hamiltonian acts on {h.n} qubits, ansatz on {ansatz.n}.")
    if not h.is_hermitian():
        raise ValidationError("The Hamiltonian must be Hermitian.")

    strings = h.strings
    coefficients = np.array([h[string].real for string in strings])
    plan = plan_measurements(strings, strategy)
    scheduler = scheduler or SerialScheduler()
    plus, minus = _shifted_expectations(
        ansatz, values, plan, strings, estimator, Phase.B, scheduler
    )

    if ledger is not None:
        circuits = 2 * ansatz.num_parameters * plan.circuits
        ledger.credit(Phase.B, circuits, estimator.nominal_shots)

    gradient = coefficients @ (plus - minus) / PSR_DENOMINATOR
    variances = (coefficients**2) @ (
        estimator.pauli_variance(plus) + estimator.pauli_variance(minus)
    )
    return Estimate(-gradient, variances / PSR_DENOMINATOR**2)


def energy_gradient_vqite(
    ansatz: HeaAnsatz,
    theta: npt.ArrayLike,
    h: PauliSum,
    estimator: Estimator,
    ledger: CostLedger | None = None,
    *,
    strategy: Strategy = Strategy.GROUPED,
    scheduler: Scheduler | None = None,
) -> npt.NDArray[np.float64]:
    return energy_gradient(
        ansatz, theta, h, estimator, ledger, strategy=strategy, scheduler=scheduler
    ).values
