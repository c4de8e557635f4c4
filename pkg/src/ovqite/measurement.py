"""Measurement planning, expectation estimation and circuit accounting.

Strings that qubit-wise commute share one measurement circuit: a local basis
rotation turns every member into a product of ``Z`` operators, after which a
single set of computational-basis samples yields all of their estimates.
"""

from __future__ import annotations

import abc
import dataclasses
import functools
import logging
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from typing import Protocol

import numpy as np
import numpy.typing as npt

from ovqite.exceptions import DimensionError, ValidationError
from ovqite.pauli import (
    PauliString,
    PauliSum,
    anticommutator_with_sum,
    parity_signs,
    qubit_wise_commutes,
)
from ovqite.statevector import (
    Gate,
    StateVector,
    apply_circuit,
    expectation,
    hadamard,
    sample_counts,
    sdg,
)
from ovqite.types import Algorithm, Phase, Strategy
from ovqite.utils import derive_rng

logger = logging.getLogger(__name__)

Key = tuple[int, ...]


@dataclasses.dataclass(frozen=True, slots=True)
class MeasurementGroup:
    members: tuple[PauliString, ...]
    basis: str

    def __post_init__(self) -> None:
        if not self.members:
            raise ValidationError("Measurement groups need at least one member.")

        for member in self.members:
            if member.n != len(self.basis):
                raise DimensionError(f"{member} does not match basis {self.basis}.")
            for letter, base in zip(member.letters, self.basis, strict=True):
                if letter not in ("I", base):
                    msg = f"{member} is not diagonal in basis {self.basis}."
                    raise ValidationError(msg)

    @classmethod
    def from_members(cls, members: Sequence[PauliString]) -> MeasurementGroup:
        basis = ["I"] * members[0].n
        for member in members:
            for qubit, letter in enumerate(member.letters):
                if letter != "I":
                    basis[qubit] = letter
        return cls(tuple(members), "".join(basis))

    @property
    def n(self) -> int:
        return len(self.basis)


def group_qubit_wise(paulis: Iterable[PauliString]) -> list[MeasurementGroup]:
    """Greedy first-fit grouping in input order.

    Each string joins the first group whose every member it qubit-wise
    commutes with, otherwise it opens a new group.
    """
    groups: list[list[PauliString]] = []

    for string in paulis:
        for group in groups:
            if all(qubit_wise_commutes(string, member) for member in group):
                group.append(string)
                break
        else:
            groups.append([string])

    result = [MeasurementGroup.from_members(group) for group in groups]
    logger.debug(
        "Grouped %d strings into %d circuits", sum(map(len, groups)), len(result)
    )
    return result


def translation_order(paulis: Iterable[PauliString]) -> list[PauliString]:
    """Sorts strings so that translates of one pattern sit next to each other."""

    def key(string: PauliString) -> tuple[str, int]:
        support = string.support
        start = support[0] if support else 0
        return string.letters[start:] + string.letters[:start], start

    return sorted(paulis, key=key)


def group_paulis(paulis: Iterable[PauliString]) -> list[MeasurementGroup]:
    """The fewer groups of first-fit in input order and in translation order.

    Ties keep the input order.
    """
    strings = list(paulis)
    candidates = (
        group_qubit_wise(strings),
        group_qubit_wise(translation_order(strings)),
    )
    return min(candidates, key=len)


def basis_rotation(group: MeasurementGroup) -> list[Gate]:
    gates: list[Gate] = []
    for qubit, letter in enumerate(group.basis):
        if letter == "X":
            gates.append(hadamard(qubit))
        elif letter == "Y":
            gates.extend((sdg(qubit), hadamard(qubit)))
    return gates


def _support_mask(string: PauliString) -> int:
    mask = 0
    for qubit in string.support:
        mask |= 1 << qubit
    return mask


def estimate_group(
    state: StateVector,
    group: MeasurementGroup,
    shots: int | None,
    rng: np.random.Generator | None = None,
) -> dict[PauliString, float]:
    """Estimates every member of ``group`` from one rotated circuit.

    With ``shots=None`` the exact outcome distribution replaces the sampled
    frequencies.
    """
    if state.n != group.n:
        raise DimensionError(f"State has {state.n} qubits, group {group.n}.")

    rotated = apply_circuit(state, basis_rotation(group))
    probabilities = rotated.probabilities()

    if shots is None:
        frequencies = probabilities
    else:
        if rng is None:
            raise ValidationError("Sampling requires a random generator.")
        frequencies = sample_counts(probabilities, shots, rng) / shots

    indices = np.arange(probabilities.size)
    return {
        member: float(np.dot(frequencies, parity_signs(indices, _support_mask(member))))
        for member in group.members
    }


class Estimator(abc.ABC):
    """Evaluates expectation values and all-zero probabilities of prepared states."""

    #: Shots drawn per circuit, ``None`` for exact evaluation.
    shots: int | None = None

    @property
    @abc.abstractmethod
    def nominal_shots(self) -> int:
        """Shots charged to the ledger for every circuit."""

    @abc.abstractmethod
    def expectations(
        self, state: StateVector, groups: Sequence[MeasurementGroup], key: Key = ()
    ) -> dict[PauliString, float]:
        ...

    @abc.abstractmethod
    def zero_probability(self, state: StateVector, key: Key = ()) -> float:
        ...

    def at_step(self, step: int) -> Estimator:
        return self

    @property
    def is_exact(self) -> bool:
        return self.shots is None

    def pauli_variance(
        self, value: float | npt.NDArray[np.float64]
    ) -> npt.NDArray[np.float64]:
        """Variance of a sampled Pauli estimate with mean ``value``."""
        mean = np.asarray(value, dtype=np.float64)
        if self.shots is None:
            return np.zeros_like(mean)
        return np.clip(1 - mean**2, 0, None) / self.shots

    def probability_variance(
        self, value: float | npt.NDArray[np.float64]
    ) -> npt.NDArray[np.float64]:
        mean = np.asarray(value, dtype=np.float64)
        if self.shots is None:
            return np.zeros_like(mean)
        return np.clip(mean * (1 - mean), 0, None) / self.shots


class ExactEstimator(Estimator):
    def __init__(self, nominal_shots: int = 0) -> None:
        if nominal_shots < 0:
            msg = f"Nominal shots must be non-negative, got {nominal_shots}."
            raise ValidationError(msg)
        self._nominal_shots = nominal_shots

    @property
    def nominal_shots(self) -> int:
        return self._nominal_shots

    def expectations(
        self, state: StateVector, groups: Sequence[MeasurementGroup], key: Key = ()
    ) -> dict[PauliString, float]:
        return {
            member: expectation(state, member)
            for group in groups
            for member in group.members
        }

    def zero_probability(self, state: StateVector, key: Key = ()) -> float:
        return float(abs(state.amplitudes[0]) ** 2)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(nominal_shots={self._nominal_shots})"


class ShotEstimator(Estimator):
    """Emulates ``shots`` projective measurements per circuit.

    Every circuit draws from its own stream derived from ``(seed, step, *key)``
    so estimates do not depend on evaluation order.
    """

    def __init__(self, shots: int, seed: int = 0, step: int = 0) -> None:
        if shots < 1:
            raise ValidationError(f"Number of shots must be positive, got {shots}.")
        self.shots = shots
        self.seed = seed
        self.step = step

    @property
    def nominal_shots(self) -> int:
        assert self.shots is not None
        return self.shots

    def at_step(self, step: int) -> ShotEstimator:
        return ShotEstimator(self.nominal_shots, self.seed, step)

    def rng(self, *key: int) -> np.random.Generator:
        return derive_rng(self.seed, self.step, *key)

    def expectations(
        self, state: StateVector, groups: Sequence[MeasurementGroup], key: Key = ()
    ) -> dict[PauliString, float]:
        estimates: dict[PauliString, float] = {}
        for index, group in enumerate(groups):
            rng = self.rng(*key, index)
            estimates.update(estimate_group(state, group, self.shots, rng))
        return estimates

    def zero_probability(self, state: StateVector, key: Key = ()) -> float:
        probability = min(float(abs(state.amplitudes[0]) ** 2), 1.0)
        hits = self.rng(*key).binomial(self.nominal_shots, probability)
        return float(hits) / self.nominal_shots

    def __repr__(self) -> str:
        name = self.__class__.__name__
        return f"{name}(shots={self.shots}, seed={self.seed}, step={self.step})"


@dataclasses.dataclass(frozen=True, slots=True)
class MeasurementPlan:
    """The circuits needed to estimate ``strings`` at one evaluation point."""

    strings: tuple[PauliString, ...]
    groups: tuple[MeasurementGroup, ...]
    strategy: Strategy

    @property
    def circuits(self) -> int:
        return len(self.groups)

    def measure(
        self, state: StateVector, estimator: Estimator, key: Key = ()
    ) -> dict[PauliString, float]:
        estimates = estimator.expectations(state, self.groups, key)
        for string in self.strings:
            if string.is_identity:
                estimates[string] = 1.0
        return estimates


@functools.lru_cache(maxsize=64)
def _plan(strings: tuple[PauliString, ...], strategy: Strategy) -> MeasurementPlan:
    measured = [string for string in strings if not string.is_identity]

    if strategy is Strategy.GROUPED:
        groups = group_paulis(measured)
    else:
        groups = [MeasurementGroup.from_members([string]) for string in measured]

    return MeasurementPlan(strings, tuple(groups), strategy)


def plan_measurements(
    paulis: Iterable[PauliString], strategy: Strategy = Strategy.GROUPED
) -> MeasurementPlan:
    """Plans one circuit per group (grouped) or per distinct string (naive)."""
    distinct: dict[PauliString, None] = {}
    for string in paulis:
        if not string.is_canonical:
            raise ValidationError(f"Measured string {string} must have phase +1.")
        distinct[string] = None
    if not distinct:
        raise ValidationError("Nothing to measure.")
    return _plan(tuple(distinct), Strategy(strategy))


class StatePreparation(Protocol):
    def prepare_state(self, theta: npt.ArrayLike) -> StateVector:
        ...


@dataclasses.dataclass(frozen=True, slots=True)
class LedgerEntry:
    step: int
    phase: Phase
    circuits: int
    shots: int


class CostLedger:
    """Counts prepared circuits and shots per step and phase.

    Only the update phases count toward the measurement budget; the diagnostic
    ``energy`` phase is tracked separately.
    """

    def __init__(self) -> None:
        self.step = 0
        self._circuits: Counter[tuple[int, Phase]] = Counter()
        self._shots: Counter[tuple[int, Phase]] = Counter()

    def begin_step(self, step: int) -> None:
        self.step = step

    def credit(self, phase: Phase, circuits: int, shots_per_circuit: int) -> None:
        if circuits < 0 or shots_per_circuit < 0:
            raise ValidationError("Ledger credits must be non-negative.")
        key = (self.step, Phase(phase))
        self._circuits[key] += circuits
        self._shots[key] += circuits * shots_per_circuit

    def _total(
        self, counter: Counter[tuple[int, Phase]], phase: Phase | None, step: int | None
    ) -> int:
        return sum(
            value
            for (entry_step, entry_phase), value in counter.items()
            if (phase is None or entry_phase is phase)
            and (step is None or entry_step == step)
        )

    def circuits(self, phase: Phase | None = None, step: int | None = None) -> int:
        return self._total(self._circuits, phase, step)

    def shots(self, phase: Phase | None = None, step: int | None = None) -> int:
        return self._total(self._shots, phase, step)

    def budget_circuits(self, step: int | None = None) -> int:
        return sum(
            self.circuits(phase, step) for phase in Phase if phase.counts_toward_budget
        )

    def budget_shots(self, step: int | None = None) -> int:
        return sum(
            self.shots(phase, step) for phase in Phase if phase.counts_toward_budget
        )

    @property
    def circuits_prepared(self) -> int:
        return self.circuits()

    @property
    def shots_total(self) -> int:
        return self.shots()

    @property
    def measurements(self) -> int:
        """Cumulative measurements of the update phases."""
        return self.budget_shots()

    def entries(self) -> list[LedgerEntry]:
        order = list(Phase)
        keys = sorted(self._circuits, key=lambda key: (key[0], order.index(key[1])))
        return [
            LedgerEntry(*key, self._circuits[key], self._shots[key]) for key in keys
        ]

    def __repr__(self) -> str:
        return (
            f"{self.__class__.__name__}(circuits={self.circuits_prepared}, "
            f"measurements={self.measurements})"
        )


def estimate_expectations(
    preparation: StatePreparation,
    theta: npt.ArrayLike,
    paulis: Iterable[PauliString],
    estimator: Estimator,
    ledger: CostLedger | None = None,
    *,
    phase: Phase = Phase.V,
    strategy: Strategy = Strategy.GROUPED,
    key: Key = (),
) -> dict[PauliString, float]:
    plan = plan_measurements(paulis, strategy)
    state = preparation.prepare_state(theta)
    estimates = plan.measure(state, estimator, (phase.key, *key))

    if ledger is not None:
        ledger.credit(phase, plan.circuits, estimator.nominal_shots)

    return estimates


@functools.lru_cache(maxsize=32)
def anticommutators(
    h: PauliSum, members: tuple[PauliString, ...]
) -> tuple[PauliSum, ...]:
    return tuple(anticommutator_with_sum(h, member) for member in members)


def v_strings(h: PauliSum, members: Sequence[PauliString]) -> tuple[PauliString, ...]:
    """Strings the v vector needs.

    Anticommutator terms come first, then the strings of ``h``, then ``members``.
    """
    strings: dict[PauliString, None] = {}
    for expansion in anticommutators(h, tuple(members)):
        strings.update(dict.fromkeys(expansion))
    strings.update(dict.fromkeys(h))
    strings.update(dict.fromkeys(members))
    return tuple(strings)


def _count(strings: Iterable[PauliString], strategy: Strategy) -> int:
    strings = list(strings)
    if not any(not string.is_identity for string in strings):
        return 0
    return plan_measurements(strings, strategy).circuits


def count_circuits(
    algorithm: Algorithm,
    h: PauliSum,
    num_parameters: int,
    members: Sequence[PauliString] | None = None,
    strategy: Strategy = Strategy.GROUPED,
) -> dict[Phase, int]:
    """Static per-step circuit counts of the update phases.

    Two parameter shifts are needed per parameter for every gradient circuit,
    and four survival-probability circuits for every pair ``i <= j`` of the
    geometric tensor.
    """
    algorithm = Algorithm(algorithm)
    strategy = Strategy(strategy)

    if num_parameters < 1:
        raise ValidationError("Counting circuits requires at least one parameter.")

    if algorithm is Algorithm.VQITE:
        return {
            Phase.G: 2 * num_parameters * (num_parameters + 1),
            Phase.B: 2 * num_parameters * _count(h, strategy),
        }

    if not members:
        raise ValidationError("OVQITE circuit counts require an operator set.")

    return {
        Phase.M: 2 * num_parameters * _count(members, strategy),
        Phase.V: _count(v_strings(h, members), strategy),
    }


def total_measurements(counts: Mapping[Phase, int], shots: int) -> int:
    return shots * sum(counts.values())
