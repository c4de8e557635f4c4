"""Exact statevector simulation.

Basis index bit ``q`` holds the state of qubit ``q`` (little-endian), so
``|10>`` written as "qubit 0 is 1, qubit 1 is 0" is index ``0b01 == 1``.
Bitstrings returned by :func:`sample_bitstrings` use the same left-to-right
qubit order as Pauli strings: character ``q`` is the bit of qubit ``q``.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from collections.abc import Iterable

import numpy as np
import numpy.typing as npt

from ovqite.exceptions import DimensionError, ValidationError
from ovqite.pauli import PauliString, PauliSum, parity_signs

NORM_TOLERANCE = 1e-10

#: Largest imaginary residue discarded when summing a Hermitian expectation.
IMAGINARY_TOLERANCE = 1e-10

_SQRT1_2 = 1 / math.sqrt(2)
_FIXED_MATRICES = {
    "H": np.array([[_SQRT1_2, _SQRT1_2], [_SQRT1_2, -_SQRT1_2]], dtype=np.complex128),
    "S": np.array([[1, 0], [0, 1j]], dtype=np.complex128),
    "SDG": np.array([[1, 0], [0, -1j]], dtype=np.complex128),
}


class GateKind(enum.Enum):
    RY = "RY"
    CNOT = "CNOT"
    H = "H"
    S = "S"
    SDG = "SDG"
    X = "X"


@dataclasses.dataclass(frozen=True, slots=True)
class Gate:
    """A gate acting on ``qubits``; for CNOT the order is ``(control, target)``."""

    kind: GateKind
    qubits: tuple[int, ...]
    angle: float = 0.0

    def __post_init__(self) -> None:
        expected = 2 if self.kind is GateKind.CNOT else 1
        if len(self.qubits) != expected:
            msg = f"{self.kind.value} acts on {expected} qubit(s), got {self.qubits}."
            raise ValidationError(msg)

        if any(q < 0 for q in self.qubits):
            raise ValidationError(f"Negative qubit index in {self.qubits}.")

        if self.kind is GateKind.CNOT and self.qubits[0] == self.qubits[1]:
            raise ValidationError("CNOT control and target must differ.")

    def inverse(self) -> Gate:
        if self.kind is GateKind.RY:
            return Gate(GateKind.RY, self.qubits, -self.angle)
        if self.kind is GateKind.S:
            return Gate(GateKind.SDG, self.qubits)
        if self.kind is GateKind.SDG:
            return Gate(GateKind.S, self.qubits)
        return self

    def __str__(self) -> str:
        qubits = ",".join(map(str, self.qubits))
        if self.kind is GateKind.RY:
            return f"RY({qubits}, {self.angle:g})"
        return f"{self.kind.value}({qubits})"


def ry(qubit: int, angle: float) -> Gate:
    return Gate(GateKind.RY, (qubit,), float(angle))


def cnot(control: int, target: int) -> Gate:
    return Gate(GateKind.CNOT, (control, target))


def hadamard(qubit: int) -> Gate:
    return Gate(GateKind.H, (qubit,))


def sdg(qubit: int) -> Gate:
    return Gate(GateKind.SDG, (qubit,))


def pauli_x(qubit: int) -> Gate:
    return Gate(GateKind.X, (qubit,))


def ry_matrix(angle: float) -> npt.NDArray[np.complex128]:
    """``exp(-i angle Y / 2)``."""
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


@dataclasses.dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: npt.NDArray[np.complex128]

    def __post_init__(self) -> None:
        amplitudes = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        size = amplitudes.size

        if size < 2 or size & (size - 1):
            raise DimensionError(f"State size {size} is not a power of two.")

        norm = float(np.vdot(amplitudes, amplitudes).real)
        if abs(norm - 1) > NORM_TOLERANCE:
            raise ValidationError(f"State is not normalized (norm² = {norm}).")

        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def zero(cls, n: int) -> StateVector:
        amplitudes = np.zeros(1 << n, dtype=np.complex128)
        amplitudes[0] = 1
        return cls(amplitudes)

    @classmethod
    def from_unnormalized(cls, amplitudes: npt.ArrayLike) -> StateVector:
        vector = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        return cls(vector / np.linalg.norm(vector))

    @property
    def n(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    def probabilities(self) -> npt.NDArray[np.float64]:
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other: StateVector) -> complex:
        """``<self|other>``."""
        _check_qubits(self.n, other.n)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def density_matrix(self) -> npt.NDArray[np.complex128]:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def __len__(self) -> int:
        return self.amplitudes.size

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(n={self.n})"


def _check_qubits(expected: int, actual: int) -> None:
    if expected != actual:
        raise DimensionError(f"Expected {expected} qubits, got {actual}.")


def _apply_single(
    amplitudes: npt.NDArray[np.complex128],
    matrix: npt.NDArray[np.complex128],
    qubit: int,
    n: int,
) -> npt.NDArray[np.complex128]:
    tensor = amplitudes.reshape(1 << (n - qubit - 1), 2, 1 << qubit)
    return np.einsum("ab,ibj->iaj", matrix, tensor).reshape(-1)


def _apply(
    amplitudes: npt.NDArray[np.complex128], gate: Gate, n: int
) -> npt.NDArray[np.complex128]:
    for qubit in gate.qubits:
        if qubit >= n:
            raise ValidationError(f"Gate {gate} addresses qubit {qubit} of {n}.")

    if gate.kind is GateKind.RY:
        return _apply_single(amplitudes, ry_matrix(gate.angle), gate.qubits[0], n)

    indices = np.arange(amplitudes.size)

    if gate.kind is GateKind.X:
        return amplitudes[indices ^ (1 << gate.qubits[0])]

    if gate.kind is GateKind.CNOT:
        control, target = gate.qubits
        flips = ((indices >> control) & 1) << target
        return amplitudes[indices ^ flips]

    matrix = _FIXED_MATRICES[gate.kind.value]
    return _apply_single(amplitudes, matrix, gate.qubits[0], n)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    return StateVector(_apply(state.amplitudes, gate, state.n))


def apply_circuit(state: StateVector, gates: Iterable[Gate]) -> StateVector:
    n = state.n
    amplitudes = state.amplitudes
    for gate in gates:
        amplitudes = _apply(amplitudes, gate, n)
    return StateVector(amplitudes)


def apply_pauli(
    amplitudes: npt.NDArray[np.complex128], p: PauliString
) -> npt.NDArray[np.complex128]:
    """Returns ``P|psi>`` for raw amplitudes."""
    indices = np.arange(amplitudes.size)
    x_mask, z_mask, y_count = p.masks()
    values = amplitudes * parity_signs(indices, z_mask) * (p.coefficient * 1j**y_count)
    result = np.empty_like(amplitudes)
    result[indices ^ x_mask] = values
    return result


def expectation(state: StateVector, p: PauliString) -> float:
    _check_qubits(state.n, p.n)
    if not p.is_canonical:
        raise ValidationError(f"Observable {p} must have phase +1.")

    if p.is_identity:
        return 1.0

    value = np.vdot(state.amplitudes, apply_pauli(state.amplitudes, p))
    return float(value.real)


def expectation_sum(state: StateVector, h: PauliSum) -> float:
    _check_qubits(state.n, h.n)
    if not h.is_hermitian(IMAGINARY_TOLERANCE):
        raise ValidationError("Expectation requires a Hermitian Pauli sum.")

    return float(sum(c.real * expectation(state, p) for p, c in h.items()))


def sample_counts(
    probabilities: npt.NDArray[np.float64], shots: int, rng: np.random.Generator
) -> npt.NDArray[np.int64]:
    """Draws ``shots`` basis indices by inverse CDF and returns counts per index."""
    if shots < 1:
        raise ValidationError(f"Number of shots must be positive, got {shots}.")

    cdf = np.cumsum(probabilities)
    draws = np.searchsorted(cdf, rng.random(shots) * cdf[-1], side="right")
    np.minimum(draws, probabilities.size - 1, out=draws)
    return np.bincount(draws, minlength=probabilities.size).astype(np.int64)


def bitstring(index: int, n: int) -> str:
    return "".join("1" if (index >> q) & 1 else "0" for q in range(n))


def sample_bitstrings(
    state: StateVector, shots: int, rng: np.random.Generator
) -> dict[str, int]:
    counts = sample_counts(state.probabilities(), shots, rng)
    n = state.n
    return {bitstring(int(i), n): int(counts[i]) for i in np.flatnonzero(counts)}
