"""Transverse-field Ising chain, its operator sets and exact ground energies."""

from __future__ import annotations

import dataclasses
import itertools
import logging
from collections.abc import Iterable, Iterator

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from ovqite.exceptions import CapabilityError, ValidationError
from ovqite.pauli import LETTERS, PauliString, PauliSum
from ovqite.statevector import StateVector

logger = logging.getLogger(__name__)

#: Largest register diagonalized as a dense matrix.
MAX_DENSE_QUBITS = 10

#: Largest register handled by the sparse eigensolver.
MAX_EXACT_QUBITS = 14

#: Largest register for which every Pauli string is enumerated.
MAX_FULL_SET_QUBITS = 3

OPERATOR_SET_NAMES = ("S_H", "S_NN", "S_IM", "S_FULL")


@dataclasses.dataclass(frozen=True, slots=True)
class TfimParams:
    """``H = -J sum Z_i Z_{i+1} - h sum X_i`` on ``n`` sites."""

    n: int = 10
    J: float = 1.0  # noqa: N815
    h: float = 0.5
    periodic: bool = True

    def __post_init__(self) -> None:
        if self.n < 2:
            msg = f"The Ising chain needs at least two sites, got {self.n}."
            raise ValidationError(msg)
        if not self.J > 0:
            raise ValidationError(f"The coupling J must be positive, got {self.J}.")

    @property
    def bonds(self) -> list[tuple[int, int]]:
        """Nearest-neighbour bonds ``(j, j + 1)``, wrapping around when periodic."""
        if self.periodic:
            return [(j, (j + 1) % self.n) for j in range(self.n)]
        return [(j, j + 1) for j in range(self.n - 1)]

    @property
    def field_ratio(self) -> float:
        return self.h / self.J


def build_tfim(p: TfimParams) -> PauliSum:
    terms: list[tuple[PauliString, float]] = [
        (PauliString.from_sparse(p.n, {i: "Z", j: "Z"}), -p.J) for i, j in p.bonds
    ]
    terms.extend((PauliString.single(p.n, i, "X"), -p.h) for i in range(p.n))
    return PauliSum(p.n, terms)


@dataclasses.dataclass(frozen=True, slots=True)
class OperatorSet:
    name: str
    members: tuple[PauliString, ...]

    def __post_init__(self) -> None:
        if not self.members:
            raise ValidationError(f"Operator set {self.name} is empty.")

        n = self.members[0].n
        seen: set[PauliString] = set()

        for member in self.members:
            if member.n != n:
                raise ValidationError(f"Operator set {self.name} mixes register sizes.")
            if not member.is_canonical:
                raise ValidationError(f"Operator {member} must have phase +1.")
            if member in seen:
                msg = f"Operator {member} appears twice in {self.name}."
                raise ValidationError(msg)
            seen.add(member)

    @property
    def n(self) -> int:
        return self.members[0].n

    def contains_all(self, h: PauliSum) -> bool:
        """Whether every string of ``h`` is a member, so that ``h`` lies in the span."""
        members = set(self.members)
        return all(string in members for string in h if not string.is_identity)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[PauliString]:
        return iter(self.members)


def _is_imaginary(string: PauliString) -> bool:
    """Strings with an odd number of ``Y`` are purely imaginary matrices."""
    return string.letters.count("Y") % 2 == 1


def _nearest_neighbour_strings(p: TfimParams) -> list[PauliString]:
    strings: dict[PauliString, None] = {}

    for qubit in range(p.n):
        for letter in "XYZ":
            strings[PauliString.single(p.n, qubit, letter)] = None

    for j, k in p.bonds:
        for left, right in itertools.product("XYZ", repeat=2):
            strings[PauliString.from_sparse(p.n, {j: left, k: right})] = None

    return list(strings)


def full_operator_set(n: int) -> OperatorSet:
    """Every non-identity string on ``n`` qubits."""
    if n > MAX_FULL_SET_QUBITS:
        msg = f"The full Pauli set is limited to {MAX_FULL_SET_QUBITS} qubits, got {n}."
        raise CapabilityError(msg)

    products = itertools.product(LETTERS, repeat=n)
    strings = (PauliString("".join(letters)) for letters in products)
    return OperatorSet("S_FULL", tuple(s for s in strings if not s.is_identity))


def operator_set(p: TfimParams, name: str) -> OperatorSet:
    if name == "S_H":
        members = list(build_tfim(p).strings)
    elif name == "S_NN":
        members = _nearest_neighbour_strings(p)
    elif name == "S_IM":
        members = [s for s in _nearest_neighbour_strings(p) if not _is_imaginary(s)]
    elif name == "S_FULL":
        return full_operator_set(p.n)
    else:
        choices = ", ".join(OPERATOR_SET_NAMES)
        msg = f"Unknown operator set {name!r} (expected one of {choices})."
        raise ValidationError(msg)

    return OperatorSet(name, tuple(members))


def custom_operator_set(
    strings: Iterable[PauliString | str], name: str = "custom"
) -> OperatorSet:
    members = [PauliString.parse(s) if isinstance(s, str) else s for s in strings]
    return OperatorSet(name, tuple(members))


def _check_size(h: PauliSum) -> None:
    if h.n > MAX_EXACT_QUBITS:
        limit = MAX_EXACT_QUBITS
        msg = f"Exact diagonalization is limited to {limit} qubits, got {h.n}."
        raise CapabilityError(msg)


def exact_ground_state(h: PauliSum) -> tuple[float, StateVector]:
    _check_size(h)

    if h.n <= MAX_DENSE_QUBITS:
        values, vectors = scipy.linalg.eigh(h.to_matrix(), subset_by_index=[0, 0])
    else:
        rng = np.random.default_rng(0)
        v0 = rng.standard_normal(1 << h.n).astype(np.complex128)
        values, vectors = scipy.sparse.linalg.eigsh(
            h.to_sparse(), k=1, which="SA", v0=v0
        )

    logger.debug("Ground energy of %d-qubit Hamiltonian: %.12g", h.n, values[0])
    return float(values[0]), StateVector.from_unnormalized(vectors[:, 0])


def exact_ground_energy(h: PauliSum) -> float:
    """Smallest eigenvalue of ``h``; dense up to 10 qubits, Lanczos up to 14."""
    energy, _ = exact_ground_state(h)
    return energy
