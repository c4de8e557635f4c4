"""Phase-exact algebra of n-qubit Pauli strings and weighted Pauli sums.

Strings are written left to right by qubit index: in ``"XZI"`` the ``X`` acts
on qubit 0 and the ``Z`` on qubit 1. Dense matrices use the little-endian
convention of :mod:`ovqite.statevector`, where bit ``q`` of a basis index is
the state of qubit ``q``.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Iterable, Iterator, Mapping
from typing import TypeAlias

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

from ovqite.exceptions import DimensionError, ValidationError

LETTERS = "IXYZ"

#: Pruning threshold for coefficients considered zero.
ZERO_TOLERANCE = 1e-14

#: The phase of a string is ``1j ** phase`` with ``phase`` in ``range(4)``.
_PHASE_VALUES = (1 + 0j, 1j, -1 + 0j, -1j)
_PHASE_PREFIXES = {"": 0, "+": 0, "i": 1, "+i": 1, "-": 2, "-i": 3}

# Single-qubit products: (a, b) -> (letter of a·b, power of i).
_PRODUCTS: dict[tuple[str, str], tuple[str, int]] = {}
for _a in LETTERS:
    _PRODUCTS["I", _a] = (_a, 0)
    _PRODUCTS[_a, "I"] = (_a, 0)
    _PRODUCTS[_a, _a] = ("I", 0)
for _a, _b, _c in (("X", "Y", "Z"), ("Y", "Z", "X"), ("Z", "X", "Y")):
    _PRODUCTS[_a, _b] = (_c, 1)
    _PRODUCTS[_b, _a] = (_c, 3)

Coefficient: TypeAlias = complex | float | int


@dataclasses.dataclass(frozen=True, slots=True)
class PauliString:
    """A tensor product of single-qubit Paulis with a phase in {1, i, -1, -i}."""

    letters: str
    phase: int = 0

    def __post_init__(self) -> None:
        if not self.letters:
            raise ValidationError("Pauli strings need at least one qubit.")

        invalid = set(self.letters) - set(LETTERS)
        if invalid:
            bad = "".join(sorted(invalid))
            msg = f"Invalid Pauli letters {bad!r} in {self.letters!r}."
            raise ValidationError(msg)

        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def parse(cls, text: str) -> PauliString:
        """Parses ``"ZZI"``, ``"-XY"`` or ``"-iZ"`` style strings.

        A leading ``i`` is a phase only when upper-case letters follow it, so
        ``"ii"`` is the two-qubit identity.
        """
        text = text.strip()
        sign = text[0] if text[:1] in ("+", "-") else ""
        rest = text[len(sign) :]

        imaginary = rest[:1] == "i" and rest[1:].isupper()
        letters = rest[1:] if imaginary else rest
        phase = _PHASE_PREFIXES[sign + ("i" if imaginary else "")]

        return cls(letters.upper(), phase)

    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls("I" * n)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> PauliString:
        return cls.from_sparse(n, {qubit: letter})

    @classmethod
    def from_sparse(cls, n: int, letters: Mapping[int, str]) -> PauliString:
        chars = ["I"] * n
        for qubit, letter in letters.items():
            if not 0 <= qubit < n:
                raise DimensionError(f"Qubit {qubit} out of range for {n} qubits.")
            chars[qubit] = letter
        return cls("".join(chars))

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def coefficient(self) -> complex:
        return _PHASE_VALUES[self.phase]

    @property
    def is_canonical(self) -> bool:
        return self.phase == 0

    @property
    def is_identity(self) -> bool:
        return not self.letters.strip("I")

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, letter in enumerate(self.letters) if letter != "I")

    def canonical(self) -> PauliString:
        if self.phase == 0:
            return self
        return PauliString(self.letters)

    def masks(self) -> tuple[int, int, int]:
        """Bit masks ``(x, z, y_count)``; Y contributes to both masks."""
        x_mask = z_mask = y_count = 0
        for qubit, letter in enumerate(self.letters):
            if letter in "XY":
                x_mask |= 1 << qubit
            if letter in "ZY":
                z_mask |= 1 << qubit
            if letter == "Y":
                y_count += 1
        return x_mask, z_mask, y_count

    def to_sparse(self) -> sp.csr_matrix:
        dim = 1 << self.n
        columns = np.arange(dim)
        x_mask, z_mask, y_count = self.masks()
        values = self.coefficient * (1j**y_count) * parity_signs(columns, z_mask)
        return sp.csr_matrix((values, (columns ^ x_mask, columns)), shape=(dim, dim))

    def to_matrix(self) -> npt.NDArray[np.complex128]:
        return np.asarray(self.to_sparse().toarray(), dtype=np.complex128)

    def __mul__(self, other: PauliString) -> PauliString:
        return multiply(self, other)

    def __neg__(self) -> PauliString:
        return PauliString(self.letters, self.phase + 2)

    def __str__(self) -> str:
        prefix = ("", "i", "-", "-i")[self.phase]
        return f"{prefix}{self.letters}"

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"


def parity_signs(indices: npt.NDArray[np.int64], mask: int) -> npt.NDArray[np.float64]:
    """Returns ``(-1) ** popcount(index & mask)`` for every index."""
    signs = np.ones(indices.shape, dtype=np.float64)
    qubit = 0
    while mask >> qubit:
        if (mask >> qubit) & 1:
            signs *= 1 - 2 * ((indices >> qubit) & 1)
        qubit += 1
    return signs


def _check_dimensions(a: PauliString, b: PauliString) -> None:
    if a.n != b.n:
        msg = f"Pauli strings act on {a.n} and {b.n} qubits."
        raise DimensionError(msg)


def multiply(a: PauliString, b: PauliString) -> PauliString:
    _check_dimensions(a, b)

    phase = a.phase + b.phase
    letters = []

    for left, right in zip(a.letters, b.letters, strict=True):
        letter, power = _PRODUCTS[left, right]
        letters.append(letter)
        phase += power

    return PauliString("".join(letters), phase)


def _anticommuting_positions(a: PauliString, b: PauliString) -> int:
    return sum(
        1
        for left, right in zip(a.letters, b.letters, strict=True)
        if left != "I" and right != "I" and left != right
    )


def commutes(a: PauliString, b: PauliString) -> bool:
    _check_dimensions(a, b)
    return _anticommuting_positions(a, b) % 2 == 0


def qubit_wise_commutes(a: PauliString, b: PauliString) -> bool:
    _check_dimensions(a, b)
    return _anticommuting_positions(a, b) == 0


class PauliSum(Mapping[PauliString, complex]):
    """A weighted sum of canonical Pauli strings.

    Phases of the input strings are folded into the coefficients, duplicate
    strings are merged and coefficients below :data:`ZERO_TOLERANCE` dropped.
    """

    __slots__ = ("_n", "_terms")

    def __init__(
        self,
        n: int,
        terms: Iterable[tuple[PauliString | str, Coefficient]] = (),
    ) -> None:
        if n < 1:
            raise ValidationError("Pauli sums need at least one qubit.")

        merged: dict[PauliString, complex] = {}

        for string, coefficient in terms:
            if isinstance(string, str):
                string = PauliString.parse(string)

            if string.n != n:
                msg = f"Pauli string {string} acts on {string.n} qubits, expected {n}."
                raise DimensionError(msg)

            key = string.canonical()
            value = complex(coefficient) * string.coefficient
            merged[key] = merged.get(key, 0j) + value

        self._n = n
        self._terms = {
            string: value
            for string, value in merged.items()
            if abs(value) > ZERO_TOLERANCE
        }

    @classmethod
    def from_dict(cls, n: int, terms: Mapping[str, Coefficient]) -> PauliSum:
        return cls(n, terms.items())

    @property
    def n(self) -> int:
        return self._n

    @property
    def strings(self) -> tuple[PauliString, ...]:
        return tuple(self._terms)

    def is_hermitian(self, tolerance: float = 1e-10) -> bool:
        return all(abs(value.imag) <= tolerance for value in self._terms.values())

    def to_sparse(self) -> sp.csr_matrix:
        dim = 1 << self._n
        matrix = sp.csr_matrix((dim, dim), dtype=np.complex128)
        for string, coefficient in self._terms.items():
            matrix = matrix + coefficient * string.to_sparse()
        return matrix

    def to_matrix(self) -> npt.NDArray[np.complex128]:
        return np.asarray(self.to_sparse().toarray(), dtype=np.complex128)

    def to_records(self) -> list[tuple[str, complex]]:
        return [(str(string), value) for string, value in self._terms.items()]

    def __getitem__(self, key: PauliString) -> complex:
        return self._terms[key]

    def __iter__(self) -> Iterator[PauliString]:
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __add__(self, other: PauliSum) -> PauliSum:
        if other.n != self._n:
            raise DimensionError(f"Cannot add sums on {self._n} and {other.n} qubits.")
        return PauliSum(self._n, [*self._terms.items(), *other.items()])

    def __mul__(self, scalar: Coefficient) -> PauliSum:
        return PauliSum(self._n, ((s, scalar * c) for s, c in self._terms.items()))

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self._n == other.n and self._terms == dict(other.items())

    def __hash__(self) -> int:
        return hash((self._n, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        terms = " + ".join(
            f"({value:g})*{string}" for string, value in self._terms.items()
        )
        return f"{self.__class__.__name__}({self._n}, {terms or '0'})"


def anticommutator_with_sum(h: PauliSum, o: PauliString) -> PauliSum:
    """Expands ``{h, o}`` into a Pauli sum.

    Anticommuting terms cancel; every commuting term ``c·P`` contributes
    ``2·c·(P·o)``.
    """
    if h.n != o.n:
        raise DimensionError(f"Hamiltonian acts on {h.n} qubits, operator on {o.n}.")
    if not o.is_canonical:
        raise ValidationError(f"Operator {o} must have phase +1.")

    return PauliSum(
        h.n,
        (
            (multiply(string, o), 2 * coefficient)
            for string, coefficient in h.items()
            if commutes(string, o)
        ),
    )
