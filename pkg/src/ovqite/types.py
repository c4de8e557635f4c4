from __future__ import annotations

import enum


class Algorithm(str, enum.Enum):
    OVQITE = "ovqite"
    VQITE = "vqite"


class Mode(str, enum.Enum):
    EXACT = "exact"
    SHOTS = "shots"


class Strategy(str, enum.Enum):
    """How Pauli strings are assigned to measurement circuits."""

    GROUPED = "grouped"
    NAIVE = "naive"


class SolverKind(str, enum.Enum):
    PINV = "pinv"
    EIV = "eiv"


class Phase(str, enum.Enum):
    """Ledger phases of one evolution step."""

    M = "M"
    V = "v"
    G = "G"
    B = "b"
    ENERGY = "energy"

    @property
    def key(self) -> int:
        """Stable integer used to derive per-task random streams."""
        return _PHASE_KEYS[self]

    @property
    def counts_toward_budget(self) -> bool:
        return self is not Phase.ENERGY


_PHASE_KEYS = {phase: index for index, phase in enumerate(Phase)}
