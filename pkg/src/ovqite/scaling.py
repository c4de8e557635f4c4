"""Static measurement-cost tables over chain lengths.

Nothing is simulated here: circuit counts follow from the Hamiltonian, the
operator sets and the number of ansatz parameters alone.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Iterable

from ovqite.ansatz import HeaAnsatz
from ovqite.evolution import parse_label
from ovqite.measurement import anticommutators, count_circuits, group_paulis
from ovqite.pauli import PauliString
from ovqite.tfim import TfimParams, build_tfim, operator_set
from ovqite.types import Algorithm, Strategy


@dataclasses.dataclass(frozen=True, slots=True)
class ScalingRow:
    n: int
    label: str
    phase: str
    circuits_grouped: int
    circuits_naive: int
    measurements_per_n_grouped: float
    measurements_per_n_naive: float


@dataclasses.dataclass(frozen=True, slots=True)
class TermRow:
    n: int
    operator_set: str
    strings: int
    groups: int
    anticommutator_strings: int
    anticommutator_groups: int


def scaling_rows(
    sizes: Iterable[int],
    labels: Iterable[str],
    *,
    layers: int = 5,
    shots: int = 10_000,
    h: float = 0.5,
) -> list[ScalingRow]:
    """Per-step circuit counts of every phase plus a ``total`` row."""
    rows: list[ScalingRow] = []
    labels = list(labels)

    for n in sizes:
        model = TfimParams(n=n, h=h)
        hamiltonian = build_tfim(model)
        num_parameters = HeaAnsatz(n, layers).num_parameters

        for label in labels:
            algorithm, set_name = parse_label(label)
            members = None
            if algorithm is Algorithm.OVQITE:
                members = operator_set(model, set_name).members

            counts = {
                strategy: count_circuits(
                    algorithm, hamiltonian, num_parameters, members, strategy
                )
                for strategy in Strategy
            }
            grouped, naive = counts[Strategy.GROUPED], counts[Strategy.NAIVE]

            for phase in grouped:
                rows.append(
                    ScalingRow(
                        n,
                        label,
                        phase.value,
                        grouped[phase],
                        naive[phase],
                        shots * grouped[phase] / n,
                        shots * naive[phase] / n,
                    )
                )

            total_grouped, total_naive = sum(grouped.values()), sum(naive.values())
            rows.append(
                ScalingRow(
                    n,
                    label,
                    "total",
                    total_grouped,
                    total_naive,
                    shots * total_grouped / n,
                    shots * total_naive / n,
                )
            )

    return rows


def term_rows(
    sizes: Iterable[int], set_names: Iterable[str], *, h: float = 0.5
) -> list[TermRow]:
    """Sizes and group counts of operator sets and their anticommutators with H."""
    rows: list[TermRow] = []
    set_names = list(set_names)

    for n in sizes:
        model = TfimParams(n=n, h=h)
        hamiltonian = build_tfim(model)

        for name in set_names:
            members = operator_set(model, name).members
            expansion: dict[PauliString, None] = {}
            for terms in anticommutators(hamiltonian, members):
                expansion.update(
                    (string, None) for string in terms if not string.is_identity
                )

            rows.append(
                TermRow(
                    n,
                    name,
                    len(members),
                    len(group_paulis(members)),
                    len(expansion),
                    len(group_paulis(expansion)) if expansion else 0,
                )
            )

    return rows
