"""Trajectory, ledger and summary files.

Trajectory CSV columns, in order:

``step``
    Update index; ``0`` is the initial state.
``tau``
    Imaginary time ``step * delta``.
``energy_exact`` / ``energy_estimated``
    Exact energy of the current parameters and its estimate with the run's
    estimator.
``rel_error``
    ``|E - E0| / |E0|`` of the exact energy.
``loss``
    Variational loss of the solved update (``nan`` for step 0).
``sv_kept``
    Singular values kept by the solver.
``circuits_step`` / ``shots_step``
    Circuits and shots of the update phases in this step.
``measurements_cumulative``
    Shots of the update phases summed over all steps so far.

Every CSV file starts with the provenance line
``# ovqite <version> config_hash=<hash> seed=<seed>``.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import pathlib
from collections.abc import Iterable, Sequence
from typing import TextIO

from ovqite.__about__ import __version__
from ovqite.evolution import StepRecord, Trajectory
from ovqite.exceptions import OvqiteError, reraise_as
from ovqite.measurement import CostLedger
from ovqite.pauli import PauliString, PauliSum
from ovqite.utils import format_float

TRAJECTORY_COLUMNS = (
    "step",
    "tau",
    "energy_exact",
    "energy_estimated",
    "rel_error",
    "loss",
    "sv_kept",
    "circuits_step",
    "shots_step",
    "measurements_cumulative",
)

LEDGER_COLUMNS = ("step", "phase", "circuits", "shots", "cumulative_measurements")


@dataclasses.dataclass(frozen=True, slots=True)
class Provenance:
    config_hash: str
    seed: int
    version: str = __version__

    @property
    def line(self) -> str:
        return (
            f"# ovqite {self.version} config_hash={self.config_hash} seed={self.seed}"
        )


def _cell(value: object) -> str:
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def _write_rows(
    file: TextIO,
    provenance: Provenance,
    header: Sequence[str],
    rows: Iterable[Sequence[object]],
) -> None:
    file.write(provenance.line + "\n")
    writer = csv.writer(file, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([_cell(value) for value in row] for row in rows)


def trajectory_rows(records: Iterable[StepRecord]) -> list[tuple[object, ...]]:
    return [
        tuple(getattr(record, column) for column in TRAJECTORY_COLUMNS)
        for record in records
    ]


def ledger_rows(ledger: CostLedger) -> list[tuple[object, ...]]:
    rows: list[tuple[object, ...]] = []
    cumulative = 0

    for entry in ledger.entries():
        if entry.phase.counts_toward_budget:
            cumulative += entry.shots
        rows.append(
            (entry.step, entry.phase.value, entry.circuits, entry.shots, cumulative)
        )

    return rows


def _json_float(value: float) -> float | None:
    return None if math.isnan(value) else value


def _record_mapping(record: StepRecord) -> dict[str, object]:
    mapping: dict[str, object] = {}
    for column in TRAJECTORY_COLUMNS:
        value = getattr(record, column)
        mapping[column] = _json_float(value) if isinstance(value, float) else value
    return mapping


def write_trajectory(
    trajectory: Trajectory,
    path: str | pathlib.Path,
    provenance: Provenance,
    fmt: str = "csv",
) -> None:
    """Writes one row per record as CSV, or a JSON document with a ``records`` list."""
    target = pathlib.Path(path)

    with reraise_as(OvqiteError, OSError, prefix=f"Cannot write {target}"):
        with target.open("w", encoding="utf-8", newline="") as file:
            if fmt == "json":
                document = {
                    "version": provenance.version,
                    "config_hash": provenance.config_hash,
                    "seed": provenance.seed,
                    "records": [_record_mapping(r) for r in trajectory.records],
                }
                json.dump(document, file, indent=2)
                file.write("\n")
            else:
                rows = trajectory_rows(trajectory.records)
                _write_rows(file, provenance, TRAJECTORY_COLUMNS, rows)


def write_ledger(
    ledger: CostLedger, path: str | pathlib.Path, provenance: Provenance
) -> None:
    target = pathlib.Path(path)
    with reraise_as(OvqiteError, OSError, prefix=f"Cannot write {target}"):
        with target.open("w", encoding="utf-8", newline="") as file:
            _write_rows(file, provenance, LEDGER_COLUMNS, ledger_rows(ledger))


def _terms(hamiltonian: PauliSum) -> list[list[object]]:
    return [[label, value.real] for label, value in hamiltonian.to_records()]


def summarize(
    trajectory: Trajectory,
    ledger: CostLedger,
    provenance: Provenance,
    *,
    hamiltonian: PauliSum | None = None,
    operators: Sequence[PauliString] = (),
) -> dict[str, object]:
    """Run summary, with the Hamiltonian terms and operator set when given."""
    final = trajectory.final
    failure = trajectory.failure
    return {
        "version": provenance.version,
        "config_hash": provenance.config_hash,
        "seed": provenance.seed,
        "e0": trajectory.e0,
        "final_energy": final.energy_exact,
        "final_rel_error": _json_float(final.rel_error),
        "steps_completed": final.step,
        "total_circuits": ledger.budget_circuits(),
        "total_measurements": ledger.measurements,
        "status": trajectory.status,
        "failure": None if failure is None else failure.format_message(),
        "hamiltonian": [] if hamiltonian is None else _terms(hamiltonian),
        "operator_set": [str(string) for string in operators],
    }


def write_summary(summary: dict[str, object], path: str | pathlib.Path) -> None:
    target = pathlib.Path(path)
    with reraise_as(OvqiteError, OSError, prefix=f"Cannot write {target}"):
        target.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")


def sibling_paths(path: str | pathlib.Path) -> tuple[pathlib.Path, pathlib.Path]:
    """Ledger and summary files written next to a trajectory file."""
    target = pathlib.Path(path)
    return (
        target.with_name(f"{target.stem}.ledger.csv"),
        target.with_name(f"{target.stem}.summary.json"),
    )


def read_trajectory(path: str | pathlib.Path) -> tuple[str, list[dict[str, str]]]:
    """Provenance line and rows of a trajectory CSV."""
    target = pathlib.Path(path)
    with reraise_as(OvqiteError, OSError, prefix=f"Cannot read {target}"):
        with target.open(encoding="utf-8", newline="") as file:
            first = file.readline().rstrip("\n")
            return first, list(csv.DictReader(file))
