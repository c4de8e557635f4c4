from __future__ import annotations

import csv
import dataclasses
import logging
import pathlib
import sys
from collections.abc import Sequence
from typing import Annotated, TextIO

import tabb

from ovqite.__about__ import __version__
from ovqite.ansatz import HeaAnsatz
from ovqite.config import ExperimentConfig, load_config
from ovqite.evolution import (
    Trajectory,
    parse_label,
    resolve_operator_set,
    run_evolution,
)
from ovqite.exceptions import ValidationError
from ovqite.measurement import CostLedger
from ovqite.output import (
    Provenance,
    sibling_paths,
    summarize,
    write_ledger,
    write_summary,
    write_trajectory,
)
from ovqite.scaling import ScalingRow, TermRow, scaling_rows, term_rows
from ovqite.scheduler import Scheduler
from ovqite.tfim import build_tfim
from ovqite.types import Algorithm, Mode
from ovqite.utils import format_float, split_csv

logger = logging.getLogger(__name__)

NOT_REACHED = "not reached"

LABELS_HELP = "Comma separated algorithms, e.g. VQITE,OVQITE_S_H."


@dataclasses.dataclass(frozen=True, slots=True)
class SweepRow:
    label: str
    shots: int
    measurements_to_target: int | str
    final_rel_error: float
    status: str


Row = ScalingRow | TermRow | SweepRow


def run_experiment(
    cfg: ExperimentConfig, scheduler: Scheduler | None = None
) -> tuple[Trajectory, CostLedger]:
    ansatz = HeaAnsatz(cfg.model.n, cfg.ansatz.layers)
    ledger = CostLedger()
    trajectory = run_evolution(
        cfg.evolution, cfg.model, ansatz, ledger=ledger, scheduler=scheduler
    )
    return trajectory, ledger


def sweep_rows(
    cfg: ExperimentConfig,
    labels: Sequence[str],
    shot_counts: Sequence[int],
    target: float,
) -> list[SweepRow]:
    """Shot-mode runs of every label and shot count against one accuracy target."""
    rows: list[SweepRow] = []

    for label in labels:
        algorithm, set_name = parse_label(label)

        for shots in shot_counts:
            run_cfg = cfg.with_overrides(
                {
                    "evolution.algorithm": algorithm.value,
                    "evolution.operator_set": set_name,
                    "evolution.mode": Mode.SHOTS.value,
                    "evolution.shots": shots,
                }
            )
            trajectory, _ = run_experiment(run_cfg)
            reached = trajectory.measurements_to_target(target)

            row = SweepRow(
                run_cfg.evolution.label,
                shots,
                NOT_REACHED if reached is None else reached,
                trajectory.final.rel_error,
                trajectory.status,
            )
            logger.info("%s, %d shots: %s", label, shots, row.measurements_to_target)
            rows.append(row)

    return rows


def _parse_ints(value: str, name: str) -> list[int]:
    try:
        values = [int(item) for item in split_csv(value)]
    except ValueError:
        msg = f"{name} must be a comma separated list of integers."
        raise ValidationError(msg) from None

    if not values:
        raise ValidationError(f"{name} must not be empty.")
    return values


def _write_table(file: TextIO, rows: Sequence[Row]) -> None:
    if not rows:
        return

    writer = csv.writer(file, lineterminator="\n")
    writer.writerow(field.name for field in dataclasses.fields(rows[0]))

    for row in rows:
        writer.writerow(
            format_float(value) if isinstance(value, float) else value
            for value in dataclasses.astuple(row)
        )


@tabb.group("ovqite")
def cli(
    verbose: Annotated[
        bool, tabb.Option("--verbose", "-v", help="Log the progress of every step.")
    ] = False,
) -> None:
    """Variational imaginary-time evolution of the transverse-field Ising chain."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@cli.command("run")
def run(
    config: Annotated[pathlib.Path, tabb.Argument(help="Experiment config (TOML).")],
    seed: Annotated[
        int | None,
        tabb.Option("--seed", envvar="OVQITE_SEED", help="Override the master seed."),
    ] = None,
    output: Annotated[
        pathlib.Path | None,
        tabb.Option("--output", "-o", help="Override the trajectory path."),
    ] = None,
) -> None:
    """Run one evolution and write the trajectory, ledger and summary files."""
    cfg = load_config(config)

    overrides: dict[str, object] = {}
    if seed is not None:
        overrides["evolution.seed"] = seed
    if output is not None:
        overrides["output.path"] = str(output)
    if overrides:
        cfg = cfg.with_overrides(overrides)

    trajectory, ledger = run_experiment(cfg)

    provenance = Provenance(cfg.config_hash(), cfg.seed)
    ledger_path, summary_path = sibling_paths(cfg.output.path)
    write_trajectory(trajectory, cfg.output.path, provenance, cfg.output.format)
    write_ledger(ledger, ledger_path, provenance)
    ovqite = cfg.evolution.algorithm is Algorithm.OVQITE
    s_set = resolve_operator_set(cfg.model, cfg.evolution) if ovqite else None
    summary = summarize(
        trajectory,
        ledger,
        provenance,
        hamiltonian=build_tfim(cfg.model),
        operators=() if s_set is None else s_set.members,
    )
    write_summary(summary, summary_path)

    print(
        f"{cfg.evolution.label}: "
        f"rel_error={format_float(trajectory.final.rel_error)} "
        f"measurements={ledger.measurements} status={trajectory.status}"
    )

    if trajectory.failure is not None:
        raise trajectory.failure


@cli.command("scaling")
def scaling(
    sizes: Annotated[
        str, tabb.Option("--sizes", help="Comma separated chain lengths.")
    ] = "4,5,6,7,8,9,10,11,12",
    labels: Annotated[
        str, tabb.Option("--labels", help=LABELS_HELP)
    ] = "VQITE,OVQITE_S_H,OVQITE_S_IM,OVQITE_S_NN",
    layers: Annotated[
        int, tabb.Option("--layers", help="Ansatz layers."), tabb.Range(min=0)
    ] = 5,
    shots: Annotated[
        int, tabb.Option("--shots", help="Shots per circuit."), tabb.Range(min=1)
    ] = 10_000,
    terms: Annotated[
        bool, tabb.Option("--terms", help="Print operator-set sizes and group counts.")
    ] = False,
) -> None:
    """Print per-step circuit counts as CSV, grouped and naive side by side."""
    n_values = _parse_ints(sizes, "--sizes")
    parsed = [parse_label(label) for label in split_csv(labels)]

    if terms:
        set_names = [name for kind, name in parsed if kind is Algorithm.OVQITE]
        _write_table(sys.stdout, term_rows(n_values, set_names))
    else:
        rows = scaling_rows(n_values, split_csv(labels), layers=layers, shots=shots)
        _write_table(sys.stdout, rows)


@cli.command("sweep")
def sweep(
    config: Annotated[pathlib.Path, tabb.Argument(help="Base experiment config.")],
    shots: Annotated[
        str, tabb.Option("--shots", help="Comma separated shot counts.")
    ] = "10000",
    target: Annotated[
        float,
        tabb.Option("--target", help="Relative energy error to reach."),
        tabb.Range(min=0, min_open=True),
    ] = 5e-2,
    labels: Annotated[
        str, tabb.Option("--labels", help=LABELS_HELP)
    ] = "VQITE,OVQITE_S_H,OVQITE_S_IM",
    seed: Annotated[
        int | None,
        tabb.Option("--seed", envvar="OVQITE_SEED", help="Override the master seed."),
    ] = None,
) -> None:
    """Print the measurements each algorithm needs to reach a target accuracy."""
    cfg = load_config(config)
    if seed is not None:
        cfg = cfg.with_overrides({"evolution.seed": seed})

    shot_counts = _parse_ints(shots, "--shots")
    rows = sweep_rows(cfg, split_csv(labels), shot_counts, target)

    print(Provenance(cfg.config_hash(), cfg.seed).line)
    _write_table(sys.stdout, rows)


@cli.command("version")
def version() -> None:
    """Print the package version."""
    print(f"ovqite {__version__}")


def main() -> None:
    cli.main(prog_name="ovqite")
