from __future__ import annotations

import json
import math

import numpy as np
import pytest

from ovqite.__about__ import __version__
from ovqite.evolution import StepRecord, Trajectory
from ovqite.exceptions import OvqiteError, SolverError
from ovqite.measurement import CostLedger
from ovqite.output import (
    LEDGER_COLUMNS,
    TRAJECTORY_COLUMNS,
    Provenance,
    ledger_rows,
    read_trajectory,
    sibling_paths,
    summarize,
    write_ledger,
    write_summary,
    write_trajectory,
)
from ovqite.pauli import PauliString, PauliSum
from ovqite.types import Phase

PROVENANCE = Provenance("0123456789abcdef", 7)


@pytest.fixture
def trajectory() -> Trajectory:
    records = [
        StepRecord(0, 0.0, -3.0, -3.01, 0.25, math.nan, 0, 0, 0, 0),
        StepRecord(1, 0.02, -3.5, -3.49, 0.125, 0.5, 4, 10, 1000, 1000),
    ]
    return Trajectory(records, np.zeros(3), -4.0)


@pytest.fixture
def ledger() -> CostLedger:
    ledger = CostLedger()
    ledger.credit(Phase.ENERGY, 2, 100)
    ledger.begin_step(1)
    ledger.credit(Phase.M, 6, 100)
    ledger.credit(Phase.V, 4, 100)
    ledger.credit(Phase.ENERGY, 2, 100)
    return ledger


def test_provenance_line():
    expected = f"# ovqite {__version__} config_hash=0123456789abcdef seed=7"
    assert PROVENANCE.line == expected


def test_trajectory_csv(tmp_path, trajectory):
    path = tmp_path / "run.csv"
    write_trajectory(trajectory, path, PROVENANCE)

    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == PROVENANCE.line
    assert lines[1] == ",".join(TRAJECTORY_COLUMNS)
    assert lines[2] == "0,0.0,-3.0,-3.01,0.25,nan,0,0,0,0"
    assert lines[3] == "1,0.02,-3.5,-3.49,0.125,0.5,4,10,1000,1000"


def test_read_trajectory(tmp_path, trajectory):
    path = tmp_path / "run.csv"
    write_trajectory(trajectory, path, PROVENANCE)

    first, rows = read_trajectory(path)
    assert first == PROVENANCE.line
    assert [row["step"] for row in rows] == ["0", "1"]
    assert float(rows[1]["rel_error"]) == 0.125


def test_trajectory_json(tmp_path, trajectory):
    path = tmp_path / "run.json"
    write_trajectory(trajectory, path, PROVENANCE, "json")

    document = json.loads(path.read_text(encoding="utf-8"))
    assert document["config_hash"] == PROVENANCE.config_hash
    assert document["seed"] == 7
    assert document["records"][0]["loss"] is None
    assert document["records"][1] == {
        "step": 1,
        "tau": 0.02,
        "energy_exact": -3.5,
        "energy_estimated": -3.49,
        "rel_error": 0.125,
        "loss": 0.5,
        "sv_kept": 4,
        "circuits_step": 10,
        "shots_step": 1000,
        "measurements_cumulative": 1000,
    }


def test_ledger_rows_accumulate_budget_phases(ledger):
    assert ledger_rows(ledger) == [
        (0, "energy", 2, 200, 0),
        (1, "M", 6, 600, 600),
        (1, "v", 4, 400, 1000),
        (1, "energy", 2, 200, 1000),
    ]


def test_ledger_csv(tmp_path, ledger):
    path = tmp_path / "run.ledger.csv"
    write_ledger(ledger, path, PROVENANCE)

    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == PROVENANCE.line
    assert lines[1] == ",".join(LEDGER_COLUMNS)
    assert lines[3] == "1,M,6,600,600"


def test_summary(tmp_path, trajectory, ledger):
    summary = summarize(trajectory, ledger, PROVENANCE)

    assert summary["e0"] == -4.0
    assert summary["final_energy"] == -3.5
    assert summary["final_rel_error"] == 0.125
    assert summary["steps_completed"] == 1
    assert summary["total_circuits"] == 10
    assert summary["total_measurements"] == 1000
    assert summary["status"] == "ok"
    assert summary["failure"] is None
    assert summary["hamiltonian"] == []
    assert summary["operator_set"] == []

    path = tmp_path / "run.summary.json"
    write_summary(summary, path)
    assert json.loads(path.read_text(encoding="utf-8")) == summary


def test_summary_lists_hamiltonian_and_operators(tmp_path, trajectory, ledger):
    hamiltonian = PauliSum(2, [("ZZ", -1.0), ("XI", -0.5)])
    operators = (PauliString("YI"), PauliString("ZY"))
    summary = summarize(
        trajectory, ledger, PROVENANCE, hamiltonian=hamiltonian, operators=operators
    )

    assert summary["hamiltonian"] == [["ZZ", -1.0], ["XI", -0.5]]
    assert summary["operator_set"] == ["YI", "ZY"]

    path = tmp_path / "run.summary.json"
    write_summary(summary, path)
    assert json.loads(path.read_text(encoding="utf-8")) == summary


def test_summary_reports_failure(trajectory, ledger):
    trajectory.failure = SolverError("diverged", {"iteration": 3})
    summary = summarize(trajectory, ledger, PROVENANCE)
    assert summary["status"] == "solver-failure"
    assert summary["failure"] == "diverged (iteration=3)"


def test_sibling_paths(tmp_path):
    ledger_path, summary_path = sibling_paths(tmp_path / "runs" / "a.csv")
    assert ledger_path == tmp_path / "runs" / "a.ledger.csv"
    assert summary_path == tmp_path / "runs" / "a.summary.json"


def test_unwritable_path(tmp_path, trajectory):
    with pytest.raises(OvqiteError):
        write_trajectory(trajectory, tmp_path / "missing" / "run.csv", PROVENANCE)
