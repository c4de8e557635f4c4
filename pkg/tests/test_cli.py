from __future__ import annotations

import json

import pytest

from ovqite import evolution
from ovqite.__about__ import __version__
from ovqite.cli import NOT_REACHED, cli
from ovqite.exceptions import SolverError


def invoke(*args: str, environ: dict[str, str] | None = None) -> int:
    with pytest.raises(SystemExit) as info:
        cli.main(list(args), prog_name="ovqite", environ=environ or {})
    return info.value.code


def test_version(capsys):
    assert invoke("version") == 0
    assert capsys.readouterr().out == f"ovqite {__version__}\n"


def test_verbose_flag_precedes_the_command(capsys):
    assert invoke("--verbose", "version") == 0
    assert capsys.readouterr().out.startswith("ovqite ")


def test_run_writes_all_outputs(tmp_path, write_config, capsys):
    config = write_config()
    assert invoke("run", str(config)) == 0

    out = capsys.readouterr().out
    assert out.startswith("OVQITE_S_H: rel_error=")
    assert "status=ok" in out

    lines = (tmp_path / "experiment.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith(f"# ovqite {__version__} config_hash=")
    assert lines[0].endswith(" seed=0")
    assert len(lines) == 2 + 3

    assert (tmp_path / "experiment.ledger.csv").exists()
    summary = json.loads((tmp_path / "experiment.summary.json").read_text())
    assert summary["steps_completed"] == 2
    assert summary["status"] == "ok"
    assert sorted(label for label, _ in summary["hamiltonian"]) == [
        "IIX",
        "IXI",
        "IZZ",
        "XII",
        "ZIZ",
        "ZZI",
    ]
    assert len(summary["operator_set"]) == 6


def test_shot_runs_are_byte_identical(tmp_path, write_config):
    config = write_config('mode = "shots"\nshots = 200\nseed = 4')
    output = tmp_path / "experiment.csv"

    assert invoke("run", str(config)) == 0
    first = output.read_bytes()
    assert invoke("run", str(config)) == 0
    assert output.read_bytes() == first


def test_seed_from_environment(tmp_path, write_config):
    config = write_config('mode = "shots"\nshots = 200')
    assert invoke("run", str(config), environ={"OVQITE_SEED": "5"}) == 0

    first = (tmp_path / "experiment.csv").read_text(encoding="utf-8").splitlines()[0]
    assert first.endswith(" seed=5")


def test_seed_and_output_options(tmp_path, write_config):
    config = write_config()
    output = tmp_path / "other.csv"
    assert invoke("run", str(config), "--seed", "8", "-o", str(output)) == 0

    assert output.read_text(encoding="utf-8").startswith("# ovqite")
    assert (tmp_path / "other.summary.json").exists()
    assert json.loads((tmp_path / "other.summary.json").read_text())["seed"] == 8


def test_json_trajectory(tmp_path):
    output = tmp_path / "run.json"
    path = tmp_path / "json.toml"
    path.write_text(
        "[model]\nn = 3\n[ansatz]\nlayers = 1\n[evolution]\nsteps = 1\n"
        f'[output]\npath = "{output.as_posix()}"\nformat = "json"\n',
        encoding="utf-8",
    )
    assert invoke("run", str(path)) == 0

    document = json.loads(output.read_text(encoding="utf-8"))
    assert document["seed"] == 0
    assert [record["step"] for record in document["records"]] == [0, 1]
    assert document["records"][0]["loss"] is None
    assert (tmp_path / "run.summary.json").exists()


def test_missing_config_exits_with_config_error(tmp_path, capsys):
    assert invoke("run", str(tmp_path / "missing.toml")) == 2
    assert "missing.toml" in capsys.readouterr().err


def test_invalid_config_exits_with_config_error(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[evolution]\nsteps = -3\n", encoding="utf-8")
    assert invoke("run", str(path)) == 2


def test_capability_error_exit_code(tmp_path):
    path = tmp_path / "large.toml"
    path.write_text(
        '[model]\nn = 15\n[evolution]\nsteps = 0\n[output]\npath = "x.csv"\n',
        encoding="utf-8",
    )
    assert invoke("run", str(path)) == 3


def test_solver_failure_exit_code(tmp_path, write_config, monkeypatch, capsys):
    def failing(workspace, cfg, rcond):
        raise SolverError("singular system")

    monkeypatch.setattr(evolution, "solve_workspace", failing)
    config = write_config()

    assert invoke("run", str(config)) == 4
    assert "Solver error: singular system" in capsys.readouterr().err

    summary = json.loads((tmp_path / "experiment.summary.json").read_text())
    assert summary["status"] == "solver-failure"
    assert summary["steps_completed"] == 0


def test_scaling_table(capsys):
    assert invoke("scaling", "--sizes", "4", "--labels", "VQITE", "--layers", "1") == 0

    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == (
        "n,label,phase,circuits_grouped,circuits_naive,"
        "measurements_per_n_grouped,measurements_per_n_naive"
    )
    assert lines[1] == "4,VQITE,G,144,144,360000.0,360000.0"
    assert lines[3].startswith("4,VQITE,total,")


def test_scaling_terms(capsys):
    args = ("scaling", "--terms", "--sizes", "4,6", "--labels", "VQITE,OVQITE_S_H")
    assert invoke(*args) == 0

    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("n,operator_set,strings,groups")
    assert lines[1].startswith("4,S_H,8,2,")
    assert lines[2].startswith("6,S_H,12,2,")


def test_scaling_rejects_bad_sizes():
    assert invoke("scaling", "--sizes", "four") == 1
    assert invoke("scaling", "--labels", "QITE") == 1


def test_sweep_reports_unreached_targets(write_config, capsys):
    config = write_config()
    args = ("sweep", str(config), "--shots", "100,200", "--labels", "OVQITE_S_H")
    assert invoke(*args, "--target", "1e-12") == 0

    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# ovqite")
    assert lines[1] == (
        "label,shots,measurements_to_target,final_rel_error,status"
    )
    assert len(lines) == 4
    assert lines[2].startswith("OVQITE_S_H,100,")
    assert f",{NOT_REACHED}," in lines[2]
    assert lines[3].startswith("OVQITE_S_H,200,")


def test_sweep_reports_reached_targets(write_config, capsys):
    config = write_config()
    args = ("sweep", str(config), "--shots", "100", "--labels", "VQITE")
    assert invoke(*args, "--target", "10") == 0

    row = capsys.readouterr().out.splitlines()[2]
    assert row.split(",")[2] == "0"
