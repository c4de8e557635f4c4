from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest

from ovqite import evolution
from ovqite.ansatz import HeaAnsatz
from ovqite.evolution import (
    EvolutionConfig,
    StepRecord,
    Trajectory,
    build_ovqite_workspace,
    build_vqite_workspace,
    default_rcond,
    initial_parameters,
    ovqite_step,
    parse_label,
    resolve_operator_set,
    run_evolution,
    v_vector,
    vqite_step,
)
from ovqite.exceptions import (
    DimensionError,
    IncompleteEstimatesError,
    SolverError,
    ValidationError,
)
from ovqite.measurement import CostLedger, ExactEstimator, count_circuits
from ovqite.oracle import ehrenfest_rhs
from ovqite.pauli import PauliSum
from ovqite.statevector import expectation
from ovqite.tfim import TfimParams, build_tfim, operator_set
from ovqite.types import Algorithm, Mode, SolverKind
from tests.conftest import random_theta

SMALL = TfimParams(n=3, h=0.5)


def small_config(**kwargs) -> EvolutionConfig:
    return EvolutionConfig(**{"steps": 3, **kwargs})


def record(step: int, rel_error: float, measurements: int) -> StepRecord:
    return StepRecord(
        step, 0.02 * step, -1.0, -1.0, rel_error, 0.0, 1, 0, 0, measurements
    )


def test_parse_label():
    assert parse_label("VQITE") == (Algorithm.VQITE, "S_H")
    assert parse_label("ovqite_s_im") == (Algorithm.OVQITE, "S_IM")
    assert parse_label("OVQITE_S_FULL") == (Algorithm.OVQITE, "S_FULL")
    with pytest.raises(ValidationError):
        parse_label("OVQITE_S_X")
    with pytest.raises(ValidationError):
        parse_label("QITE")


@pytest.mark.parametrize(
    ("algorithm", "name", "ratio", "mode", "expected"),
    [
        (Algorithm.VQITE, "S_H", 0.5, Mode.EXACT, 1e-6),
        (Algorithm.VQITE, "S_H", 1.0, Mode.SHOTS, 1e-3),
        (Algorithm.OVQITE, "S_H", 1.0, Mode.EXACT, 1e-4),
        (Algorithm.OVQITE, "S_IM", 0.5, Mode.EXACT, 1e-5),
        (Algorithm.OVQITE, "S_IM", 1.0, Mode.EXACT, 5e-6),
        (Algorithm.OVQITE, "S_NN", 0.5, Mode.SHOTS, 1e-4),
        (Algorithm.OVQITE, "S_NN", 1.0, Mode.SHOTS, 5e-5),
    ],
)
def test_default_rcond(algorithm, name, ratio, mode, expected):
    assert default_rcond(algorithm, name, ratio, mode) == expected


def test_explicit_rcond_wins():
    cfg = EvolutionConfig(rcond=1e-7)
    assert cfg.resolve_rcond("S_IM", 1.0) == 1e-7


@pytest.mark.parametrize(
    "kwargs",
    [
        {"delta": 0.0},
        {"steps": -1},
        {"shots": 0},
        {"rcond": 1.0},
        {"workers": 0},
        {"operator_set": "S_XYZ"},
        {"operator_set": "custom"},
        {"eiv_lambda": 0.0},
        {"algorithm": "qite"},
    ],
)
def test_invalid_config(kwargs):
    with pytest.raises(ValueError):
        EvolutionConfig(**kwargs)


def test_config_coerces_enums():
    cfg = EvolutionConfig(algorithm="vqite", mode="shots", solver="eiv")
    assert cfg.algorithm is Algorithm.VQITE
    assert cfg.solver is SolverKind.EIV
    assert cfg.label == "VQITE"
    assert EvolutionConfig(operator_set="S_IM").label == "OVQITE_S_IM"


def test_initial_parameters_are_seeded():
    ansatz = HeaAnsatz(3, 2)
    a = initial_parameters(ansatz, 4)
    np.testing.assert_array_equal(a, initial_parameters(ansatz, 4))
    assert a.shape == (9,)
    assert np.all((a >= -math.pi) & (a < math.pi))
    assert not np.array_equal(a, initial_parameters(ansatz, 5))


def test_v_vector_matches_ehrenfest(ansatz, theta, hamiltonian):
    members = operator_set(TfimParams(n=4, h=0.5), "S_NN").members
    state = ansatz.prepare_state(theta)
    workspace = build_ovqite_workspace(
        ansatz, theta, hamiltonian, members, ExactEstimator()
    )

    expected = [ehrenfest_rhs(hamiltonian, state, member) for member in members]
    np.testing.assert_allclose(workspace.v, expected, atol=1e-12)


def test_v_vector_reports_missing_estimates(hamiltonian):
    members = hamiltonian.strings
    with pytest.raises(IncompleteEstimatesError):
        v_vector({}, hamiltonian, members)


def test_ovqite_system_is_a_gram_matrix(ansatz, theta, hamiltonian):
    members = hamiltonian.strings[:3]
    workspace = build_ovqite_workspace(
        ansatz, theta, hamiltonian, members, ExactEstimator()
    )

    g = workspace.g
    np.testing.assert_allclose(g, g.T, atol=1e-12)
    assert np.linalg.eigvalsh(g)[0] >= -1e-10

    singular = np.linalg.svd(g, compute_uv=False)
    assert np.all(singular[len(members) :] <= 1e-10 * singular[0])


def test_quadratic_loss_identity(ansatz, theta, hamiltonian):
    workspace = build_ovqite_workspace(
        ansatz, theta, hamiltonian, hamiltonian.strings, ExactEstimator()
    )
    rng = np.random.default_rng(3)

    for _ in range(5):
        theta_dot = rng.standard_normal(ansatz.num_parameters)
        direct = 0.5 * np.sum((workspace.m @ theta_dot - workspace.v) ** 2)
        assert workspace.loss(theta_dot) == pytest.approx(direct, abs=1e-10)


def test_vqite_system(ansatz, theta, hamiltonian):
    workspace = build_vqite_workspace(ansatz, theta, hamiltonian, ExactEstimator())
    assert workspace.m is None
    assert workspace.g.shape == (ansatz.num_parameters, ansatz.num_parameters)
    np.testing.assert_allclose(workspace.g, workspace.g.T, atol=1e-12)


def test_zero_time_step_keeps_parameters(ansatz, theta, hamiltonian):
    members = operator_set(TfimParams(n=4), "S_H")
    cfg = EvolutionConfig()

    new_theta, record_ = ovqite_step(
        ansatz, theta, hamiltonian, members, cfg, CostLedger(), delta=0.0
    )
    np.testing.assert_array_equal(new_theta, theta)
    assert record_.step == 1

    new_theta, _ = vqite_step(ansatz, theta, hamiltonian, cfg, CostLedger(), delta=0.0)
    np.testing.assert_array_equal(new_theta, theta)


def test_default_rcond_follows_the_field_ratio(monkeypatch, ansatz, theta):
    original = evolution.solve_workspace
    used = []

    def recording(workspace, cfg, rcond):
        used.append(rcond)
        return original(workspace, cfg, rcond)

    monkeypatch.setattr(evolution, "solve_workspace", recording)
    model = TfimParams(n=4, h=1.0)
    members = operator_set(model, "S_IM")
    cfg = EvolutionConfig(operator_set="S_IM")
    h = build_tfim(model)

    ovqite_step(ansatz, theta, h, members, cfg, CostLedger())
    ovqite_step(
        ansatz, theta, h, members, cfg, CostLedger(), field_ratio=model.field_ratio
    )
    run_evolution(dataclasses.replace(cfg, steps=1), model, ansatz)

    assert used == [1e-5, 5e-6, 5e-6]


def test_trajectory_records_every_step():
    cfg = small_config(delta=0.02)
    trajectory = run_evolution(cfg, SMALL, HeaAnsatz(3, 1))

    assert len(trajectory) == 4
    assert [r.step for r in trajectory.records] == [0, 1, 2, 3]
    assert [r.tau for r in trajectory.records] == pytest.approx([0, 0.02, 0.04, 0.06])
    assert math.isnan(trajectory.records[0].loss)
    assert trajectory.records[0].measurements_cumulative == 0
    assert trajectory.status == "ok"
    assert trajectory.e0 < 0


def test_zero_steps_only_records_start():
    trajectory = run_evolution(small_config(steps=0), SMALL, HeaAnsatz(3, 1))
    assert len(trajectory) == 1


@pytest.mark.parametrize("algorithm", [Algorithm.OVQITE, Algorithm.VQITE])
def test_step_costs_match_static_counts(algorithm):
    ansatz = HeaAnsatz(3, 1)
    cfg = small_config(algorithm=algorithm, shots=100)
    trajectory = run_evolution(cfg, SMALL, ansatz)

    h = build_tfim(SMALL)
    members = None
    if algorithm is Algorithm.OVQITE:
        members = operator_set(SMALL, "S_H").members
    per_step = sum(
        count_circuits(algorithm, h, ansatz.num_parameters, members).values()
    )

    for step, item in enumerate(trajectory.records[1:], start=1):
        assert item.circuits_step == per_step
        assert item.shots_step == 100 * per_step
        assert item.measurements_cumulative == step * 100 * per_step


def test_shot_runs_are_reproducible():
    cfg = small_config(mode="shots", shots=500, seed=3)
    first = run_evolution(cfg, SMALL, HeaAnsatz(3, 1))
    second = run_evolution(cfg, SMALL, HeaAnsatz(3, 1))

    np.testing.assert_array_equal(first.theta, second.theta)
    assert [r.energy_estimated for r in first.records] == [
        r.energy_estimated for r in second.records
    ]


def test_results_do_not_depend_on_workers():
    serial = run_evolution(
        small_config(mode="shots", shots=500, seed=1), SMALL, HeaAnsatz(3, 1)
    )
    threaded = run_evolution(
        small_config(mode="shots", shots=500, seed=1, workers=4),
        SMALL,
        HeaAnsatz(3, 1),
    )
    np.testing.assert_array_equal(serial.theta, threaded.theta)


def test_seed_changes_shot_results():
    a = run_evolution(small_config(mode="shots", seed=1), SMALL, HeaAnsatz(3, 1))
    b = run_evolution(small_config(mode="shots", seed=2), SMALL, HeaAnsatz(3, 1))
    assert not np.array_equal(a.theta, b.theta)


def test_explicit_start_is_used():
    ansatz = HeaAnsatz(3, 1)
    theta0 = random_theta(ansatz, seed=6)
    trajectory = run_evolution(small_config(steps=0), SMALL, ansatz, theta0)
    np.testing.assert_array_equal(trajectory.theta, theta0)

    energy = sum(
        c.real * expectation(ansatz.prepare_state(theta0), p)
        for p, c in build_tfim(SMALL).items()
    )
    assert trajectory.final.energy_exact == pytest.approx(energy)


@pytest.mark.parametrize("operator_set_name", ["S_H", "S_IM"])
def test_noiseless_ovqite_lowers_energy(operator_set_name):
    model = TfimParams(n=4, h=0.5)
    cfg = EvolutionConfig(operator_set=operator_set_name, steps=25, seed=2)
    trajectory = run_evolution(cfg, model, HeaAnsatz(4, 2))

    energies = [r.energy_exact for r in trajectory.records]
    assert energies[-1] < energies[0]
    assert trajectory.final.rel_error < trajectory.records[0].rel_error


@pytest.mark.parametrize(("n", "layers"), [(3, 1), (4, 2)])
def test_noiseless_vqite_energy_is_non_increasing(n, layers):
    model = TfimParams(n=n, h=0.5)
    steps = increases = 0

    for seed in range(20):
        cfg = EvolutionConfig(algorithm="vqite", steps=10, seed=seed, rcond=1e-3)
        trajectory = run_evolution(cfg, model, HeaAnsatz(n, layers))
        energies = np.array([r.energy_exact for r in trajectory.records])

        assert energies[-1] <= energies[0] + 1e-9
        steps += len(energies) - 1
        increases += np.count_nonzero(np.diff(energies) > 1e-9)

    assert increases <= 0.05 * steps


def test_eiv_solver_runs_under_shot_noise():
    cfg = small_config(mode="shots", shots=2000, solver="eiv", eiv_lambda=100.0)
    trajectory = run_evolution(cfg, SMALL, HeaAnsatz(3, 1))
    assert trajectory.status == "ok"
    assert len(trajectory) == 4
    assert all(np.isfinite(r.energy_exact) for r in trajectory.records)


def test_solver_failure_keeps_partial_trajectory(monkeypatch):
    original = evolution.solve_workspace
    calls = []

    def failing(workspace, cfg, rcond):
        calls.append(1)
        if len(calls) == 2:
            raise SolverError("boom", {"iteration": 0})
        return original(workspace, cfg, rcond)

    monkeypatch.setattr(evolution, "solve_workspace", failing)
    trajectory = run_evolution(small_config(), SMALL, HeaAnsatz(3, 1))

    assert trajectory.status == "solver-failure"
    assert len(trajectory) == 2
    assert trajectory.failure is not None
    assert trajectory.failure.format_message() == "boom (iteration=0)"


def test_measurements_to_target():
    trajectory = Trajectory(
        [record(0, 0.5, 0), record(1, 0.04, 100), record(2, 0.01, 200)],
        np.zeros(1),
        -1.0,
    )
    assert trajectory.measurements_to_target(0.05) == 100
    assert trajectory.measurements_to_target(0.01) == 200
    assert trajectory.measurements_to_target(1e-3) is None


def test_custom_operator_set():
    cfg = EvolutionConfig(operator_set="custom", operators=("ZZI", "XII"))
    custom = resolve_operator_set(SMALL, cfg)
    assert [str(s) for s in custom.members] == ["ZZI", "XII"]


def test_pauli_sum_models():
    h = PauliSum.from_dict(2, {"ZZ": -1.0, "XI": -0.3, "IX": -0.3})
    assert len(resolve_operator_set(h, EvolutionConfig())) == 3
    assert len(resolve_operator_set(h, EvolutionConfig(operator_set="S_FULL"))) == 15
    with pytest.raises(ValidationError):
        resolve_operator_set(h, EvolutionConfig(operator_set="S_NN"))

    trajectory = run_evolution(small_config(), h, HeaAnsatz(2, 1))
    assert len(trajectory) == 4


def test_ansatz_must_match_model():
    with pytest.raises(DimensionError):
        run_evolution(small_config(), SMALL, HeaAnsatz(4, 1))
