"""Variational imaginary-time evolution.

Both algorithms advance the parameters with forward Euler steps
``theta <- theta + delta * theta_dot`` where ``theta_dot`` solves
``G theta_dot = b``. OVQITE builds ``G = M^T M`` and ``b = M^T v`` from the
parameter derivatives ``M`` of the operator-set expectations and their
imaginary-time derivatives ``v``; VQITE uses the geometric tensor and the
negative energy gradient.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt

from ovqite.ansatz import HeaAnsatz, derivative_matrix, energy_gradient, qgt
from ovqite.exceptions import (
    DimensionError,
    IncompleteEstimatesError,
    SolverError,
    ValidationError,
)
from ovqite.linalg import EivProblem, PinvConfig, SolveReport, eiv_solve, pinv_solve
from ovqite.measurement import (
    CostLedger,
    Estimator,
    ExactEstimator,
    ShotEstimator,
    anticommutators,
    estimate_expectations,
    v_strings,
)
from ovqite.pauli import PauliString, PauliSum
from ovqite.scheduler import Scheduler, make_scheduler
from ovqite.statevector import expectation_sum
from ovqite.tfim import (
    OPERATOR_SET_NAMES,
    OperatorSet,
    TfimParams,
    build_tfim,
    custom_operator_set,
    exact_ground_energy,
    full_operator_set,
    operator_set,
)
from ovqite.types import Algorithm, Mode, Phase, SolverKind, Strategy
from ovqite.utils import derive_rng

logger = logging.getLogger(__name__)

#: Field ratio ``h / J`` from which the smaller near-critical cutoffs apply.
CRITICAL_FIELD_RATIO = 0.75


def default_rcond(
    algorithm: Algorithm, set_name: str, field_ratio: float, mode: Mode
) -> float:
    """Singular-value cutoff tuned per algorithm, operator set and noise model."""
    near_critical = field_ratio >= CRITICAL_FIELD_RATIO

    if Algorithm(algorithm) is Algorithm.VQITE:
        return 1e-6 if Mode(mode) is Mode.EXACT else 1e-3

    if set_name == "S_H":
        return 1e-4

    if Mode(mode) is Mode.EXACT:
        return 5e-6 if near_critical else 1e-5
    return 5e-5 if near_critical else 1e-4


def parse_label(label: str) -> tuple[Algorithm, str]:
    """Splits ``VQITE`` or ``OVQITE_<set>`` into algorithm and operator set."""
    name = label.strip().upper()
    if name == "VQITE":
        return Algorithm.VQITE, "S_H"

    prefix, _, set_name = name.partition("_")
    if prefix != "OVQITE" or set_name not in OPERATOR_SET_NAMES:
        raise ValidationError(f"Unknown algorithm label {label!r}.")
    return Algorithm.OVQITE, set_name


@dataclasses.dataclass(frozen=True, slots=True)
class EvolutionConfig:
    algorithm: Algorithm = Algorithm.OVQITE
    operator_set: str = "S_H"
    operators: tuple[str, ...] = ()
    delta: float = 0.02
    steps: int = 150
    mode: Mode = Mode.EXACT
    shots: int = 10_000
    rcond: float | None = None
    solver: SolverKind = SolverKind.PINV
    strategy: Strategy = Strategy.GROUPED
    seed: int = 0
    workers: int = 1
    eiv_lambda: float = math.inf
    eiv_max_iters: int = 500
    eiv_tol: float = 1e-8
    eiv_floor: float = 1e-10

    def __post_init__(self) -> None:
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "solver", SolverKind(self.solver))
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(self, "operators", tuple(self.operators))

        if self.operator_set not in (*OPERATOR_SET_NAMES, "custom"):
            raise ValidationError(f"Unknown operator set {self.operator_set!r}.")
        if self.operator_set == "custom" and not self.operators:
            raise ValidationError("A custom operator set needs at least one operator.")
        if not self.delta > 0:
            raise ValidationError(f"The time step must be positive, got {self.delta}.")
        if self.steps < 0:
            msg = f"Number of steps must be non-negative, got {self.steps}."
            raise ValidationError(msg)
        if self.shots < 1:
            msg = f"Number of shots must be positive, got {self.shots}."
            raise ValidationError(msg)
        if self.rcond is not None and not 0 < self.rcond < 1:
            raise ValidationError(f"rcond must lie in (0, 1), got {self.rcond}.")
        if self.workers < 1:
            msg = f"Number of workers must be positive, got {self.workers}."
            raise ValidationError(msg)
        if not self.eiv_lambda > 0:
            msg = f"eiv_lambda must be positive, got {self.eiv_lambda}."
            raise ValidationError(msg)
        if self.eiv_max_iters < 0 or not self.eiv_tol > 0 or self.eiv_floor < 0:
            raise ValidationError("Invalid EIV solver settings.")

    def estimator(self, step: int = 0) -> Estimator:
        if self.mode is Mode.EXACT:
            return ExactEstimator(nominal_shots=self.shots)
        return ShotEstimator(self.shots, self.seed, step)

    def resolve_rcond(self, set_name: str, field_ratio: float = 0.0) -> float:
        if self.rcond is not None:
            return self.rcond
        return default_rcond(self.algorithm, set_name, field_ratio, self.mode)

    @property
    def label(self) -> str:
        if self.algorithm is Algorithm.VQITE:
            return "VQITE"
        return f"OVQITE_{self.operator_set}"


@dataclasses.dataclass(frozen=True, eq=False)
class StepWorkspace:
    """The linear system of one step and the data needed to weigh its noise."""

    g: npt.NDArray[np.float64]
    b: npt.NDArray[np.float64]
    loss_constant: float = 0.0
    m: npt.NDArray[np.float64] | None = None
    v: npt.NDArray[np.float64] | None = None
    m_variance: npt.NDArray[np.float64] | None = None
    v_variance: npt.NDArray[np.float64] | None = None
    g_variance: npt.NDArray[np.float64] | None = None
    b_variance: npt.NDArray[np.float64] | None = None

    def loss(self, theta_dot: npt.ArrayLike) -> float:
        x = np.asarray(theta_dot, dtype=np.float64)
        return float(0.5 * x @ self.g @ x - x @ self.b + self.loss_constant)

    def eiv_problem(self, lam: float, floor: float) -> EivProblem:
        if self.m is not None and self.v is not None:
            a, target = self.m, self.v
            var_a, var_b = self.m_variance, self.v_variance
        else:
            a, target = self.g, self.b
            var_a, var_b = self.g_variance, self.b_variance

        if var_a is None:
            var_a = np.zeros_like(a)
        if var_b is None:
            var_b = np.zeros_like(target)

        return EivProblem.diagonal(a, target, var_a, var_b, lam=lam, floor=floor)


@dataclasses.dataclass(frozen=True, slots=True)
class StepRecord:
    step: int
    tau: float
    energy_exact: float
    energy_estimated: float
    rel_error: float
    loss: float
    sv_kept: int
    circuits_step: int
    shots_step: int
    measurements_cumulative: int
    truncated: bool = False
    theta_dot_norm: float = 0.0


@dataclasses.dataclass(eq=False)
class Trajectory:
    records: list[StepRecord]
    theta: npt.NDArray[np.float64]
    e0: float
    failure: SolverError | None = None

    @property
    def final(self) -> StepRecord:
        return self.records[-1]

    @property
    def status(self) -> str:
        return "ok" if self.failure is None else "solver-failure"

    def measurements_to_target(self, target: float) -> int | None:
        """Cumulative measurements when ``rel_error`` first drops to ``target``."""
        for record in self.records:
            if record.rel_error <= target:
                return record.measurements_cumulative
        return None

    def __len__(self) -> int:
        return len(self.records)


def _lookup(estimates: dict[PauliString, float], string: PauliString) -> float:
    try:
        return estimates[string]
    except KeyError:
        raise IncompleteEstimatesError(str(string)) from None


def _energy(estimates: dict[PauliString, float], h: PauliSum) -> float:
    return sum(c.real * _lookup(estimates, p) for p, c in h.items())


def v_vector(
    estimates: dict[PauliString, float], h: PauliSum, s_set: Sequence[PauliString]
) -> npt.NDArray[np.float64]:
    """``v_j = -<{H, O_j}> + 2 <H> <O_j>`` from estimated expectation values."""
    members = tuple(s_set)
    energy = _energy(estimates, h)
    pairs = zip(members, anticommutators(h, members), strict=True)
    return np.array(
        [
            -_energy(estimates, expansion) + 2 * energy * _lookup(estimates, member)
            for member, expansion in pairs
        ]
    )


def _v_variance(
    estimates: dict[PauliString, float],
    h: PauliSum,
    members: tuple[PauliString, ...],
    estimator: Estimator,
) -> npt.NDArray[np.float64]:
    def variance(string: PauliString) -> float:
        return float(estimator.pauli_variance(_lookup(estimates, string)))

    energy = _energy(estimates, h)
    energy_variance = sum(abs(c) ** 2 * variance(p) for p, c in h.items())
    pairs = zip(members, anticommutators(h, members), strict=True)

    return np.array(
        [
            sum(abs(c) ** 2 * variance(p) for p, c in expansion.items())
            + 4 * _lookup(estimates, member) ** 2 * energy_variance
            + 4 * energy**2 * variance(member)
            for member, expansion in pairs
        ]
    )


def build_ovqite_workspace(
    ansatz: HeaAnsatz,
    theta: npt.ArrayLike,
    h: PauliSum,
    s_set: Sequence[PauliString],
    estimator: Estimator,
    ledger: CostLedger | None = None,
    *,
    strategy: Strategy = Strategy.GROUPED,
    scheduler: Scheduler | None = None,
) -> StepWorkspace:
    members = tuple(s_set)
    derivatives = derivative_matrix(
        ansatz,
        theta,
        members,
        estimator,
        ledger,
        strategy=strategy,
        scheduler=scheduler,
    )
    estimates = estimate_expectations(
        ansatz,
        theta,
        v_strings(h, members),
        estimator,
        ledger,
        phase=Phase.V,
        strategy=strategy,
    )

    m = derivatives.values
    v = v_vector(estimates, h, members)

    return StepWorkspace(
        g=m.T @ m,
        b=m.T @ v,
        loss_constant=0.5 * float(v @ v),
        m=m,
        v=v,
        m_variance=derivatives.variances,
        v_variance=_v_variance(estimates, h, members, estimator),
    )


def build_vqite_workspace(
    ansatz: HeaAnsatz,
    theta: npt.ArrayLike,
    h: PauliSum,
    estimator: Estimator,
    ledger: CostLedger | None = None,
    *,
    strategy: Strategy = Strategy.GROUPED,
    scheduler: Scheduler | None = None,
) -> StepWorkspace:
    tensor = qgt(ansatz, theta, estimator, ledger, scheduler=scheduler)
    gradient = energy_gradient(
        ansatz, theta, h, estimator, ledger, strategy=strategy, scheduler=scheduler
    )
    return StepWorkspace(
        g=tensor.values,
        b=gradient.values,
        g_variance=tensor.variances,
        b_variance=gradient.variances,
    )


def solve_workspace(
    workspace: StepWorkspace, cfg: EvolutionConfig, rcond: float
) -> tuple[npt.NDArray[np.float64], SolveReport]:
    if cfg.solver is SolverKind.PINV:
        return pinv_solve(workspace.g, workspace.b, PinvConfig(rcond))

    result = eiv_solve(
        workspace.eiv_problem(cfg.eiv_lambda, cfg.eiv_floor),
        max_iters=cfg.eiv_max_iters,
        tol=cfg.eiv_tol,
    )
    singular_values = np.linalg.svd(workspace.g, compute_uv=False)
    residual = float(np.linalg.norm(workspace.g @ result.x - workspace.b))
    return result.x, SolveReport(singular_values, result.x.size, residual, 0.0)


def _relative_error(energy: float, e0: float | None) -> float:
    if e0 is None or e0 == 0:
        return math.nan
    return abs(energy - e0) / abs(e0)


def _diagnose(
    ansatz: HeaAnsatz,
    theta: npt.NDArray[np.float64],
    h: PauliSum,
    cfg: EvolutionConfig,
    estimator: Estimator,
    ledger: CostLedger,
) -> tuple[float, float]:
    """Exact and estimated energies of the current parameters."""
    exact = expectation_sum(ansatz.prepare_state(theta), h)
    estimates = estimate_expectations(
        ansatz,
        theta,
        h.strings,
        estimator,
        ledger,
        phase=Phase.ENERGY,
        strategy=cfg.strategy,
    )
    estimated = exact if estimator.is_exact else _energy(estimates, h)
    return exact, estimated


def _record(
    step: int,
    tau: float,
    energies: tuple[float, float],
    e0: float | None,
    ledger: CostLedger,
    *,
    loss: float = math.nan,
    report: SolveReport | None = None,
    theta_dot: npt.NDArray[np.float64] | None = None,
) -> StepRecord:
    exact, estimated = energies
    return StepRecord(
        step=step,
        tau=tau,
        energy_exact=exact,
        energy_estimated=estimated,
        rel_error=_relative_error(exact, e0),
        loss=loss,
        sv_kept=0 if report is None else report.kept,
        circuits_step=ledger.budget_circuits(step),
        shots_step=ledger.budget_shots(step),
        measurements_cumulative=ledger.measurements,
        truncated=report is not None and report.truncated_all,
        theta_dot_norm=0.0 if theta_dot is None else float(np.linalg.norm(theta_dot)),
    )


def _advance(
    ansatz: HeaAnsatz,
    theta: npt.NDArray[np.float64],
    h: PauliSum,
    workspace: StepWorkspace,
    cfg: EvolutionConfig,
    ledger: CostLedger,
    estimator: Estimator,
    *,
    step: int,
    rcond: float,
    e0: float | None,
    delta: float | None,
) -> tuple[npt.NDArray[np.float64], StepRecord]:
    theta_dot, report = solve_workspace(workspace, cfg, rcond)

    if report.truncated_all:
        logger.warning("Step %d: every singular value was truncated", step)
        theta_dot = np.zeros_like(theta)

    delta = cfg.delta if delta is None else delta
    theta_next = theta + delta * theta_dot
    energies = _diagnose(ansatz, theta_next, h, cfg, estimator, ledger)

    record = _record(
        step,
        step * cfg.delta,
        energies,
        e0,
        ledger,
        loss=workspace.loss(theta_dot),
        report=report,
        theta_dot=theta_dot,
    )
    return theta_next, record


def ovqite_step(
    ansatz: HeaAnsatz,
    theta: npt.ArrayLike,
    h: PauliSum,
    s_set: Sequence[PauliString],
    cfg: EvolutionConfig,
    ledger: CostLedger,
    *,
    step: int = 1,
    rcond: float | None = None,
    e0: float | None = None,
    delta: float | None = None,
    field_ratio: float = 0.0,
    scheduler: Scheduler | None = None,
) -> tuple[npt.NDArray[np.float64], StepRecord]:
    values = ansatz.check_parameters(theta)
    estimator = cfg.estimator(step)
    ledger.begin_step(step)

    set_name = s_set.name if isinstance(s_set, OperatorSet) else "custom"
    workspace = build_ovqite_workspace(
        ansatz,
        values,
        h,
        s_set,
        estimator,
        ledger,
        strategy=cfg.strategy,
        scheduler=scheduler,
    )
    return _advance(
        ansatz,
        values,
        h,
        workspace,
        cfg,
        ledger,
        estimator,
        step=step,
        rcond=cfg.resolve_rcond(set_name, field_ratio) if rcond is None else rcond,
        e0=e0,
        delta=delta,
    )


def vqite_step(
    ansatz: HeaAnsatz,
    theta: npt.ArrayLike,
    h: PauliSum,
    cfg: EvolutionConfig,
    ledger: CostLedger,
    *,
    step: int = 1,
    rcond: float | None = None,
    e0: float | None = None,
    delta: float | None = None,
    scheduler: Scheduler | None = None,
) -> tuple[npt.NDArray[np.float64], StepRecord]:
    values = ansatz.check_parameters(theta)
    estimator = cfg.estimator(step)
    ledger.begin_step(step)

    workspace = build_vqite_workspace(
        ansatz, values, h, estimator, ledger, strategy=cfg.strategy, scheduler=scheduler
    )
    return _advance(
        ansatz,
        values,
        h,
        workspace,
        cfg,
        ledger,
        estimator,
        step=step,
        rcond=cfg.resolve_rcond("") if rcond is None else rcond,
        e0=e0,
        delta=delta,
    )


def initial_parameters(ansatz: HeaAnsatz, seed: int) -> npt.NDArray[np.float64]:
    """Uniform draws from ``[-pi, pi)``."""
    return derive_rng(seed).uniform(-math.pi, math.pi, ansatz.num_parameters)


def resolve_operator_set(
    model: TfimParams | PauliSum, cfg: EvolutionConfig
) -> OperatorSet:
    if cfg.operator_set == "custom":
        return custom_operator_set(cfg.operators)

    if isinstance(model, TfimParams):
        return operator_set(model, cfg.operator_set)

    if cfg.operator_set == "S_H":
        return OperatorSet("S_H", tuple(s for s in model.strings if not s.is_identity))

    if cfg.operator_set == "S_FULL":
        return full_operator_set(model.n)

    raise ValidationError(f"Operator set {cfg.operator_set} needs a lattice model.")


def run_evolution(
    cfg: EvolutionConfig,
    model: TfimParams | PauliSum,
    ansatz: HeaAnsatz,
    theta0: npt.ArrayLike | None = None,
    *,
    ledger: CostLedger | None = None,
    scheduler: Scheduler | None = None,
) -> Trajectory:
    h = build_tfim(model) if isinstance(model, TfimParams) else model
    if h.n != ansatz.n:
        raise DimensionError(f"Hamiltonian acts on {h.n} qubits, ansatz on {ansatz.n}.")

    s_set = None
    if cfg.algorithm is Algorithm.OVQITE:
        s_set = resolve_operator_set(model, cfg)
    if s_set is not None and s_set.n != h.n:
        raise DimensionError(f"Operator set acts on {s_set.n} qubits, model on {h.n}.")

    field_ratio = model.field_ratio if isinstance(model, TfimParams) else 0.0
    rcond = cfg.resolve_rcond(cfg.operator_set, field_ratio)
    e0 = exact_ground_energy(h)
    ledger = ledger if ledger is not None else CostLedger()

    if theta0 is None:
        theta = initial_parameters(ansatz, cfg.seed)
    else:
        theta = np.array(ansatz.check_parameters(theta0), dtype=np.float64)

    logger.info(
        "Running %s for %d steps (n=%d, parameters=%d, mode=%s, rcond=%g, E0=%.10g)",
        cfg.label,
        cfg.steps,
        h.n,
        ansatz.num_parameters,
        cfg.mode.value,
        rcond,
        e0,
    )

    ledger.begin_step(0)
    energies = _diagnose(ansatz, theta, h, cfg, cfg.estimator(0), ledger)
    records = [_record(0, 0.0, energies, e0, ledger)]
    failure: SolverError | None = None

    owns_scheduler = scheduler is None
    scheduler = scheduler or make_scheduler(cfg.workers)

    try:
        for step in range(1, cfg.steps + 1):
            try:
                if s_set is not None:
                    theta, record = ovqite_step(
                        ansatz,
                        theta,
                        h,
                        s_set,
                        cfg,
                        ledger,
                        step=step,
                        rcond=rcond,
                        e0=e0,
                        scheduler=scheduler,
                    )
                else:
                    theta, record = vqite_step(
                        ansatz,
                        theta,
                        h,
                        cfg,
                        ledger,
                        step=step,
                        rcond=rcond,
                        e0=e0,
                        scheduler=scheduler,
                    )
            except SolverError as error:
                logger.error("Step %d failed: %s", step, error.format_message())
                failure = error
                break

            records.append(record)
            logger.info(
                "step=%d tau=%.4f energy=%.10g rel_error=%.3e kept=%d",
                record.step,
                record.tau,
                record.energy_exact,
                record.rel_error,
                record.sv_kept,
            )
    finally:
        if owns_scheduler:
            scheduler.close()

    return Trajectory(records, theta, e0, failure)
