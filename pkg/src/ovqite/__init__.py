from ovqite.__about__ import __version__
from ovqite.ansatz import (
    HeaAnsatz,
    derivative_matrix,
    energy_gradient,
    psr_derivative,
    qgt,
    survival_probability,
)
from ovqite.config import ExperimentConfig, load_config, parse_config
from ovqite.evolution import (
    EvolutionConfig,
    StepRecord,
    Trajectory,
    ovqite_step,
    run_evolution,
    vqite_step,
)
from ovqite.exceptions import (
    CapabilityError,
    ConfigError,
    DefinitenessError,
    DimensionError,
    IncompleteEstimatesError,
    OvqiteError,
    SolverError,
    ValidationError,
)
from ovqite.linalg import EivProblem, eiv_solve, pinv_solve
from ovqite.measurement import (
    CostLedger,
    ExactEstimator,
    ShotEstimator,
    group_paulis,
    group_qubit_wise,
    plan_measurements,
)
from ovqite.oracle import ehrenfest_rhs, exact_ite_oracle
from ovqite.pauli import PauliString, PauliSum
from ovqite.statevector import StateVector, apply_circuit, expectation
from ovqite.tfim import TfimParams, build_tfim, exact_ground_energy, operator_set
from ovqite.types import Algorithm, Mode, Phase, SolverKind, Strategy

__all__ = [
    "__version__",
    "Algorithm",
    "apply_circuit",
    "build_tfim",
    "CapabilityError",
    "ConfigError",
    "CostLedger",
    "DefinitenessError",
    "derivative_matrix",
    "DimensionError",
    "ehrenfest_rhs",
    "EivProblem",
    "eiv_solve",
    "energy_gradient",
    "EvolutionConfig",
    "exact_ground_energy",
    "exact_ite_oracle",
    "ExactEstimator",
    "expectation",
    "ExperimentConfig",
    "group_paulis",
    "group_qubit_wise",
    "HeaAnsatz",
    "IncompleteEstimatesError",
    "load_config",
    "Mode",
    "operator_set",
    "OvqiteError",
    "ovqite_step",
    "parse_config",
    "PauliString",
    "PauliSum",
    "Phase",
    "pinv_solve",
    "plan_measurements",
    "psr_derivative",
    "qgt",
    "run_evolution",
    "ShotEstimator",
    "SolverError",
    "SolverKind",
    "StateVector",
    "StepRecord",
    "Strategy",
    "survival_probability",
    "TfimParams",
    "Trajectory",
    "ValidationError",
    "vqite_step",
]
