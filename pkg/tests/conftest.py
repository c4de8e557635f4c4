from __future__ import annotations

import pathlib
import textwrap

import numpy as np
import numpy.typing as npt
import pytest

from ovqite.ansatz import HeaAnsatz
from ovqite.pauli import PauliSum
from ovqite.statevector import StateVector
from ovqite.tfim import TfimParams, build_tfim

CONFIG_DIR = pathlib.Path(__file__).parents[1] / "configs"


def random_state(n: int, seed: int = 0) -> StateVector:
    rng = np.random.default_rng(seed)
    amplitudes = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return StateVector.from_unnormalized(amplitudes)


def random_theta(ansatz: HeaAnsatz, seed: int = 0) -> npt.NDArray[np.float64]:
    rng = np.random.default_rng(seed)
    return rng.uniform(-np.pi, np.pi, ansatz.num_parameters)


@pytest.fixture
def model() -> TfimParams:
    return TfimParams(n=4, h=0.5)


@pytest.fixture
def hamiltonian(model: TfimParams) -> PauliSum:
    return build_tfim(model)


@pytest.fixture
def ansatz() -> HeaAnsatz:
    return HeaAnsatz(4, 1)


@pytest.fixture
def theta(ansatz: HeaAnsatz) -> npt.NDArray[np.float64]:
    return random_theta(ansatz, seed=1)


@pytest.fixture
def write_config(tmp_path: pathlib.Path):
    """Writes a small experiment whose outputs land in ``tmp_path``."""

    def write(evolution: str = "", name: str = "experiment") -> pathlib.Path:
        path = tmp_path / f"{name}.toml"
        body = f"""
            [model]
            n = 3
            h = 0.5

            [ansatz]
            layers = 1

            [evolution]
            steps = 2
            {evolution}

            [output]
            path = "{(tmp_path / name).as_posix()}.csv"
            """
        path.write_text(textwrap.dedent(body), encoding="utf-8")
        return path

    return write
