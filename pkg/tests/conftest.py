import numpy as np
import pytest

from rrcguard import nn
from rrcguard.harness import ExperimentConfig, build_benchmark
from rrcguard.ids import IdsModel
from rrcguard.sim import Scaler

ACCEPTANCE_LINES: dict[int, str] = {}


def identity_model(n=5):
    return nn.MlpModel([nn.DenseLayer(np.eye(n), np.zeros(n), nn.Activation.IDENTITY)])


def zero_map_model(n=5):
    return nn.MlpModel(
        [
            nn.DenseLayer(np.zeros((2, n)), np.zeros(2), nn.Activation.IDENTITY),
            nn.DenseLayer(np.zeros((n, 2)), np.zeros(n), nn.Activation.IDENTITY),
        ]
    )


def ids_around(model, tau=0.25, n=5):
    """IDS on an already unit-scaled feature space (scaler = identity on [0,1])."""
    return IdsModel(model, Scaler(np.zeros(n), np.ones(n)), tau, tau, 0.0, 2.0)


@pytest.fixture(scope="session")
def default_cfg():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def bench(default_cfg):
    return build_benchmark(default_cfg)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
