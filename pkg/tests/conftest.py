import numpy as np
import pytest

from agelq import CostWeights, PlantModel
from agelq.riccati import solve_riccati

# the scalar desk-scale instance used throughout: unstable pole, heavy noise
SCALAR = dict(a=1.5, b=0.5, w=4.0, q=5.0, r=0.1, qt=10.0, th=1.0)


def scalar_plant() -> PlantModel:
    return PlantModel(A=[[1.5]], B=[[0.5]], W=[[4.0]], m0=[0.0], M0=[[0.0]])


def scalar_weights(N=100, lam=0.1) -> CostWeights:
    return CostWeights.constant(1, 1, N, 5.0, 0.1, 10.0, 1.0, lam)


@pytest.fixture(scope="session")
def plant():
    return scalar_plant()


@pytest.fixture(scope="session")
def weights100():
    return scalar_weights()


@pytest.fixture(scope="session")
def sol100(plant, weights100):
    return solve_riccati(plant, weights100)


@pytest.fixture(scope="session")
def plant2():
    # two-state plant with coupling and correlated noise for the general path
    return PlantModel(
        A=[[1.1, 0.2], [0.0, 0.9]],
        B=[[0.0], [1.0]],
        W=[[0.5, 0.1], [0.1, 0.3]],
        m0=[1.0, -0.5],
        M0=[[0.2, 0.0], [0.0, 0.1]],
    )


@pytest.fixture(scope="session")
def weights2():
    return CostWeights.constant(2, 1, 40, np.diag([2.0, 1.0]), 0.5, np.eye(2), 0.8, 0.2)


@pytest.fixture(scope="session")
def sol2(plant2, weights2):
    return solve_riccati(plant2, weights2)
