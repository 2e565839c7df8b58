import numpy as np
import pytest

from two_stage_apm.measure import DiscreteAtoms, UniformBox
from two_stage_apm.recourse import TwoStageProblem


def newsvendor(distribution) -> TwoStageProblem:
    """min x + E[3 (h - x)^+ + (x - h)^+]: buy at 1, shortage at 3, surplus at 1; optimum 2 at the median of h."""
    return TwoStageProblem.single(
        c=np.array([1.0]),
        A=np.zeros((0, 1)),
        b=np.zeros(0),
        W=np.array([[1.0, -1.0]]),
        q=np.array([3.0, 1.0]),
        distribution=distribution,
        name="newsvendor",
    )


@pytest.fixture
def uniform_newsvendor():
    """h ~ U[0, 2]."""
    return newsvendor(UniformBox.fixed_technology_law(T=np.ones((1, 1)), h_low=np.zeros(1), h_high=np.full(1, 2.0)))


@pytest.fixture
def discrete_newsvendor():
    """h in {0.5, 1.5} with equal weights."""
    return newsvendor(DiscreteAtoms(T=np.ones((2, 1, 1)), h=np.array([[0.5], [1.5]]), weights=np.full(2, 0.5)))


@pytest.fixture
def deterministic_problem():
    """min x1 + x2 + 3 (3 - x1 - x2)^+, value 3."""
    return TwoStageProblem.single(
        c=np.array([1.0, 1.0]),
        A=np.zeros((0, 2)),
        b=np.zeros(0),
        W=np.array([[1.0, -1.0]]),
        q=np.array([3.0, 0.0]),
        distribution=DiscreteAtoms.single(T=np.array([[1.0, 1.0]]), h=np.array([3.0])),
        name="deterministic",
    )


@pytest.fixture
def capped_problem():
    """min -x + E[h - x] with y = h - x >= 0: only x <= min(h) keeps the recourse feasible; value 0."""
    return TwoStageProblem.single(
        c=np.array([-1.0]),
        A=np.zeros((0, 1)),
        b=np.zeros(0),
        W=np.array([[1.0]]),
        q=np.array([1.0]),
        distribution=DiscreteAtoms(T=np.ones((3, 1, 1)), h=np.array([[1.0], [2.0], [3.0]]), weights=np.full(3, 1 / 3)),
        name="capped",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)
