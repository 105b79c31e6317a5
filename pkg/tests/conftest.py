import numpy as np
import pytest

from iqvi.model import Componentwise, ProblemInstance, ScaledIdentity, Translation, ConstantSet
from iqvi.sets import Ball, Interval


def ball_problem():
    # f = 2x, Phi(x) = x/4 + unit ball in R^3, alpha = 2
    return ProblemInstance(ScaledIdentity(2.0, 3), Translation(ScaledIdentity(0.25, 3), Ball(np.zeros(3), 1.0)), 2.0)


def interval_problem():
    # f = 2x, Phi(x) = 1/(1+|x|) + [-1, 1], alpha = 2
    return ProblemInstance(ScaledIdentity(2.0, 1), Translation(Componentwise("inv1p_abs", 1), Interval(-1.0, 1.0)), 2.0)


def fixed_ball_problem(alpha=4.0):
    return ProblemInstance(ScaledIdentity(2.0, 3), ConstantSet(Ball(np.zeros(3), 1.0)), alpha)


@pytest.fixture
def p7():
    return ball_problem()


@pytest.fixture
def p3():
    return interval_problem()


@pytest.fixture
def phe():
    return fixed_ball_problem()
