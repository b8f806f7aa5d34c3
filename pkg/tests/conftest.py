import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from hulllab import Params, State

settings.register_profile(
    "default", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

E1, E2, E3 = np.eye(3)


@pytest.fixture
def unit_params():
    return Params(1.0, 1.0, 0.0)


def z_star():
    return State(0.6 * E2, np.zeros(3), 0.8 * np.outer(E1, E2))


def z_prime():
    return State(0.6 * E2, np.zeros(3), 0.4 * np.outer(E1, E2))


def z_gap():
    return State(0.6 * E1, np.zeros(3), 0.8 * np.outer(E1, E2))


finite = st.floats(-10.0, 10.0, allow_nan=False, allow_infinity=False)
vec3 = st.lists(finite, min_size=3, max_size=3).map(np.array)
mat3 = st.lists(finite, min_size=9, max_size=9).map(lambda xs: np.array(xs).reshape(3, 3))


@st.composite
def params_st(draw):
    r = draw(st.floats(0.2, 5.0))
    s = draw(st.floats(0.2, 5.0))
    p = draw(st.floats(-1.0, 1.0)) * r * s
    return Params(r, s, p)


@st.composite
def ball_point(draw, radius):
    d = draw(vec3)
    n = float(np.linalg.norm(d))
    if n < 1e-6:
        return np.zeros(3)
    return d / n * radius * draw(st.floats(0.0, 0.999))


def seeds():
    return st.integers(0, 2**32 - 1)


def close(a, b, tol):
    return math.isclose(a, b, rel_tol=0.0, abs_tol=tol)
