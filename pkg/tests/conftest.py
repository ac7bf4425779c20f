from functools import lru_cache

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from equidist.curve import FourierCurve
from equidist.fixtures import load_fixture
from equidist.parallelism import parallel_structure

settings.register_profile(
    "equidist", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("equidist")


@lru_cache(maxsize=None)
def fixture_curve(name: str) -> FourierCurve:
    return load_fixture(name).curve


@lru_cache(maxsize=None)
def fixture_structure(name: str):
    return parallel_structure(fixture_curve(name))


@pytest.fixture
def structure():
    return fixture_structure


def circle(r: float = 1.0) -> FourierCurve:
    return FourierCurve([0, r], [0, 0], [0, 0], [0, r])


def ellipse(a: float = 2.0, b: float = 1.0) -> FourierCurve:
    return FourierCurve([0, a], [0, 0], [0, 0], [0, b])


def small_curve(coeffs) -> FourierCurve:
    """Curve dominated by the first harmonic, perturbed by ``coeffs`` (complex, k=-3..3)."""
    terms = {1: 1.0}
    for k, c in zip((-3, -2, -1, 2, 3), coeffs):
        terms[k] = terms.get(k, 0) + c
    return FourierCurve.from_complex(terms)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)
