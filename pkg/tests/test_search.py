import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nclsim.search import golden_max


@given(st.floats(-5, 5))
def test_finds_parabola_peak(c):
    x, fx, probes = golden_max(lambda x: -((x - c) ** 2), -10, 10, tol=1e-8)
    assert abs(x - c) < 1e-6
    assert fx == max(p[1] for p in probes)


def test_tie_goes_to_smaller_x():
    x, _, _ = golden_max(lambda x: 1.0, 0.0, 1.0, tol=1e-6)
    assert x < 0.5


def test_monotone_objective_ends_at_upper_edge():
    x, _, _ = golden_max(math.exp, 0.0, 1.0, tol=1e-7)
    assert 1.0 - x < 1e-6


def test_rejects_empty_bracket():
    with pytest.raises(ValueError):
        golden_max(abs, 1.0, 1.0)
