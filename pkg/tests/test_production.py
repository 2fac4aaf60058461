import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecorisk.production import (
    COBB_DOUGLAS,
    LEONTIEF,
    LINEAR,
    ProductionFunction,
    failure,
    survival,
)

CD = ProductionFunction()
unit = st.floats(min_value=0.0, max_value=1.0)
kinds = st.sampled_from([COBB_DOUGLAS, LEONTIEF, LINEAR])


def test_half_contributors_two_thirds_upstreams():
    # closed form: 1 - sqrt(1/2) * sqrt(2/3) = 1 - sqrt(1/3), roughly 43% risk
    assert failure(CD, 0.5, 2.0 / 3.0) == pytest.approx(1 - math.sqrt(1.0 / 3.0), abs=1e-12)
    assert survival(CD, 0.5, 2.0 / 3.0) == pytest.approx(math.sqrt(1.0 / 3.0), abs=1e-12)


def test_all_contributors_weak_upstreams():
    # all maintainers active, 60% of upstreams functional: ~80% survival
    assert survival(CD, 1.0, 0.6) == pytest.approx(math.sqrt(0.6), abs=1e-12)


@pytest.mark.parametrize("kind", [COBB_DOUGLAS, LEONTIEF, LINEAR])
def test_boundaries(kind):
    pf = ProductionFunction(kind=kind)
    assert survival(pf, 1.0, 1.0) == 1.0
    assert survival(pf, 0.0, 0.0) == 0.0
    assert failure(pf, 1.0, 1.0) == 0.0


def test_leontief_takes_minimum():
    assert survival(ProductionFunction(kind=LEONTIEF), 0.5, 0.8) == 0.5


def test_linear_averages():
    assert failure(ProductionFunction(kind=LINEAR), 0.5, 0.7) == pytest.approx(0.4)


def test_vectorized_matches_scalar():
    c = np.array([0.0, 0.5, 1.0])
    d = np.array([1.0, 2.0 / 3.0, 0.6])
    out = survival(CD, c, d)
    assert out == pytest.approx([survival(CD, ci, di) for ci, di in zip(c, d)])


def test_inputs_outside_unit_interval_rejected():
    with pytest.raises(ValueError):
        survival(CD, -0.1, 0.5)
    with pytest.raises(ValueError):
        survival(CD, 0.5, 1.1)


def test_bad_kind_and_exponent_rejected():
    with pytest.raises(ValueError):
        ProductionFunction(kind="ces")
    with pytest.raises(ValueError):
        ProductionFunction(exponent=0.0)
    with pytest.raises(ValueError):
        ProductionFunction(exponent=1.0)


def test_custom_exponent():
    pf = ProductionFunction(exponent=0.25)
    assert survival(pf, 0.5, 0.5) == pytest.approx(0.5)
    assert survival(pf, 0.25, 1.0) == pytest.approx(0.25 ** 0.25)


@given(kind=kinds, c=unit, d=unit, bump=st.floats(min_value=0.0, max_value=1.0))
def test_monotone_in_each_argument(kind, c, d, bump):
    pf = ProductionFunction(kind=kind)
    base = survival(pf, c, d)
    assert survival(pf, min(c + bump, 1.0), d) >= base - 1e-12
    assert survival(pf, c, min(d + bump, 1.0)) >= base - 1e-12


@given(c=unit, d=unit)
def test_leontief_below_cobb_douglas_below_linear(c, d):
    # AM-GM chain: min <= geometric mean <= arithmetic mean <= max
    leontief = survival(ProductionFunction(kind=LEONTIEF), c, d)
    cobb = survival(CD, c, d)
    linear = survival(ProductionFunction(kind=LINEAR), c, d)
    assert leontief <= cobb + 1e-12
    assert cobb <= linear + 1e-12
    assert linear <= max(c, d) + 1e-12


@given(kind=kinds, c=unit, d=unit)
def test_symmetric_at_balanced_exponent(kind, c, d):
    pf = ProductionFunction(kind=kind)
    assert survival(pf, c, d) == pytest.approx(survival(pf, d, c), abs=1e-12)


@given(kind=kinds, x=unit)
def test_equal_inputs_pass_through(kind, x):
    pf = ProductionFunction(kind=kind)
    assert survival(pf, x, x) == pytest.approx(x, abs=1e-12)
