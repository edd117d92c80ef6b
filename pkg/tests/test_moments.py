import math
import sys

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import TRIPLE_MIN
from uncertainty_bounds.moments import (
    Moments3,
    MomentPoint,
    from_uvw,
    hyperboloid_residual,
    in_uncertainty_region,
    is_valid,
    rs_value,
    sheet_energy,
    to_uvw,
)


def test_to_uvw_examples():
    assert tuple(to_uvw((1, 1, 0))) == (1, 0, 0)
    assert tuple(to_uvw((2, 1, 0.5))) == (1.5, 0.5, 0.5)
    u, v, w = to_uvw(TRIPLE_MIN)
    assert (u, v, w) == pytest.approx((1 / math.sqrt(3), 0, -1 / (2 * math.sqrt(3))), abs=1e-16)


def test_from_uvw_examples():
    assert from_uvw((1, 0, 0)) == Moments3(1, 1, 0)
    assert from_uvw(MomentPoint(1.5, 0.5, 0.5)) == Moments3(2, 1, 0.5)
    with pytest.raises(ValueError):
        from_uvw((1, 1, 0))


def test_moments_validation():
    with pytest.raises(ValueError):
        Moments3(0, 1, 0)
    with pytest.raises(ValueError):
        Moments3(1, 1, math.nan)
    assert not is_valid((1e-13, 1, 0))


def test_rs_and_region():
    assert rs_value((0.5, 0.5, 0)) == 0.25
    assert rs_value(TRIPLE_MIN) == pytest.approx(0.25, abs=1e-15)
    assert rs_value((1, 1, 1)) == 0
    assert in_uncertainty_region((0.5, 0.5, 0))
    assert not in_uncertainty_region((0.4, 0.4, 0))
    assert in_uncertainty_region((10, 10, 0))
    assert not in_uncertainty_region((0.5, 0.5, 0), hbar=2.0)


def test_sheets():
    assert hyperboloid_residual((0.5, 0, 0), 0) == 0
    assert hyperboloid_residual((1.5, 0, 0), 1) == 0
    assert hyperboloid_residual((1, 0, 0), 0) == 0.75
    for n in range(6):
        assert sheet_energy(n + 1, 0.7) - sheet_energy(n, 0.7) == pytest.approx(0.7, abs=1e-15)
    with pytest.raises(ValueError):
        sheet_energy(-1)
    with pytest.raises(ValueError):
        sheet_energy(1.5)


EPS = sys.float_info.epsilon

triples = st.tuples(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(-1e3, 1e3))


@given(triples)
def test_uvw_round_trip(m):
    # u + v and u - v cancel when x and y differ a lot, so the round trip is
    # exact only up to a few ulps of the larger variance
    back = from_uvw(to_uvw(m))
    tol = 2 * EPS * max(m[0], m[1])
    assert abs(back.x - m[0]) <= tol
    assert abs(back.y - m[1]) <= tol
    assert back.w == m[2]
    assert tuple(to_uvw(back)) == pytest.approx(tuple(to_uvw(m)), rel=0, abs=tol)


@given(triples, st.integers(0, 5))
def test_sheet_identity(m, n):
    # u^2 - v^2 - w^2 = x y - w^2, so the residual is rs - e_n^2
    e = sheet_energy(n)
    lhs = hyperboloid_residual(to_uvw(m), n)
    u = (m[0] + m[1]) / 2
    scale = max(1.0, u * u, m[2] ** 2)
    assert lhs == pytest.approx(rs_value(m) - e * e, abs=1e-12 * scale)
