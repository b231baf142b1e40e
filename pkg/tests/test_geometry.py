import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from riemann_ellipsoids.geometry import (
    DomainError, MomentumPair, SemiAxes, ShapeCoords, are_equivalent, distance_to_edges,
    from_shape_coords, sample_shape_points, semiaxes_from_xy, to_shape_coords, z4z2_orbit)

shape_points = st.tuples(st.floats(0.01, 0.99), st.floats(0.01, 0.99)).filter(
    lambda p: p[1] < p[0] - 1e-3)
vectors = st.lists(st.integers(-3, 3), min_size=6, max_size=6)


def test_shape_coords_of_known_point():
    s = to_shape_coords(SemiAxes(1.5, 1.0))
    assert s.x == pytest.approx(2 / 3, rel=1e-15)
    assert s.y == pytest.approx(1 / 1.5 ** 2, rel=1e-15)


def test_round_trip_known_point():
    b = from_shape_coords(ShapeCoords(0.5, 0.25))
    assert b.b1 == pytest.approx((0.5 * 0.25) ** (-1 / 3), rel=1e-15)
    s = to_shape_coords(b)
    assert abs(s.x - 0.5) < 1e-14 and abs(s.y - 0.25) < 1e-14


@pytest.mark.parametrize("b1,b2", [(1.2, 1.2), (1.0, 1.0), (2.0, 1 / math.sqrt(2.0)), (0.9, 1.0), (-1.0, 2.0)])
def test_domain_boundary_rejected(b1, b2):
    with pytest.raises(DomainError):
        SemiAxes(b1, b2)


@pytest.mark.parametrize("x,y", [(1.0, 0.5), (0.5, 0.5), (0.5, 0.0), (0.3, 0.4)])
def test_shape_triangle_boundary_rejected(x, y):
    with pytest.raises(DomainError):
        ShapeCoords(x, y)


@given(shape_points)
def test_unit_volume_and_ordering(p):
    b = semiaxes_from_xy(*p)
    assert b.b1 * b.b2 * b.b3 == pytest.approx(1.0, rel=1e-14)
    assert b.b1 > b.b2 > b.b3


@given(shape_points)
def test_round_trip_property(p):
    s = to_shape_coords(semiaxes_from_xy(*p))
    assert s.x == pytest.approx(p[0], rel=1e-13)
    assert s.y == pytest.approx(p[1], rel=1e-13)


def brute_orbit(v):
    """Distinct images under all sign flips with an even number of minus signs, and their negatives."""
    out = set()
    for signs in np.ndindex(2, 2, 2):
        d = np.array([(-1.0) ** s for s in signs])
        if np.prod(d) < 0:
            continue
        for sgn in (1.0, -1.0):
            out.add(tuple(sgn * np.concatenate([d * v[:3], d * v[3:]]) + 0.0))
    return out


def test_orbit_sizes():
    assert len(z4z2_orbit(MomentumPair((0, 0, 1), (0, 0, 1)))) == 2
    # here -m coincides with R2 m, so only four images are distinct
    assert len(z4z2_orbit(MomentumPair((1, 0, 1), (1, 0, -1)))) == 4
    assert len(z4z2_orbit(MomentumPair((1, 2, 3), (1, -1, 2)))) == 8
    assert len(z4z2_orbit(MomentumPair((0, 0, 0), (0, 0, 0)))) == 1
    assert MomentumPair((0, 0, 0), (0, 0, 0)).is_zero()


def test_equivalence_examples():
    m = MomentumPair((1.0, 2.0, 3.0), (-1.0, 0.5, 2.0))
    neg = MomentumPair.from_array(-m.array)
    R2 = np.diag([-1.0, 1.0, -1.0])
    rot = MomentumPair(tuple(R2 @ m.m_l), tuple(R2 @ m.m_r))
    assert are_equivalent(m, neg)
    assert are_equivalent(m, rot)
    assert not are_equivalent(MomentumPair((1, 0, 0), (1, 0, 0)), MomentumPair((0, 1, 0), (0, 1, 0)))
    with pytest.raises(ValueError):
        are_equivalent(m, m, tol=-1.0)


@given(vectors)
def test_orbit_is_a_group_orbit(v):
    m = MomentumPair.from_array(v)
    orbit = z4z2_orbit(m)
    assert len(orbit) in (1, 2, 4, 8)
    assert {tuple(o.array + 0.0) for o in orbit} == brute_orbit(m.array)
    assert any(np.array_equal(o.array, m.array) for o in orbit)
    for o in orbit:
        # equivalence is symmetric and the orbit of any member is the same set
        assert are_equivalent(o, m)
        assert len(z4z2_orbit(o)) == len(orbit)


def test_sampler_respects_margin(rng):
    for x, y in sample_shape_points(rng, 200, margin=0.05):
        assert distance_to_edges(x, y) > 0.05 / math.sqrt(2) - 1e-15
        semiaxes_from_xy(x, y)
