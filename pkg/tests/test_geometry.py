import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minpart.errors import DuplicatePole, InvalidDomain, PoleOutsideDomain, TwoPolesInOneHole
from minpart.geometry import Disk, Domain, Polygon, Rectangle, contains, unit_disk, unit_square, validate_pole_set


def annulus_like():
    return Domain(Rectangle(2.0, 2.0), (Disk(0.3, (0.6, 0.6)), Disk(0.3, (1.4, 1.4))))


def test_square_membership():
    sq = unit_square()
    assert contains(sq, (0.5, 0.5)).kind == "interior"
    assert contains(sq, (1.5, 0.5)).kind == "exterior"
    assert contains(sq, (1.0, 0.5)).kind == "exterior"  # boundary counts as outside
    assert contains(sq, (0.01, 0.5), tol=0.05).kind == "boundary-adjacent"


def test_hole_membership():
    dom = annulus_like()
    m = contains(dom, (0.6, 0.6))
    assert m.kind == "hole" and m.hole == 0
    assert contains(dom, (1.4, 1.4)).hole == 1
    assert contains(dom, (1.0, 1.0)).kind == "interior"


def test_validate_pole_set_placements():
    ps = validate_pole_set(annulus_like(), [(1.0, 1.0), (0.6, 0.6)])
    assert ps.placement == (None, 0)
    assert ps.in_domain == (0,)


@pytest.mark.parametrize(
    "poles, exc",
    [
        ([(0.3, 0.3), (0.3, 0.3)], DuplicatePole),
        ([(1.3, 0.3)], PoleOutsideDomain),
        ([(0.0, 0.5)], PoleOutsideDomain),
    ],
)
def test_pole_errors(poles, exc):
    with pytest.raises(exc):
        validate_pole_set(unit_square(), poles)


def test_two_poles_in_one_hole():
    with pytest.raises(TwoPolesInOneHole):
        validate_pole_set(annulus_like(), [(0.55, 0.6), (0.65, 0.6)])


@pytest.mark.parametrize(
    "make",
    [
        lambda: Rectangle(-1.0, 1.0),
        lambda: Disk(0.0),
        lambda: Polygon(((0, 0), (1, 1), (1, 0), (0, 1))),  # bow tie
        lambda: Domain(Rectangle(1.0, 1.0), (Disk(0.6, (0.5, 0.5)),)),  # hole pokes out
        lambda: Domain(Rectangle(2.0, 2.0), (Disk(0.3, (1, 1)), Disk(0.3, (1.2, 1)))),  # overlapping holes
    ],
)
def test_invalid_domains(make):
    with pytest.raises(InvalidDomain):
        make()


def test_shape_measures():
    assert unit_disk().outer.area == pytest.approx(math.pi)
    tri = Polygon(((0, 0), (1, 0), (0, 1)))
    assert tri.area == pytest.approx(0.5)
    assert tri.centroid == pytest.approx((1 / 3, 1 / 3))
    assert unit_square().outer.inradius == 0.5


@settings(max_examples=200, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_disk_region_matches_inequality(x, y):
    inside = x * x + y * y < 1.0
    assert (contains(unit_disk(), (x, y)).kind == "interior") == inside


@settings(max_examples=200, deadline=None)
@given(st.floats(-0.5, 1.5), st.floats(-0.5, 1.5))
def test_polygon_square_agrees_with_rectangle(x, y):
    poly = Domain(Polygon(((0, 0), (1, 0), (1, 1), (0, 1))))
    assert contains(poly, (x, y)).kind == contains(unit_square(), (x, y)).kind


def test_domain_serialization():
    assert unit_square().to_dict() == {"type": "square", "side": 1.0}
    d = annulus_like().to_dict()
    assert d["type"] == "square" and d["side"] == 2.0 and len(d["holes"]) == 2
    assert Domain(Rectangle(1.0, 2.0)).to_dict()["type"] == "rectangle"


def test_domain_hashable_and_equal():
    assert unit_disk() == unit_disk()
    assert hash(unit_square()) == hash(unit_square())
    assert np.isfinite(unit_square().extent)
