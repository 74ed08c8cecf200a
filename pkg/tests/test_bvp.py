import math

import numpy as np
import pytest

from shapegeo import bvp
from shapegeo import collinear as col
from shapegeo import geodesic as geo


@pytest.fixture(scope="module")
def atlas():
    return geo.collinear_atlas()


@pytest.fixture(scope="module")
def same_arc_solution(atlas):
    q = bvp.BoundaryPoint("Q1Q2", 0.2)
    p = bvp.BoundaryPoint("Q1Q2", 0.7)
    return bvp.connect(p, q, eps=1e-3, atlas=atlas)


def test_boundary_point_validation():
    with pytest.raises(ValueError):
        bvp.BoundaryPoint("Q1Q2", 1.0)
    with pytest.raises(ValueError):
        bvp.connect(bvp.BoundaryPoint("Q3Q4", 0.4), bvp.BoundaryPoint("Q3Q4", 0.4))


def test_same_arc_connection(same_arc_solution):
    r = same_arc_solution
    assert r.residual <= 1e-6
    assert all(abs(a - math.pi / 2) <= 0.05 for a in r.end_angles)
    start = r.geodesic.states[0]
    end = r.geodesic.states[-1]
    assert math.dist(start[:2], r.q.uv()) < 1e-6
    assert math.dist(end[:2], r.p.uv()) < 1e-6


def test_vertical_back_fall_lands_on_q(atlas):
    q = bvp.BoundaryPoint("Q2Q3", 0.4)
    sh = bvp.shoot(q, 1e-3, 0.0, atlas, correct=False)
    assert abs(col.perimeter(*sh.back_landing) - q.perimeter) <= 1e-6


@pytest.mark.parametrize("arc", ["Q1Q2", "Q3Q4", "Q2Q3"])
def test_low_trajectories_land_within_c_eps(atlas, arc):
    # a launch that heads down from height eps lands O(eps) away, with a stable constant
    q = bvp.BoundaryPoint(arc, 0.45)
    ratios = []
    for eps in (1e-3, 5e-4):
        b = bvp.speed_bound(q.arc, q.s, eps, atlas)
        sh = bvp.shoot(q, eps, 0.9 * b, atlas, correct=False)
        ratios.append(abs(col.perimeter(*sh.back_landing) - q.perimeter) / eps)
    assert max(ratios) < 2.0
    assert ratios[1] == pytest.approx(ratios[0], rel=1e-3)


def test_scan_parameters_symmetric_and_bounded():
    s = bvp.scan_parameters(50.0)
    assert len(s) == bvp.SCAN_SAMPLES
    np.testing.assert_allclose(s, -s[::-1], atol=1e-12)
    assert np.max(np.abs(s)) < 50.0
    assert np.all(np.diff(s) > 0)


def test_geodesic_triangle_gauss_bonnet(atlas):
    chart = atlas["uv"]
    verts = ((-0.3, 0.3), (-0.15, 0.5), (-0.5, 0.2))
    edges = bvp.geodesic_triangle(verts, chart, atlas)
    rec = bvp.gauss_bonnet(edges, chart, bvp.collinear_curvature_density)
    assert abs(rec.defect) <= 1e-3
    assert sum(rec.interior_angles) < math.pi
    # the curvature integral is strictly negative, so no geodesic lune can close up
    assert rec.area_integral < 0


def test_hausdorff_simple():
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    b = np.array([[0.0, 0.1], [1.0, 0.1]])
    assert bvp.hausdorff(a, b) == pytest.approx(0.1)
