import math

import numpy as np
import pytest

from shapegeo import collinear as col
from shapegeo import verify
from shapegeo.errors import CenterError, CollisionError, CollisionSingularityError

POINT = (-(math.sqrt(5) - 2), math.sqrt(5) - 2)
# sympy evaluation of the six-term lambda and K = -Laplacian(log(lambda/2)) / lambda at POINT
LAMBDA_POINT = 64.798759674996962
K_POINT = -1.3275193445607647


def test_xi_line_examples():
    assert col.xi_from_line((-3, -1, 1, 3)).as_array().tolist() == [0, -2, -4]
    np.testing.assert_array_equal(col.line_from_xi(col.XiCoord(0, -2, -4)), [-3, -1, 1, 3])
    # q1 = q2 and q3 = q4: the defining lines give xi1 = xi2 = 0 (both s/r pairs degenerate)
    assert col.xi_from_line((-1, -1, 1, 1)).as_array().tolist() == [0, 0, -2]
    with pytest.raises(CenterError):
        col.xi_from_line((0, 1, 2, 3))


def test_potential_xi():
    x = col.XiCoord(0, -2, -4)
    assert col.potential_xi(x) == pytest.approx(65 / 72, rel=1e-15)
    assert col.potential_xi(col.XiCoord(0, -6, -12)) == pytest.approx(65 / 72 / 9, rel=1e-14)
    with pytest.raises(CollisionError):
        col.potential_xi(col.XiCoord(1, 1, 3))


def test_certificate_on_example():
    cert = col.laplacian_log_U_closed(col.XiCoord(0, -2, -4))
    assert cert.value > 0
    assert min(cert.terms.values()) >= 0


def test_f_identity():
    rng = np.random.default_rng(5)
    for x, y in rng.normal(size=(50, 2)):
        assert col.f_quadratic(x, y) == pytest.approx(x * x + y * y + 2 * (x - y) ** 2, abs=1e-14)
    assert col.f_quadratic(1, 1) == 2


def test_uv_projection_and_lambda():
    p = col.uv_projection(col.XiCoord(0, -2, -4).normalized())
    assert p.u == pytest.approx(POINT[0], abs=1e-15) and p.v == pytest.approx(POINT[1], abs=1e-15)
    assert col.lambda_uv(*POINT) == pytest.approx(LAMBDA_POINT, rel=1e-14)
    # pullback of U |d xi|^2 through xi_from_uv is lambda / 2
    G = verify.collinear_pullback(*POINT)
    assert 2 * G[0, 0] == pytest.approx(LAMBDA_POINT, rel=1e-6)


def test_u_vanishes_with_q1_q2():
    for d in (1e-2, 1e-4, 1e-6):
        q = np.array([-2 - d / 2, -2 + d / 2, 1.0, 3.0])
        q -= q.mean()
        p = col.uv_projection(col.xi_from_line(q).normalized())
        assert abs(p.u) < 2 * d


def test_curvature_two_routes_and_symmetry():
    K = col.curvature_uv(*POINT)
    assert K == pytest.approx(K_POINT, rel=1e-13)
    assert col.curvature_from_xi(col.xi_from_uv(*POINT)) == pytest.approx(K, rel=1e-6)
    rng = np.random.default_rng(2)
    for u, v in rng.uniform(-0.6, 0.6, size=(20, 2)):
        if min(abs(u), abs(v)) < 1e-2:
            continue
        try:
            k = col.curvature_uv(u, v)
        except CollisionSingularityError:
            continue
        assert col.curvature_uv(-u, -v) == pytest.approx(k, rel=1e-12)
        assert col.curvature_uv(v, u) == pytest.approx(k, rel=1e-12)


def test_region_T():
    T = col.region_T()
    assert T.membership(col.UVPoint(*POINT))
    assert T.corner_kind(col.UVPoint(0.0, 0.0)) == "simultaneous_binary"
    kinds = {T.corner_kind(col.UVPoint(*c)) for c in T.triple_corners}
    assert kinds == {"triple_q1q2q3", "triple_q2q3q4"}


def test_boundary_param_and_perimeter():
    for arc in col.Arc:
        for s in (0.1, 0.5, 0.9):
            b = col.boundary_param(arc, s)
            h = col.heights(b.u, b.v)[arc]
            assert abs(h) < 1e-14
            assert col.from_perimeter(col.perimeter(arc, s))[0] is arc
            a, s2 = col.from_perimeter(col.perimeter(arc, s))
            assert s2 == pytest.approx(s, abs=1e-14)
