import math

import numpy as np
import pytest

from shapegeo import config_space as cs
from shapegeo import shirt
from shapegeo import verify
from shapegeo.errors import EndSingularityError, PoleError, QuadratureError

# symbolic (sympy) evaluation of lambda, Laplacian(log lambda) and K, frozen
SYMBOLIC = {
    (0.5, 0.0): (31.004444444444444, 1.3790085009679320, -0.022238884225758651),
    (0.3, 0.2): (21.031444822274185, 1.1478696020476987, -0.027289366273875818),
    (2.0, 1.0): (0.925, 0.058436815193571950, -0.031587467672201054),
}


def test_stereographic_examples():
    p = shirt.stereographic(cs.ShapePoint(0, 0, -1))
    assert (p.x, p.y) == (0.0, 0.0)
    p = shirt.stereographic(cs.ShapePoint(1, 0, 0))
    assert (p.x, p.y) == (1.0, 0.0)
    with pytest.raises(PoleError):
        shirt.stereographic(cs.ShapePoint(0, 0, 1))
    p = shirt.stereographic(cs.ShapePoint(0, 0, 1), "south")
    assert (p.x, p.y) == (0.0, 0.0)


def test_chart_transition_examples():
    p = shirt.chart_transition(shirt.ShirtChartPoint("north", 1.0, 0.0))
    assert (p.chart, p.x, p.y) == ("south", 1.0, 0.0)
    p = shirt.chart_transition(shirt.ShirtChartPoint("north", 2.0, 0.0))
    assert (p.x, p.y) == (0.5, 0.0)
    q = shirt.ShirtChartPoint("north", 0.3, -0.7)
    back = shirt.chart_transition(shirt.chart_transition(q))
    assert back.chart == "north"
    assert abs(back.x - q.x) < 1e-14 and abs(back.y - q.y) < 1e-14


def test_conformal_factor_values():
    assert shirt.conformal_f(0.0, 0.0) == 5.0
    assert shirt.conformal_lambda(0.0, 0.0) == 20.0
    assert shirt.conformal_lambda(1.0 + 1e-6, 0.0) > 1e11
    for (x, y), (lam, lap, K) in SYMBOLIC.items():
        assert shirt.conformal_lambda(x, y) == pytest.approx(lam, rel=1e-14)
        assert shirt.laplacian_log_lambda(x, y) == pytest.approx(lap, rel=1e-13)
        assert shirt.curvature(x, y) == pytest.approx(K, rel=1e-13)


def test_laplacian_hand_values():
    assert shirt.laplacian_log_lambda(0.0, 0.0) == 0.0
    assert shirt.laplacian_log_lambda(1.0, 0.0) == pytest.approx(1.0, rel=1e-15)
    assert shirt.laplacian_log_lambda(0.0, 1.0) == pytest.approx(16.0, rel=1e-15)


def test_laplacian_matches_fd_oracle():
    f = lambda a, b: math.log(shirt.conformal_lambda(a, b))
    fd = verify.fd_laplacian(f, (0.5, 0.0), singular_distance=0.5)
    assert fd.value == pytest.approx(shirt.laplacian_log_lambda(0.5, 0.0), rel=1e-6)


def test_lambda_is_twice_pushed_down_metric():
    # pullback through inverse_hopf: lambda = SUBMERSION_SCALE * U |dz_h|^2
    rng = np.random.default_rng(11)
    for _ in range(20):
        x, y = rng.uniform(-1.5, 1.5, 2)
        if shirt.nearest_end(x, y)[1] < 0.05:
            continue
        G = verify.shirt_pullback(x, y)
        lam = shirt.conformal_lambda(x, y)
        assert G[0, 0] * shirt.SUBMERSION_SCALE == pytest.approx(lam, rel=1e-8)
        assert G[1, 1] * shirt.SUBMERSION_SCALE == pytest.approx(lam, rel=1e-8)
        assert abs(G[0, 1]) <= 1e-8 * lam


def test_curvature_zero_only_at_square_and_limit_at_ends():
    assert shirt.curvature(0.0, 0.0) == 0.0
    assert shirt.curvature(0.01, 0.0) < 0
    for e in shirt.ShirtEnd:
        cx, cy = e.location
        assert abs(shirt.curvature(cx + 1e-5, cy)) < 1e-6
        K, lim = shirt.curvature_or_limit(cx, cy)
        assert K == 0.0 and lim
    with pytest.raises(EndSingularityError):
        shirt.conformal_f(1.0, 0.0)


def test_end_geometry_radii():
    # the 1/r^2 coefficient of lambda gives metric radii 1 and 2
    for e in shirt.ShirtEnd:
        g = shirt.end_geometry(e, (1e-4, 1e-3, 1e-2))
        assert g.measured_circumferences[0] == pytest.approx(2 * math.pi * e.metric_radius, rel=1e-3)
        assert g.monotone
    with pytest.raises(QuadratureError):
        shirt.end_geometry(shirt.ShirtEnd.BC13, (1.5,))


def test_curvature_grid_layout():
    g = shirt.curvature_grid(-1, 1, -2, 2, 5)
    assert g["x"][:5].tolist() == [-1, -0.5, 0, 0.5, 1]
    assert g["y"][:5].tolist() == [-2] * 5
    assert np.all(g["K"] <= 0)
