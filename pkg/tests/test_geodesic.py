import math

import numpy as np
import pytest

from shapegeo import collinear as col
from shapegeo import geodesic as geo
from shapegeo import shirt
from shapegeo.errors import DomainError, NotFallingError


@pytest.fixture(scope="module")
def shirt_atlas():
    return geo.shirt_atlas()


@pytest.fixture(scope="module")
def t_atlas():
    return geo.collinear_atlas()


def test_chart_factors_match_surfaces(shirt_atlas, t_atlas):
    assert shirt_atlas["north"].g(0.3, 0.2) == pytest.approx(shirt.conformal_lambda(0.3, 0.2), rel=1e-15)
    assert t_atlas["uv"].g(-0.3, 0.3) == pytest.approx(col.lambda_uv(-0.3, 0.3) / 2, rel=1e-15)
    gx, gy = shirt_atlas["north"].grad_log_g(0.3, 0.2)
    ex, ey = shirt.grad_log_lambda(0.3, 0.2)
    assert gx == pytest.approx(ex, rel=1e-13) and gy == pytest.approx(ey, rel=1e-13)


def test_eom_at_square_and_speed(shirt_atlas):
    chart = shirt_atlas["north"]
    s = geo.unit_state(chart, 0.0, 0.0, 0.4)
    d = geo.eom(s, chart)
    assert np.all(np.abs(d[2:]) < 1e-15)
    s = geo.unit_state(chart, 0.4, -0.3, 2.0)
    d = geo.eom(s, chart)
    assert math.hypot(d[0], d[1]) == pytest.approx(math.sqrt(2 / chart.g(0.4, -0.3)), rel=1e-14)
    assert geo.hamiltonian(s, chart) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(DomainError):
        geo.unit_state(t_atlas_uv(), 0.3, 0.3, 0.0)


def t_atlas_uv():
    return geo.collinear_atlas()["uv"]


def test_collar_momentum_pulls_toward_boundary(t_atlas):
    chart = t_atlas["uv"]
    for h in (1e-2, 1e-3):
        s = geo.unit_state(chart, -h, 0.4, 0.0)
        d = geo.eom(s, chart)
        # height is -u, so dp_height/dt = -dp_u/dt < 0
        assert -d[2] < 0


def test_meridian_stays_on_symmetry_axis(shirt_atlas):
    tr = geo.integrate(geo.shirt_state(-0.5, 0.0, 0.0, shirt_atlas), shirt_atlas, 10.0 / geo.SPEED, tol=1e-10)
    worst = 0.0
    for c, y in zip(tr.charts, tr.states):
        x, yy = geo.to_north_state(c, y)[:2]
        worst = max(worst, abs(yy))
    assert worst <= 1e-9


def test_time_reversal(shirt_atlas):
    s0 = geo.shirt_state(0.3, 0.2, 0.7, shirt_atlas)
    fwd = geo.integrate(s0, shirt_atlas, 5.0, tol=1e-12)
    f = fwd.final
    back = geo.integrate(geo.PhaseState(f.x, f.y, -f.px, -f.py, 0.0, f.chart), shirt_atlas, 5.0, tol=1e-12)
    end = geo.to_north_state(back.final.chart, back.final.vector())
    assert math.hypot(end[0] - 0.3, end[1] - 0.2) <= 1e-7


def test_energy_drift_per_arc_length(shirt_atlas, t_atlas):
    tr = geo.integrate(geo.shirt_state(0.3, 0.2, 0.7, shirt_atlas), shirt_atlas, 20.0, tol=1e-10)
    assert np.sum(np.abs(tr.drift)) / tr.arc_length <= 1e-8
    assert len(tr.drift) == len(tr.t)
    tr = geo.integrate(geo.collinear_state(-0.3, 0.3, 0.5, t_atlas), t_atlas, 50.0, tol=1e-10)
    assert tr.termination.startswith("boundary:")
    assert np.sum(np.abs(tr.drift)) / tr.arc_length <= 1e-8


def test_shirt_end_is_reached_through_cylinder_chart(shirt_atlas):
    tr = geo.integrate(geo.shirt_state(-0.5, 0.0, 0.0, shirt_atlas), shirt_atlas, 200.0, tol=1e-10)
    assert tr.termination == "end:SBC14"
    assert any(c.startswith("cyl:") for c in tr.charts)


def test_corner_chart_pullback_length(t_atlas):
    # JM length of the same curve measured in (u, v) and in zeta = -(u + iv)^2
    s = np.linspace(0, 1, 40001)
    u = -0.02 - 0.05 * s
    v = 0.03 + 0.04 * s**2
    w = u + 1j * v
    z = -(w * w)
    a = geo.jm_length(np.c_[u, v], t_atlas["uv"].g)
    b = geo.jm_length(np.c_[z.real, z.imag], t_atlas["corner"].g)
    assert a == pytest.approx(b, rel=1e-8)
    assert t_atlas["corner"].to_common(0.0, 0.0) == (0.0, 0.0)


def test_corner_metric_pole_form(t_atlas):
    # near the real axis the corner factor is 1/(2 Y^2) + O(1)
    for X in (0.003, -0.004):
        for Y in (1e-4, 1e-5):
            g = t_atlas["corner"].g(X, Y)
            assert g * 2 * Y * Y == pytest.approx(1.0, abs=50 * Y)


def test_boundary_fall_asymptotics(t_atlas):
    tr = geo.integrate(geo.collinear_state(-0.3, 0.3, 0.5, t_atlas), t_atlas, 50.0, tol=1e-10)
    rec = geo.boundary_fall(tr)
    assert rec.arc in tuple(col.Arc)
    assert 0 < rec.boundary_estimate < 1
    assert np.all(np.abs(rec.height_momentum[rec.heights < 1e-5] - 1) < 0.02)
    assert np.all(np.abs(rec.angles[rec.heights < 1e-4] - math.pi / 2) < 0.05)
    d = geo.fixed_angle_displacements(tr)
    assert d[1] / d[0] == pytest.approx(0.5, abs=0.1)
    assert d[2] / d[1] == pytest.approx(0.5, abs=0.1)


def test_not_falling(t_atlas):
    tr = geo.integrate(geo.collinear_state(-0.3, 0.3, 0.5, t_atlas), t_atlas, 0.1, tol=1e-10)
    with pytest.raises(NotFallingError):
        geo.boundary_fall(tr)


def test_dense_output_is_continuous(shirt_atlas):
    tr = geo.integrate(geo.shirt_state(0.3, 0.2, 0.7, shirt_atlas), shirt_atlas, 3.0, tol=1e-10)
    for seg in tr.segments[:-1]:
        c, y = tr.state_at(seg.t1)
        assert np.allclose(y, seg(seg.t1), atol=1e-12)
