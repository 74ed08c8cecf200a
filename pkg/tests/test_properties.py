import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from shapegeo import collinear as col
from shapegeo import config_space as cs
from shapegeo import shirt
from shapegeo import syzygy as sz

coord = st.floats(-3.0, 3.0, allow_nan=False)
unit = st.floats(-1.0, 1.0, allow_nan=False)
angle = st.floats(0.0, 2 * math.pi, allow_nan=False)


def _regular(x, y, margin=1e-2):
    return shirt.nearest_end(x, y)[1] > margin


@given(unit, unit, unit, angle)
def test_hopf_roundtrip(a, b, c, gauge):
    n = math.sqrt(a * a + b * b + c * c)
    assume(n > 1e-3)
    s = cs.ShapePoint(a / n, b / n, c / n)
    assume(1.0 + s.u1 > 1e-3)
    back = cs.shape_of(cs.inverse_hopf(s, gauge))
    assert np.allclose(back.as_array(), s.as_array(), atol=1e-12)


@given(unit, unit, unit, st.floats(0.1, 10.0))
def test_potential_homogeneity(a, b, c, k):
    n = math.sqrt(a * a + b * b + c * c)
    assume(n > 1e-3)
    s = cs.ShapePoint(a / n, b / n, c / n)
    assume(1.0 + s.u1 > 1e-3)
    conf = cs.inverse_hopf(s)
    assume(min(conf.squared_distances().values()) > 1e-6)
    scaled = cs.Configuration(conf.q * k)
    assert cs.potential(scaled) == pytest.approx(cs.potential(conf) / k**2, rel=1e-12)


@given(coord, coord)
def test_lambda_chart_transition(x, y):
    r2 = x * x + y * y
    assume(r2 > 1e-2 and _regular(x, y))
    p = shirt.chart_transition(shirt.ShirtChartPoint("north", x, y))
    assume(_regular(p.x, p.y))
    assert shirt.conformal_lambda(p.x, p.y) / r2**2 == pytest.approx(shirt.conformal_lambda(x, y), rel=1e-11)


@given(coord, coord)
def test_shirt_curvature_nonpositive_and_symmetric(x, y):
    assume(_regular(x, y))
    K = shirt.curvature(x, y)
    assert K <= 0.0
    for sx, sy in ((-1, 1), (1, -1), (-1, -1)):
        assert shirt.curvature(sx * x, sy * y) == pytest.approx(K, rel=1e-9, abs=1e-15)


@given(st.lists(st.floats(-5.0, 5.0, allow_nan=False), min_size=4, max_size=4))
def test_xi_line_roundtrip(q):
    q = np.array(q) - np.mean(q)
    back = col.line_from_xi(col.xi_from_line(q, tol=1e-9))
    assert np.allclose(back, q, atol=1e-12)
    assert col.xi_from_line(q, tol=1e-9).norm == pytest.approx(np.linalg.norm(q), abs=1e-12)


@given(st.floats(-0.7, 0.0), st.floats(0.0, 0.7))
def test_collinear_curvature_negative_in_T(u, v):
    assume(min(col.heights(u, v).values()) > 1e-2)
    assert col.region_T().membership(col.UVPoint(u, v))
    assert col.curvature_uv(u, v) < 0.0


letters = st.text(alphabet="ABCD", max_size=30)


@given(letters)
def test_reduce_idempotent_and_stutter_free(word):
    r = sz.reduce(sz.from_letters(word))
    assert r.is_stutter_free()
    assert sz.reduce(r).letters == r.letters
    assert (len(word) - len(r)) % 2 == 0
    assert r.deletions == (len(word) - len(r)) // 2


@given(letters, letters)
def test_reduce_is_free_group_product(a, b):
    # reduce(ab) == reduce(reduce(a) reduce(b)) for the free product of order-2 letters
    ra, rb = sz.reduce(sz.from_letters(a)).letters, sz.reduce(sz.from_letters(b)).letters
    assert sz.reduce(sz.from_letters(a + b)).letters == sz.reduce(sz.from_letters(ra + rb)).letters


@given(letters)
def test_runs_mode_collapses_repeats(word):
    r = sz.reduce(sz.from_letters(word), mode="runs")
    assert r.is_stutter_free()
    assert "".join(ch for i, ch in enumerate(word) if i == 0 or word[i - 1] != ch) == r.letters


@settings(max_examples=50)
@given(angle)
def test_classify_is_periodic(a):
    assume(min(abs(a - p) for p in sz.PUNCTURE_ANGLES + (2 * math.pi,)) > 1e-6)
    assert sz.classify(a) == sz.classify(a + 2 * math.pi)
