import math

import numpy as np
import pytest

from shapegeo import config_space as cs
from shapegeo.errors import CollisionError, GaugeDegenerateError, SymmetryError

SQUARE = [1, 1j, -1, -1j]


def square(p=None):
    return cs.Configuration.from_complex(SQUARE, p)


def test_potential_unit_square():
    # pairwise loop oracle: four sides r^2 = 2, two diagonals r^2 = 4
    assert cs.potential(square()) == pytest.approx(4 / 2 + 2 / 4, rel=1e-15)
    assert cs.potential(square()) == pytest.approx(2.5, rel=1e-15)


def test_potential_line():
    c = cs.Configuration([[-3, 0], [-1, 0], [1, 0], [3, 0]])
    assert cs.potential(c) == pytest.approx(65 / 72, rel=1e-15)


def test_potential_collision():
    c = cs.Configuration([[1, 0], [1, 0], [-1, 0], [-1, 0]])
    with pytest.raises(CollisionError) as exc:
        cs.potential(c)
    assert exc.value.pair == (1, 2)


def test_parallelogram_potential_values():
    assert cs.parallelogram_potential(square()) == pytest.approx(2.5, rel=1e-15)
    c = cs.Configuration.from_complex([1, 2j, -1, -2j])
    assert cs.parallelogram_potential(c) == pytest.approx(1.1125, rel=1e-15)
    assert cs.parallelogram_potential(c) == pytest.approx(cs.potential(c), rel=1e-14)
    with pytest.raises(SymmetryError):
        cs.parallelogram_potential(cs.Configuration.from_complex([1, 2j, -1.5, -2j]))


def test_conserved_square_at_rest_and_rotating():
    c = square(np.zeros(4))
    k = cs.conserved(c)
    assert k.H == pytest.approx(-2.5) and k.J == 0 and k.Idot == 0
    k = cs.conserved(square([1j, -1, -1j, 1]))
    assert k.J == pytest.approx(4.0) and k.Idot == pytest.approx(0.0)


def test_jacobi_hopf_square():
    j = cs.jacobi(square())
    assert j.z1 == pytest.approx(1j - 1) and j.z2 == pytest.approx(-1j - 1)
    s = cs.hopf(j)
    np.testing.assert_allclose(s.as_array(), [0, 0, 2], atol=1e-15)
    assert s.I == pytest.approx(4.0)


def test_rhombus_and_rectangle_coordinates():
    rh = cs.shape_of(cs.Configuration.from_complex([1.3, 0.4j, -1.3, -0.4j]))
    assert abs(rh.u1) < 1e-14
    rect = cs.shape_of(cs.Configuration.from_complex([1 + 0.5j, -1 + 0.5j, -1 - 0.5j, 1 - 0.5j]))
    assert abs(rect.u2) < 1e-14


def test_inverse_hopf_square_distances():
    c = cs.inverse_hopf(cs.ShapePoint(0, 0, 1))
    d = c.squared_distances()
    assert d[(0, 1)] == pytest.approx(1.0) and d[(0, 3)] == pytest.approx(1.0)
    assert d[(0, 2)] == pytest.approx(2.0) and d[(1, 3)] == pytest.approx(2.0)


def test_inverse_hopf_simultaneous_binary_boundary():
    c = cs.inverse_hopf(cs.ShapePoint(1, 0, 0))
    assert not c.is_collision_free()
    assert cs.collision_kind(c) == "simultaneous_binary"
    with pytest.raises(GaugeDegenerateError):
        cs.inverse_hopf(cs.ShapePoint(-1, 0, 0))


def test_newtonian_flow_conserves_invariants():
    from shapegeo.verify import newton_initial_data

    c = newton_initial_data(0.3, -0.2, 1.1, rotation=0.3)
    tr = cs.newtonian_flow(c, 0.3, tol=1e-12)
    assert tr.termination == "t_end"
    inv = tr.invariants()
    assert np.max(np.abs(inv["H"] - inv["H"][0])) <= 1e-8 * max(1, abs(inv["H"][0]))
    assert np.max(np.abs(inv["J"] - inv["J"][0])) <= 1e-8 * max(1, abs(inv["J"][0]))
    assert abs(inv["J"][0]) > 0.1


def test_negative_energy_is_concave():
    c = square(np.zeros(4))
    tr = cs.newtonian_flow(c, 0.05, tol=1e-12)
    from shapegeo.verify import virial_residual
    assert virial_residual(tr) <= 1e-5


def test_horizontal_lift_constant_shape():
    s = cs.ShapePoint(0.2, 0.3, math.sqrt(1 - 0.13))
    t = np.linspace(0, 1, 5)
    lift = cs.horizontal_lift(t, [s] * 5, initial_gauge=0.4)
    np.testing.assert_allclose(lift.alpha, 0.4, atol=1e-14)
    np.testing.assert_allclose(lift.q - lift.q[0], 0.0, atol=1e-14)


def test_horizontal_lift_great_circle_stays_parallelogram():
    t = np.linspace(0, 1, 200)
    th = 0.3 + 0.8 * t
    shapes = np.stack([np.full_like(t, 0.3), math.sqrt(1 - 0.09) * np.cos(th), math.sqrt(1 - 0.09) * np.sin(th)], 1)
    lift = cs.horizontal_lift(t, shapes)
    assert np.max(np.abs(lift.J)) <= 1e-6
    for q in lift.q:
        assert cs.Configuration(q).is_parallelogram(tol=1e-9)
