import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from vortex_body.errors import InvalidArgument, InvalidGeometry
from vortex_body.geometry import (
    RigidState,
    body_to_lab,
    boundary_integral,
    fluid_quadrature,
    lab_to_body,
    make_disk,
    make_fourier_body,
    perp,
)

from conftest import FOURIER


def test_disk_nodes_at_quarter_angles():
    g = make_disk(1.0, 4, 1.0, 0.5)
    angles = np.mod(np.arctan2(g.nodes[:, 1], g.nodes[:, 0]), 2 * np.pi)
    np.testing.assert_allclose(np.sort(angles), np.pi / 4 * np.array([1, 3, 5, 7]), atol=1e-14)
    np.testing.assert_allclose(np.hypot(*g.nodes.T), 1.0, atol=1e-14)


def test_tangents_close_up():
    g = make_disk(1.0, 128, 1.0, 0.5)
    np.testing.assert_allclose(g.ds @ g.tangents, 0.0, atol=1e-12)
    f = make_fourier_body(FOURIER, 128, 1.0, 0.5)
    np.testing.assert_allclose(f.ds @ f.tangents, 0.0, atol=1e-10)


def test_perimeter_of_radius_two():
    g = make_disk(2.0, 256, 1.0, 0.5)
    assert abs(g.perimeter - 4 * np.pi) <= 1e-3 * 4 * np.pi


def test_degenerate_fourier_is_disk():
    d = make_disk(1.0, 64, 1.0, 0.5)
    f = make_fourier_body([(1.0, 0.0)], 64, 1.0, 0.5)
    np.testing.assert_allclose(f.nodes, d.nodes, atol=1e-12)
    np.testing.assert_allclose(f.panel_mid, d.panel_mid, atol=1e-12)


def test_fourier_area_against_polar_quadrature():
    f = make_fourier_body(FOURIER, 128, 1.0, 0.5)
    area = -0.5 * boundary_integral(f, lambda x: np.sum(x * f.normals, axis=-1))
    exact, _ = integrate.quad(lambda t: 0.5 * (1 + 0.2 * np.cos(2 * t)) ** 2, 0, 2 * np.pi, epsabs=1e-13)
    assert abs(area - exact) <= 1e-4
    assert abs(f.area - exact) <= 1e-10


def test_normals_point_into_the_body():
    g = make_disk(1.0, 64, 1.0, 0.5)
    np.testing.assert_allclose(g.normals, -g.nodes, atol=1e-14)
    np.testing.assert_allclose(g.normals, perp(g.tangents), atol=1e-14)


def test_boundary_integral_examples():
    g = make_disk(1.0, 256, 1.0, 0.5)
    assert abs(boundary_integral(g, np.ones(256)) - 2 * np.pi) <= 1e-3
    np.testing.assert_allclose(boundary_integral(g, g.normals), 0.0, atol=1e-12)
    xn = boundary_integral(g, lambda x: np.sum(x * g.normals, axis=-1))
    assert abs(xn + 2 * np.pi) <= 1e-3


@pytest.mark.parametrize("radius, mass", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0)])
def test_disk_rejects_nonpositive(radius, mass):
    with pytest.raises(InvalidArgument):
        make_disk(radius, 32, mass, 0.5)


def test_fourier_rejects_negative_radius():
    with pytest.raises(InvalidGeometry):
        make_fourier_body([(0.5, 0.0), (0.0, 0.0), (0.6, 0.0)], 64, 1.0, 0.5)


def test_frames():
    s0 = RigidState(np.zeros(2), 0.0, np.zeros(2), 0.0, 0.0)
    np.testing.assert_allclose(body_to_lab(s0, [1.0, 2.0]), [1.0, 2.0])
    s1 = RigidState(np.array([1.0, 0.0]), np.pi / 2, np.zeros(2), 0.0, 0.0)
    np.testing.assert_allclose(body_to_lab(s1, [1.0, 0.0]), [1.0, 1.0], atol=1e-15)
    s2 = RigidState(np.array([0.3, -0.7]), 0.4, np.zeros(2), 0.0, 0.0)
    x = np.array([2.0, 1.0])
    np.testing.assert_allclose(lab_to_body(s2, body_to_lab(s2, x)), x, atol=1e-14)


def test_project_outside(rng):
    f = make_fourier_body(FOURIER, 64, 1.0, 0.5)
    pts = rng.uniform(-1.5, 1.5, size=(500, 2))
    out, inside = f.project_outside(pts)
    assert inside.any()
    assert not f.contains(out).any()
    np.testing.assert_array_equal(out[~inside], pts[~inside])


def test_fluid_quadrature_integrates_inverse_power():
    g = make_disk(1.0, 64, 1.0, 0.5)
    q = fluid_quadrature(g, 20.0, 0.1)
    s = np.hypot(*q.points.T)
    assert np.all(s >= 1.0 - 1e-12)
    approx = np.sum(q.weights / s**4)
    assert abs(approx - np.pi * (1 - 20.0**-2)) <= 1e-8


finite = st.floats(-50, 50, allow_nan=False)


@given(finite, finite, st.floats(-10, 10), finite, finite)
def test_frame_round_trip(h1, h2, theta, x1, x2):
    s = RigidState(np.array([h1, h2]), theta, np.zeros(2), 0.0, 0.0)
    x = np.array([x1, x2])
    np.testing.assert_allclose(lab_to_body(s, body_to_lab(s, x)), x, atol=1e-11)
    assert np.linalg.norm(body_to_lab(s, x) - s.h) == pytest.approx(np.linalg.norm(x), abs=1e-11)
