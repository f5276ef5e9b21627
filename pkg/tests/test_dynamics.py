import numpy as np
import pytest

from vortex_body.biot_savart import VortexField
from vortex_body.dynamics import (
    SimState,
    Stepper,
    body_force,
    body_rhs,
    particle_rhs,
    solve_body,
    volume_force,
)
from vortex_body.biot_savart import flow_field
from vortex_body.errors import InvalidArgument, StepRejected
from vortex_body.geometry import RigidState


def ring_field(k=16, gamma=0.4):
    pos, s = [], []
    for rad, g, shift in ((1.6, 0.3, 0.0), (2.0, 0.5, np.pi / k), (2.4, -0.2, 0.0)):
        ph = 2 * np.pi * np.arange(k) / k + shift
        pos.append(rad * np.stack([np.cos(ph), np.sin(ph)], axis=-1))
        s.append(np.full(k, g))
    return VortexField.point_vortices(np.vstack(pos), np.concatenate(s), 0.1, gamma=gamma)


def scattered_field(rng, n=6, delta=0.2, gamma=0.3):
    ang = rng.uniform(0, 2 * np.pi, n)
    pos = rng.uniform(1.8, 2.6, n)[:, None] * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    return VortexField.point_vortices(pos, rng.uniform(-1, 1, n), delta, gamma=gamma)


def test_zero_step_is_identity(disk_tables):
    s = SimState(RigidState.initial((0.2, 0.1), 0.3), ring_field())
    assert Stepper(disk_tables).step(s, 0.0) is s
    with pytest.raises(InvalidArgument):
        Stepper(disk_tables).step(s, -1e-3)


def test_rest_state_has_no_acceleration(fourier_tables):
    dl, dr = body_rhs(fourier_tables, VortexField.empty(), (0.0, 0.0), 0.0)
    np.testing.assert_allclose(dl, 0.0, atol=1e-15)
    assert dr == 0.0


@pytest.mark.parametrize("which", ["disk_bem", "fourier_tables"])
def test_force_free_translation(which, request):
    t = request.getfixturevalue(which)
    st = Stepper(t)
    s = SimState(RigidState.initial((1.0, 0.0), 0.0), VortexField.empty())
    for _ in range(20):
        s = st.step(s, 0.05)
    np.testing.assert_allclose(s.rigid.h, [1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(s.rigid.ell, [1.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("which", ["disk_tables", "disk_bem", "fourier_tables"])
def test_lift_on_a_translating_body(which, request):
    t = request.getfixturevalue(which)
    vf = VortexField.empty(gamma=1.0)
    f = body_force(flow_field(t, vf, (1.0, 0.0), 0.0), vf.positions, vf.strengths)
    np.testing.assert_allclose(f[:2], [0.0, 1.0], atol=1e-10)


@pytest.mark.parametrize("which", ["disk_tables", "disk_bem"])
def test_symmetric_layout_gives_no_acceleration(which, request):
    dl, dr = body_rhs(request.getfixturevalue(which), ring_field(), (0.0, 0.0), 0.0)
    assert np.max(np.abs(dl)) <= 1e-10 and abs(dr) <= 1e-10


def test_mirror_symmetric_pair(disk_tables):
    vf = VortexField.point_vortices([[2.5, 0.4], [2.5, -0.4]], [1.0, -1.0], 0.1)
    dl, dr = body_rhs(disk_tables, vf, (0.0, 0.0), 0.0)
    assert abs(dl[1]) <= 1e-12 and abs(dr) <= 1e-12
    assert abs(dl[0]) > 1e-3


def test_force_routes_agree(fourier_tables, rng):
    vf = scattered_field(rng, delta=0.05)
    ell, r = (0.4, -0.2), 0.7
    fb = body_force(flow_field(fourier_tables, vf, ell, r), vf.positions, vf.strengths)
    fv = volume_force(fourier_tables, vf, ell, r, 40.0, 0.0125)
    np.testing.assert_allclose(fb, fv, atol=5e-3 * np.max(np.abs(fb)))


def test_coriolis_completion(disk_tables):
    dl, dr = solve_body(disk_tables, np.zeros(3), np.array([1.0, 0.0]), 2.0)
    m = disk_tables.geometry.mass
    np.testing.assert_allclose(dl, [0.0, -2.0 * m / (m + np.pi)], atol=1e-14)
    assert dr == 0.0


def test_particle_in_still_fluid_does_not_move(disk_bem):
    vf = VortexField.point_vortices([[2.0, 1.0]], [0.0], 0.1)
    np.testing.assert_allclose(particle_rhs(disk_bem, vf, (0.0, 0.0), 0.0), 0.0, atol=1e-15)


def test_point_vortex_velocity_near_fixed_disk(disk_tables):
    vf = VortexField.point_vortices([[2.0, 0.0]], [2 * np.pi], 1e-4)
    np.testing.assert_allclose(particle_rhs(disk_tables, vf, (0.0, 0.0), 0.0)[0], [0.0, -1 / 6], atol=1e-7)


def test_advection_is_tangent_at_the_boundary(fourier_tables, rng):
    vf = scattered_field(rng)
    nodes = fourier_tables.geometry.nodes[::8]
    probe = VortexField(np.vstack([vf.positions, nodes]), np.r_[vf.omega, np.zeros(len(nodes))],
                        1.0, vf.delta, vf.gamma)
    w = particle_rhs(fourier_tables, probe, (0.3, 0.1), -0.4)[len(vf):]
    normals = fourier_tables.geometry.normals[::8]
    assert np.max(np.abs(np.sum(w * normals, axis=-1))) <= 1e-9


def test_cfl_guard(disk_tables):
    vf = VortexField.point_vortices([[1.5, 0.0]], [20.0], 0.05)
    s = SimState(RigidState.initial(), vf)
    with pytest.raises(StepRejected) as err:
        Stepper(disk_tables, frozen=True).step(s, 0.1)
    assert 0 < err.value.suggested_dt < 0.1
    Stepper(disk_tables, frozen=True).step(s, 0.5 * err.value.suggested_dt)


def test_fourth_order_in_time(fourier_tables, rng):
    vf = scattered_field(rng)
    ends = []
    for dt in (0.1, 0.05, 0.025):
        st = Stepper(fourier_tables, cfl=2.0)
        s = SimState(RigidState.initial((0.3, -0.2), 0.5), vf)
        for _ in range(int(round(0.8 / dt))):
            s = st.step(s, dt)
        ends.append(np.r_[s.rigid.h, s.rigid.theta, s.rigid.ell, s.rigid.r, s.field.positions.ravel()])
    ratio = np.linalg.norm(ends[1] - ends[0]) / np.linalg.norm(ends[2] - ends[1])
    assert 16 * 0.7 <= ratio <= 16 * 1.3


def test_steps_are_deterministic(fourier_tables, rng):
    vf = scattered_field(rng)
    out = []
    for _ in range(2):
        st = Stepper(fourier_tables)
        s = SimState(RigidState.initial((0.3, -0.2), 0.5), vf)
        for _ in range(5):
            s = st.step(s, 0.02)
        out.append(s)
    assert np.array_equal(out[0].field.positions, out[1].field.positions)
    assert np.array_equal(out[0].rigid.ell, out[1].rigid.ell)
