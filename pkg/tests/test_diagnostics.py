import numpy as np
import pytest

from vortex_body import diagnostics as D
from vortex_body.biot_savart import VortexField
from vortex_body.errors import InvalidArgument, InvalidTestFunction
from vortex_body.regularization import preset_vorticity, sample_particles


def test_single_particle_norms():
    vf = VortexField([[2.0, 0.0]], [2.0], [0.5], 0.1)
    l1, l2 = D.particle_norms(vf, 2.0)
    assert l1 == pytest.approx(1.0, abs=1e-15)
    assert l2 == pytest.approx(np.sqrt(2.0), abs=1e-15)
    assert D.particle_norms(VortexField.empty(), 2.0) == (0.0, 0.0)


def test_binned_norms_keep_mass(rng):
    pos = rng.uniform(2.0, 3.0, size=(500, 2))
    vf = VortexField(pos, rng.uniform(0.5, 1.0, 500), 1e-3, 0.05)
    b1, b2 = D.binned_norms(vf, 2.0, 0.05)
    assert b1 == pytest.approx(D.particle_norms(vf, 2.0)[0], rel=1e-13)
    assert b2 > 0


def test_rest_energy_is_zero(disk_tables):
    assert D.energy_like(disk_tables, VortexField.empty(), (0.0, 0.0), 0.0) == 0.0


def test_translation_energy(disk_bem):
    m = disk_bem.geometry.mass
    e = D.energy_like(disk_bem, VortexField.empty(), (1.0, 0.0), 0.0)
    assert e == pytest.approx(0.5 * (m + np.pi), rel=1e-12)


def test_vortical_energy_converges(disk_tables):
    vf = VortexField.point_vortices([[2.0, 0.0], [-2.0, 0.3]], [1.0, -1.0], 0.1)
    e = [D.energy_parts(disk_tables, vf, (0.0, 0.0), 0.0, spacing=s).vortical for s in (0.1, 0.05, 0.025)]
    assert abs(e[2] - e[1]) <= 1e-6 * abs(e[2])
    assert e[2] > 0


def test_energy_radius_must_enclose_vorticity(disk_tables):
    vf = VortexField.point_vortices([[3.0, 0.0]], [1.0], 0.1)
    with pytest.raises(InvalidArgument):
        D.energy_parts(disk_tables, vf, (0.0, 0.0), 0.0, outer_radius=2.0)


def test_blasius_on_disk(disk_tables, disk_bem):
    for t in (disk_tables, disk_bem):
        b = D.blasius_integrals(t)
        assert np.max(np.abs(b.normal)) <= 1e-12 and abs(b.moment) <= 1e-12


def test_blasius_on_fourier_body(fourier_tables):
    b = D.blasius_integrals(fourier_tables)
    assert np.max(np.abs(b.normal)) <= 1e-3 * b.scale
    assert abs(b.moment) <= 1e-3 * b.scale
    np.testing.assert_allclose(b.normal, b.normal_complex, atol=1e-12)


def test_kelvin_circulation(fourier_tables):
    om = preset_vorticity("gaussian-patch", (2.4, 0.5), 0.5, 2.0, 0.05)
    vf = sample_particles(om, 0.1, fourier_tables.geometry, gamma=-0.3)
    assert D.kelvin_circulation(fourier_tables, vf, (0.5, 0.2), 0.7) == pytest.approx(-0.3, abs=1e-10)


def test_energy_constant_fit():
    t = np.linspace(0, 1, 11)
    e = 2.0 * np.exp(0.3 * t)
    c = D.fit_energy_constant(t, e)
    assert np.all(e <= D.energy_bound(e[0], c, t) * (1 + 1e-12))
    assert D.fit_energy_constant(t, 2.0 - 0.1 * t) == 0.0


def test_builtin_test_fields_are_admissible(fourier_body):
    fields = D.builtin_test_fields(fourier_body, 3.0, (2.4, 0.0))
    assert [f.name for f in fields] == ["translate-x", "translate-y", "rotate", "bump"]


def test_non_rigid_test_field_is_rejected(disk):
    with pytest.raises(InvalidTestFunction):
        D.check_test_field(D.TestField("bad", (1.5, 0.0), 0.0, 1.0, amplitude=1.0), disk)


def test_weak_residual_vanishes_trivially(disk_tables):
    vf = VortexField.empty()
    snaps = [D.Snapshot(t, np.zeros(2), 0.0, vf) for t in np.linspace(0, 1, 5)]
    for tf in D.builtin_test_fields(disk_tables.geometry, 1.0):
        assert D.weak_residual(disk_tables, snaps, tf) == 0.0
    om = preset_vorticity("gaussian-patch", (2.5, 0.0), 0.5, 2.0, 0.1)
    field = sample_particles(om, 0.2, disk_tables.geometry)
    zero = D.TestField("zero", (0.0, 0.0), 1.25, 4.0)
    snaps = [D.Snapshot(t, np.array([0.1, 0.0]), 0.2, field) for t in np.linspace(0, 1, 5)]
    assert D.weak_residual(disk_tables, snaps, zero) == 0.0
