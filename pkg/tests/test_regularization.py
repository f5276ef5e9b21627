import numpy as np
import pytest

from vortex_body.biot_savart import kernel_velocity
from vortex_body.errors import ResolutionError
from vortex_body.regularization import (
    Grid,
    GridField,
    bump_kernel,
    corrected_beta,
    difference,
    mollify,
    preset_vorticity,
    restrict_to_fluid,
    sample_particles,
)


def square(center, side, h):
    g = Grid.covering((center[0] - side, center[1] - side), (center[0] + side, center[1] + side), h)
    c = g.centers()
    inside = np.all(np.abs(c - np.asarray(center)) < side / 2, axis=-1)
    return GridField(g, inside.astype(float))


def test_zero_field_stays_zero():
    z = GridField(Grid((2.0, 0.0), 0.01, (30, 30)), np.zeros((30, 30)))
    for n in (4, 8, 16, 32):
        assert np.all(mollify(z, n).values == 0.0)


def test_kernel_has_unit_mass():
    for n in (4, 8, 16, 32):
        h = 1 / 256
        k, half = bump_kernel(n, h)
        assert k.shape == (2 * half + 1, 2 * half + 1)
        assert abs(k.sum() * h * h - 1.0) <= 1e-10


def test_kernel_resolution_is_checked():
    with pytest.raises(ResolutionError):
        bump_kernel(32, 1 / 32)


def test_square_indicator_converges_monotonically(disk):
    om = square((3.0, 0.0), 0.5, 1 / 128)
    l1, shifts = [], []
    for n in (4, 8, 16, 32):
        mn = mollify(om, n, disk)
        l1.append(difference(mn, om).lp_norm(1))
        shifts.append(abs(corrected_beta(0.0, mn, om)))
    assert all(a > b for a, b in zip(l1, l1[1:]))
    assert all(d <= l for d, l in zip(shifts, l1))


def test_young_inequality(disk):
    om = preset_vorticity("uniform-patch", (2.5, 0.0), 0.4, 3.0, 1 / 64)
    for n in (4, 8, 16):
        assert mollify(om, n, disk).lp_norm(2.0) <= om.lp_norm(2.0) * (1 + 1e-12)


def test_corrected_beta_formula():
    g = Grid((0.0, 0.0), 0.1, (10, 10))
    a = GridField(g, np.ones((10, 10)))
    assert corrected_beta(2.0, a, a) == 2.0
    b = GridField(g, np.ones((10, 10)) + 0.1 / (100 * g.cell_area))
    assert corrected_beta(2.0, b, a) == pytest.approx(2.1, abs=1e-13)


def test_support_stays_local(disk):
    om = preset_vorticity("uniform-patch", (3.0, 0.0), 0.3, 1.0, 1 / 64)
    for n in (4, 32):
        mn = mollify(om, n, disk)
        assert mn.support_radius((3.0, 0.0)) <= 0.3 + 1.0 / n + 2 / 64


def test_cells_in_the_body_are_dropped(disk):
    om = preset_vorticity("uniform-patch", (1.5, 0.0), 0.45, 1.0, 1 / 64)
    mn = mollify(om, 4, disk)
    assert mn.discarded_mass > 0
    assert np.all(~disk.contains(mn.grid.centers()[mn.values != 0]))
    kept = restrict_to_fluid(om, disk)
    assert kept.discarded_mass == 0.0


def test_four_particles_from_a_unit_square():
    g = GridField(Grid((3.0, 0.0), 0.5, (2, 2)), np.ones((2, 2)))
    vf = sample_particles(g, 0.5)
    assert len(vf) == 4
    np.testing.assert_allclose(vf.strengths, 0.25)
    np.testing.assert_allclose(np.sort(vf.positions[:, 0]), [3.25, 3.25, 3.75, 3.75])


def test_alpha_equals_grid_integral(disk):
    om = preset_vorticity("gaussian-patch", (2.5, 0.3), 0.6, 2.0, 0.03)
    vf = sample_particles(om, 0.06, disk, gamma=0.4)
    assert vf.alpha == pytest.approx(om.integral(), rel=1e-14)
    assert vf.beta == pytest.approx(0.4 + om.integral(), rel=1e-14)


def test_sampling_self_convergence(disk_tables):
    x = np.array([6.0, 2.0])
    vals = []
    for h in (0.04, 0.02):
        om = preset_vorticity("gaussian-patch", (2.5, 0.0), 0.6, 2.0, h)
        vals.append(kernel_velocity(disk_tables, sample_particles(om, 2 * h, disk_tables.geometry), x))
    assert np.linalg.norm(vals[1] - vals[0]) <= 1e-2 * np.linalg.norm(vals[1])


def test_vortex_pair_layout():
    om = preset_vorticity("vortex-pair", (3.0, 0.0), 0.5, 2.0, 0.02)
    c = om.grid.centers()
    pos = om.values > 0
    assert abs(om.integral()) <= 1e-12
    np.testing.assert_allclose(c[pos].mean(axis=0), [3.0, 0.625], atol=0.01)
    np.testing.assert_allclose(c[om.values < 0].mean(axis=0), [3.0, -0.625], atol=0.01)
