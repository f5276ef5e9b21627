import numpy as np
import pytest

from vortex_body.errors import DomainError, InvalidArgument
from vortex_body.geometry import make_disk, make_fourier_body, perp
from vortex_body.potentials import (
    assemble,
    harmonic_field,
    kirchhoff_gradients,
    kirchhoff_hessians,
    kirchhoff_potentials,
    solve_boundary_sheet,
)


def mfs_added_mass(coeffs, n_src=160, n_col=960):
    """Kirchhoff potentials from point sources inside the body, fitted by least squares."""
    body = make_fourier_body(coeffs, n_col, 1.0, 1.0)
    x, n, ds = body.nodes, body.normals, body.ds
    phi = 2 * np.pi * np.arange(n_src) / n_src
    src = 0.7 * body.curve(phi)
    d = x[:, None, :] - src[None, :, :]
    r2 = np.sum(d * d, axis=-1)
    dn = np.sum(d * n[:, None, :], axis=-1) / (2 * np.pi * r2)
    green = np.log(r2) / (4 * np.pi)
    k = np.stack([n[:, 0], n[:, 1], np.sum(perp(x) * n, axis=-1)], axis=1)
    a = np.vstack([dn, 1e3 * np.ones((1, n_src))])
    rhs = np.vstack([k, np.zeros((1, 3))])
    q, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    pot = green @ q
    return np.einsum("mi,mj,m->ij", pot, k, ds)


def analytic_grad_phi1(x):
    x1, x2 = x[..., 0], x[..., 1]
    r4 = (x1**2 + x2**2) ** 2
    return np.stack([(x1**2 - x2**2) / r4, 2 * x1 * x2 / r4], axis=-1)


@pytest.mark.parametrize("which", ["disk_tables", "disk_bem"])
def test_harmonic_field_on_disk(which, request):
    t = request.getfixturevalue(which)
    np.testing.assert_allclose(harmonic_field(t, [2.0, 0.0]), [0.0, 1 / (4 * np.pi)], atol=1e-13)
    np.testing.assert_allclose(harmonic_field(t, [0.0, 3.0]), [-1 / (6 * np.pi), 0.0], atol=1e-13)


def test_harmonic_field_circulation_on_fourier_body(fourier_tables):
    phi = 2 * np.pi * np.arange(400) / 400
    pts = 5.0 * np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    tau = perp(pts) / 5.0
    circ = np.sum(np.sum(harmonic_field(fourier_tables, pts) * tau, axis=-1)) * 5.0 * 2 * np.pi / 400
    assert abs(circ - 1.0) <= 1e-4


def test_harmonic_field_is_tangent(fourier_tables):
    assert fourier_tables.residuals["H_normal"] <= 1e-10


def test_points_inside_are_rejected(disk_bem):
    with pytest.raises(DomainError):
        harmonic_field(disk_bem, [0.5, 0.0])
    with pytest.raises(DomainError):
        kirchhoff_gradients(disk_bem, [[2.0, 0.0], [0.1, 0.1]])


@pytest.mark.parametrize("which", ["disk_tables", "disk_bem"])
def test_kirchhoff_on_disk(which, request):
    t = request.getfixturevalue(which)
    np.testing.assert_allclose(kirchhoff_gradients(t, [2.0, 0.0])[0], [0.25, 0.0], atol=1e-12)
    np.testing.assert_allclose(kirchhoff_potentials(t, [2.0, 0.0]), [-0.5, 0.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(t.M2, np.diag([np.pi, np.pi, 0.0]), atol=1e-10)


def test_kirchhoff_fourier_normal_data(fourier_tables):
    assert max(fourier_tables.residuals["kirchhoff_normal"]) <= 1e-10


def test_fourier_added_mass_against_source_fit(fourier_tables):
    oracle = mfs_added_mass([(1.0, 0.0), (0.0, 0.0), (0.2, 0.0)])
    np.testing.assert_allclose(fourier_tables.M2, oracle, atol=1e-6)
    np.testing.assert_allclose(np.diag(fourier_tables.M2), [2.21358344, 4.68214837, 0.23894008], atol=1e-7)
    assert np.all(np.linalg.eigvalsh(fourier_tables.M) > 0)


def test_gradients_match_potential_differences(fourier_tables, rng):
    ang = rng.uniform(0, 2 * np.pi, 20)
    pts = rng.uniform(1.6, 3.0, 20)[:, None] * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    g = kirchhoff_gradients(fourier_tables, pts)
    e = 1e-5
    for k in range(2):
        step = np.zeros(2)
        step[k] = e
        fd = (kirchhoff_potentials(fourier_tables, pts + step) - kirchhoff_potentials(fourier_tables, pts - step)) / (2 * e)
        np.testing.assert_allclose(g[..., k], fd, atol=1e-7)


def test_hessians_symmetric_and_traceless(fourier_tables):
    pts = np.array([[2.0, 0.3], [-1.5, 1.2], [0.2, -2.5]])
    hess = kirchhoff_hessians(fourier_tables, pts)
    np.testing.assert_allclose(hess, np.swapaxes(hess, -1, -2), atol=1e-6)
    np.testing.assert_allclose(np.trace(hess, axis1=-2, axis2=-1), 0.0, atol=1e-6)


def test_sheet_for_unit_circulation(disk_bem):
    sheet = solve_boundary_sheet(disk_bem, np.zeros(128), 1.0)
    np.testing.assert_allclose(sheet.density, 1 / (2 * np.pi), atol=1e-12)
    np.testing.assert_allclose(sheet.velocity([2.0, 0.0]), [0.0, 1 / (4 * np.pi)], atol=1e-12)


def test_sheet_zero_data(disk_bem):
    sheet = solve_boundary_sheet(disk_bem, np.zeros(128), 0.0)
    np.testing.assert_allclose(sheet.density, 0.0, atol=1e-15)


def test_sheet_reproduces_kirchhoff_field(disk_bem):
    d = disk_bem.geometry
    sheet = solve_boundary_sheet(disk_bem, d.normals[:, 0], 0.0)
    phi = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    pts = 2.0 * np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    exact = analytic_grad_phi1(pts)
    err = np.max(np.abs(sheet.velocity(pts) - exact)) / np.max(np.abs(exact))
    assert err <= 1e-2


def test_sheet_rejects_net_flux(disk_bem):
    with pytest.raises(InvalidArgument):
        solve_boundary_sheet(disk_bem, np.ones(128), 0.0)


def test_added_mass_converges_on_disk_without_closed_form():
    errs = []
    for n in (32, 64, 128):
        t = assemble(make_disk(1.0, n, 1.0, 0.5), analytic=False)
        errs.append(np.max(np.abs(t.M2 - np.diag([np.pi, np.pi, 0.0]))))
    assert errs[-1] <= 1e-10
