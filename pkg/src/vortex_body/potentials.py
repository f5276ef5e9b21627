"""Exterior Laplace problems around the body.

* the harmonic field ``H``: tangent to the body, curl and divergence free,
  unit circulation, decaying at infinity;
* the Kirchhoff potentials ``Phi_1..3`` with Neumann data
  ``(n1, n2, x^perp . n)``;
* the added-mass matrix ``M2 = [int grad Phi_a . grad Phi_b]`` and the total
  inertia ``M = M1 + M2``.

Every exterior field is a single-layer source density on the curve, plus
(for fields carrying circulation) the unit point vortex
``H0 = x^perp / (2 pi |x|^2)`` at the origin, which lies inside the
star-shaped body.  A source layer has no circulation, so ``H`` has
circulation exactly one.

The layer density lives at the boundary nodes (one per panel).  The normal
trace is discretized by the trapezoid rule on the smooth curve (Nystrom); the
kernel is smooth there, with diagonal limit ``-kappa/(4 pi)``.  Potentials on
the boundary use the product rule for the logarithmic kernel.  Both converge
spectrally for smooth bodies.  Fields away from the nodes are evaluated on an
upsampled grid in Cauchy-integral form (see ``kernels``), which stays
accurate up to the boundary.

For a centered disk the closed forms are used for field evaluation
(``analytic=True``); the layer solution is always assembled so that the
boundary-element path can be checked against them.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.signal

from . import kernels
from .errors import DomainError, InvalidArgument, SolverFailure
from .geometry import CurveSamples, perp

MAX_CONDITION = 1e12
BC_TOLERANCE = 1e-3
UPSAMPLE = 8


@dataclass(frozen=True, eq=False)
class SheetSystem:
    """Factorized layer system augmented with a zero-net-source row.

    The extra unknown is a multiplier that absorbs any net flux in the data.
    """

    lu: tuple = field(repr=False)
    normal_influence: np.ndarray = field(repr=False)
    condition_number: float

    def solve(self, flux):
        rhs = np.append(np.asarray(flux, dtype=float), 0.0)
        sol = scipy.linalg.lu_solve(self.lu, rhs)
        return sol[:-1], sol[-1]


def _factor(normal, ds):
    n = normal.shape[0]
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = normal
    aug[:n, n] = 1.0
    aug[n, :n] = ds
    cond = float(np.linalg.cond(aug))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SolverFailure(f"boundary layer system is singular (condition number {cond:.3e})", cond)
    return SheetSystem(scipy.linalg.lu_factor(aug), normal, cond)


def _normal_matrix(geometry):
    """Fluid-side normal velocity at node i of a unit density around node j."""
    g = geometry
    x, n, ds = g.nodes, g.normals, g.ds
    d = x[:, None, :] - x[None, :, :]
    r2 = np.sum(d * d, axis=-1)
    np.fill_diagonal(r2, 1.0)
    A = np.einsum("ijk,ik->ij", d, n) / r2 * ds[None, :] / (2 * np.pi)
    phi = (np.arange(g.n_panels) + 0.5) * (2 * np.pi / g.n_panels)
    A[np.diag_indices_from(A)] = -g.curvature(phi) * ds / (4 * np.pi) - 0.5
    return A


def _log_weights(n):
    """Weights R_j(t_i) for  int log(4 sin^2((t - s)/2)) f(s) ds  on n equispaced nodes."""
    shift = np.arange(n) * (2 * np.pi / n)
    m = np.arange(1, (n - 1) // 2 + 1)
    row = -(4 * np.pi / n) * (np.cos(np.outer(shift, m)) @ (1.0 / m))
    if n % 2 == 0:
        row -= (4 * np.pi / n**2) * np.cos((n // 2) * shift)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return row[idx]


def _potential_matrix(geometry):
    """Single-layer potential (1/2pi) int log|x_i - y| q ds_y at the nodes."""
    g = geometry
    n = g.n_panels
    dt = 2 * np.pi / n
    x = g.nodes
    speed = g.ds / dt
    d = x[:, None, :] - x[None, :, :]
    r2 = np.sum(d * d, axis=-1)
    diff = (np.arange(n)[:, None] - np.arange(n)[None, :]) * dt
    s2 = 4 * np.sin(diff / 2) ** 2
    np.fill_diagonal(r2, 1.0)
    np.fill_diagonal(s2, 1.0)
    smooth = 0.5 * np.log(r2 / s2)
    smooth[np.diag_indices_from(smooth)] = np.log(speed)
    kernel = 0.5 * _log_weights(n) + dt * smooth
    return kernel * speed[None, :] / (2 * np.pi)


def point_vortex_h0(x):
    x = np.atleast_2d(x)
    r2 = np.sum(x * x, axis=-1)
    return perp(x) / (2 * np.pi * r2[:, None])


@dataclass(frozen=True, eq=False)
class FineGrid:
    """Upsampled boundary grid carrying the node grid as every ``factor``-th point."""

    factor: int
    points: np.ndarray = field(repr=False)
    tangents: np.ndarray = field(repr=False)
    speed: np.ndarray = field(repr=False)
    zeta: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    ds: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, geometry, factor):
        n = geometry.n_panels * factor
        dt = 2 * np.pi / n
        phi = np.pi / geometry.n_panels + dt * np.arange(n)
        points, tangents, speed = geometry.frame(phi)
        tz = tangents[:, 0] + 1j * tangents[:, 1]
        zeta = np.ascontiguousarray(points[:, 0] + 1j * points[:, 1])
        return cls(factor, points, tangents, speed, zeta,
                   np.ascontiguousarray(tz * speed * dt), speed * dt)

    def upsample(self, density):
        density = np.atleast_2d(np.asarray(density, dtype=float))
        if self.factor == 1:
            return density
        return scipy.signal.resample(density, density.shape[-1] * self.factor, axis=-1)

    def layer_data(self, density):
        """Cauchy data g = q conj(tau) and dg/dzeta on the fine grid."""
        q = self.upsample(density)
        tz = self.tangents[:, 0] - 1j * self.tangents[:, 1]
        g = q * tz[None, :]
        n = g.shape[-1]
        k = np.fft.fftfreq(n, d=1.0 / n)
        if n % 2 == 0:
            k[n // 2] = 0.0
        dg_dt = np.fft.ifft(1j * k[None, :] * np.fft.fft(g, axis=-1), axis=-1)
        dz_dt = self.weights / (2 * np.pi / n)
        return np.ascontiguousarray(g), np.ascontiguousarray(dg_dt / dz_dt[None, :]), q


@dataclass(frozen=True, eq=False)
class PotentialTables:
    geometry: object
    analytic: bool
    fine: FineGrid = field(repr=False)
    source_system: SheetSystem = field(repr=False)
    potential_influence: np.ndarray = field(repr=False)
    h_density: np.ndarray = field(repr=False)  # layer density of H - H0
    source_density: np.ndarray = field(repr=False)  # (3, N) Kirchhoff densities
    M1: np.ndarray
    M2: np.ndarray
    M2_panel: np.ndarray
    M2_asymmetry: float
    residuals: dict

    @property
    def M(self):
        return self.M1 + self.M2

    # nodes with their trapezoid weights
    @property
    def boundary_points(self):
        return self.geometry.nodes

    @property
    def boundary_normals(self):
        return self.geometry.normals

    @property
    def boundary_tangents(self):
        return self.geometry.tangents

    @property
    def boundary_weights(self):
        return self.geometry.ds

    @cached_property
    def samples(self):
        """The fine grid as curve samples, for boundary integrals of velocity fields."""
        f = self.fine
        return CurveSamples(f.points, f.tangents, perp(f.tangents), f.ds)

    def neumann_data(self):
        """Rows (n1, n2, x^perp . n) at the nodes."""
        pts, nrm = self.boundary_points, self.boundary_normals
        return np.stack([nrm[:, 0], nrm[:, 1], np.sum(perp(pts) * nrm, axis=-1)])

    def circulation(self, velocity_at_samples):
        sm = self.samples
        return float(sm.weights @ np.sum(velocity_at_samples * sm.tangents, axis=-1))

    def layer_velocity(self, density, pts):
        """Velocity of source layers at fluid points; (M, 2) or (k, M, 2)."""
        density = np.asarray(density, dtype=float)
        g, dg, _ = self.fine.layer_data(density)
        out = kernels.cauchy_velocity(pts, self.fine.zeta, self.fine.weights, g, dg)
        return out[0] if density.ndim == 1 else out

    def layer_potential(self, density, pts):
        density = np.asarray(density, dtype=float)
        q = self.fine.upsample(density)
        out = kernels.log_potential(pts, self.fine.points, q * self.fine.ds[None, :])
        return out[0] if density.ndim == 1 else out

    @cached_property
    def h_circulation(self):
        """Measured circulation of H on the fine grid (1 up to quadrature)."""
        return self.circulation(harmonic_field_raw(self, self.samples.points))

    @cached_property
    def kirchhoff_circulation(self):
        """Measured circulations of grad Phi_i (0 up to quadrature)."""
        grads = kirchhoff_raw(self, self.samples.points)
        return np.array([self.circulation(g) for g in grads])

    @cached_property
    def interior_system(self):
        # the body-side limit of the normal velocity differs by the unit jump
        normal = self.source_system.normal_influence + np.eye(self.geometry.n_panels)
        return _factor(normal, self.geometry.ds)


def check_fluid(geometry, x):
    x = np.asarray(x, dtype=float)
    gap = geometry.signed_radial_gap(x)
    if np.any(gap < -1e-12 * geometry.max_radius):
        raise DomainError("evaluation point lies inside the body")


def _as_points(x):
    x = np.asarray(x, dtype=float)
    return x.reshape(-1, 2), x.ndim == 1


def assemble(geometry, analytic=None, upsample=UPSAMPLE):
    """Boundary-element tables for ``geometry``.

    ``analytic`` defaults to True for disk geometries: field evaluation then
    uses closed forms and ``M2`` is the exact disk value.  The layer solution
    is assembled in all cases.
    """
    if analytic is None:
        analytic = geometry.is_disk
    if analytic and not geometry.is_disk:
        raise InvalidArgument("closed-form fields exist only for the centered disk")

    nodes, normals, ds = geometry.nodes, geometry.normals, geometry.ds
    A = _normal_matrix(geometry)
    ss = _factor(A, ds)
    P = _potential_matrix(geometry)

    k_data = np.stack([normals[:, 0], normals[:, 1], np.sum(perp(nodes) * normals, axis=-1)])
    q = np.empty((3, geometry.n_panels))
    lam = np.empty(3)
    for i in range(3):
        q[i], lam[i] = ss.solve(k_data[i])
    h_flux = -np.sum(point_vortex_h0(nodes) * normals, axis=-1)
    q_h, lam_h = ss.solve(h_flux)

    phi_b = q @ P.T  # (3, N) potentials at the nodes
    raw = (phi_b * ds) @ k_data.T
    asym = float(np.max(np.abs(raw - raw.T)))
    m2_panel = 0.5 * (raw + raw.T)

    residuals = {
        "H_normal": float(np.max(np.abs(A @ q_h - h_flux))),
        "kirchhoff_normal": [float(np.max(np.abs(A @ q[i] - k_data[i]))) for i in range(3)],
        "multipliers": [float(v) for v in (*lam, lam_h)],
        "condition_number": ss.condition_number,
        "M2_asymmetry": asym,
    }
    worst = max(residuals["kirchhoff_normal"] + [residuals["H_normal"]])
    if worst > BC_TOLERANCE * max(1.0, float(np.max(np.abs(k_data)))):
        raise SolverFailure(f"boundary condition residual {worst:.3e} above tolerance", ss.condition_number)

    m1 = np.diag([geometry.mass, geometry.mass, geometry.inertia])
    if analytic:
        a2 = np.pi * geometry.a0**2
        m2 = np.diag([a2, a2, 0.0])
    else:
        m2 = m2_panel
    try:
        np.linalg.cholesky(m1 + m2)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure("total inertia matrix is not positive definite") from exc

    return PotentialTables(
        geometry=geometry, analytic=bool(analytic), fine=FineGrid.build(geometry, upsample),
        source_system=ss, potential_influence=P, h_density=q_h, source_density=q,
        M1=m1, M2=m2, M2_panel=m2_panel, M2_asymmetry=asym, residuals=residuals,
    )


def added_mass(geometry):
    """Layer-method tables with ``M2`` from the boundary Green identity."""
    return assemble(geometry, analytic=False)


# ---- field evaluation ------------------------------------------------

def _disk_kirchhoff(x, radius):
    x1, x2 = x[:, 0], x[:, 1]
    r4 = np.sum(x * x, axis=-1) ** 2
    a2 = radius**2
    g1 = np.stack([a2 * (x1**2 - x2**2) / r4, 2 * a2 * x1 * x2 / r4], axis=-1)
    g2 = np.stack([2 * a2 * x1 * x2 / r4, a2 * (x2**2 - x1**2) / r4], axis=-1)
    return np.stack([g1, g2, np.zeros_like(g1)])


def harmonic_field_raw(tables, pts):
    if tables.analytic:
        return point_vortex_h0(pts)
    return point_vortex_h0(pts) + tables.layer_velocity(tables.h_density, pts)


def kirchhoff_raw(tables, pts):
    if tables.analytic:
        return _disk_kirchhoff(np.atleast_2d(pts), tables.geometry.a0)
    return tables.layer_velocity(tables.source_density, pts)


def harmonic_field(tables, x):
    pts, single = _as_points(x)
    check_fluid(tables.geometry, pts)
    out = harmonic_field_raw(tables, pts)
    return out[0] if single else out


def kirchhoff_gradients(tables, x):
    """(grad Phi_1, grad Phi_2, grad Phi_3) at ``x``; shape (3, 2) or (3, M, 2)."""
    pts, single = _as_points(x)
    check_fluid(tables.geometry, pts)
    out = kirchhoff_raw(tables, pts)
    return out[:, 0] if single else out


def kirchhoff_potentials(tables, x):
    """(Phi_1, Phi_2, Phi_3) at ``x``; shape (3,) or (3, M).

    The layer route is a plain trapezoid sum, accurate away from the curve.
    """
    pts, single = _as_points(x)
    check_fluid(tables.geometry, pts)
    if tables.analytic:
        r2 = np.sum(pts * pts, axis=-1)
        a2 = tables.geometry.a0**2
        out = np.stack([-a2 * pts[:, 0] / r2, -a2 * pts[:, 1] / r2, np.zeros(len(pts))])
    else:
        out = tables.layer_potential(tables.source_density, pts)
    return out[:, 0] if single else out


def kirchhoff_hessians(tables, pts, step=1e-5):
    """Centered differences of the Kirchhoff gradients.

    Returns (3, M, 2, 2) with ``[i, m, a, b] = d_b d_a Phi_i``.
    """
    pts = np.atleast_2d(pts)
    out = np.empty((3, len(pts), 2, 2))
    for b in range(2):
        e = np.zeros(2)
        e[b] = step
        out[:, :, :, b] = (kirchhoff_raw(tables, pts + e) - kirchhoff_raw(tables, pts - e)) / (2 * step)
    return out


@dataclass(frozen=True, eq=False)
class BoundarySheet:
    """Exterior field with prescribed normal flux and circulation.

    Stored as a source density plus a multiple of ``H``; ``density`` is the
    equivalent vortex-sheet strength at the nodes, i.e. the jump of
    tangential velocity between the exterior field and the interior
    potential flow carrying the same normal flux.
    """

    tables: PotentialTables = field(repr=False)
    source: np.ndarray = field(repr=False)
    h_coefficient: float
    density: np.ndarray = field(repr=False)

    def velocity(self, x):
        pts, single = _as_points(x)
        check_fluid(self.tables.geometry, pts)
        t = self.tables
        out = (t.layer_velocity(self.source + self.h_coefficient * t.h_density, pts)
               + self.h_coefficient * point_vortex_h0(pts))
        return out[0] if single else out


def solve_boundary_sheet(tables, target_normal_flux, circulation, check=True):
    """Exterior field with ``v . n`` given at the nodes and the given circulation.

    The source layer carries no circulation, so all of it goes to ``H``.
    """
    g = tables.geometry
    flux = np.asarray(target_normal_flux, dtype=float)
    if flux.shape != (g.n_panels,):
        raise InvalidArgument("one flux value per panel is required")
    scale = float(np.sum(np.abs(flux) * g.ds))
    net = float(np.dot(flux, g.ds))
    if check and abs(net) > 1e-6 * scale + 1e-13:
        raise InvalidArgument(f"net normal flux {net:.3e} is not zero; the exterior problem has no decaying solution")
    ss = tables.source_system
    q, _ = ss.solve(flux)
    residual = float(np.max(np.abs(ss.normal_influence @ q - flux), initial=0.0))
    if check and residual > BC_TOLERANCE * max(np.max(np.abs(flux), initial=0.0), 1e-300):
        raise SolverFailure(f"boundary residual {residual:.3e} above tolerance", ss.condition_number)

    nodes, tau = g.nodes, g.tangents
    coef = float(circulation)
    q_in, _ = tables.interior_system.solve(flux)
    # trace at the nodes; the tangential component of a source layer is
    # continuous across it, so the interior flow uses the same trace
    traces = tables.layer_velocity(np.stack([q + coef * tables.h_density, q_in]), nodes)
    exterior_t = np.sum((traces[0] + coef * point_vortex_h0(nodes)) * tau, axis=-1)
    interior_t = np.sum(traces[1] * tau, axis=-1)
    return BoundarySheet(tables, q, coef, exterior_t - interior_t)
