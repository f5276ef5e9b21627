"""Velocity of a particle-represented vorticity around the body.

The full field is

    v = K[omega] + beta H + l1 grad Phi_1 + l2 grad Phi_2 + r grad Phi_3,

with ``K[omega]`` the desingularized Biot-Savart operator of the exterior
domain: free algebraic blobs plus a correction with zero normal flow on the
body and circulation ``-alpha`` around it.

For the centered disk the correction is the image system (an image blob of
strength ``-G`` at ``a^2 y/|y|^2`` with core ``delta a/|y|``, which keeps the
blob stream function exactly constant on the circle) plus a point vortex at
the center.  Other bodies get a source sheet canceling the blobs' normal flow
at the nodes, plus a multiple of ``H``.  In both cases the multiple of the
center vortex is fixed from the exact circulations of the pieces: free and
image blobs by their enclosed vorticity, ``H`` by construction (1), sheets
and Kirchhoff gradients by construction (0).
"""

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from . import kernels
from .errors import InvalidArgument
from .geometry import perp
from .potentials import _as_points, _disk_kirchhoff, check_fluid, point_vortex_h0


@dataclass(frozen=True, eq=False)
class VortexField:
    """Vortex particles with a shared blob radius plus the circulation data.

    Positions are in the body frame.  Strengths are ``omega * area``.
    """

    positions: np.ndarray
    omega: np.ndarray
    area: np.ndarray
    delta: float
    gamma: float = 0.0
    p: float = 2.0

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1, 2)
        omega = np.array(self.omega, dtype=float).reshape(-1)
        area = np.array(np.broadcast_to(np.asarray(self.area, dtype=float), omega.shape))
        if pos.shape[0] != omega.shape[0]:
            raise InvalidArgument("positions and vorticity values differ in length")
        if np.any(area <= 0):
            raise InvalidArgument("area weights must be positive")
        if not self.delta > 0:
            raise InvalidArgument("blob radius delta must be positive")
        if not self.p > 1:
            raise InvalidArgument("p > 1 is required")
        for arr in (pos, omega, area):
            arr.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "area", area)
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "p", float(self.p))

    @classmethod
    def empty(cls, delta=0.1, gamma=0.0, p=2.0):
        return cls(np.zeros((0, 2)), np.zeros(0), np.zeros(0), delta, gamma, p)

    @classmethod
    def point_vortices(cls, positions, strengths, delta, gamma=0.0, p=2.0):
        """Particles of unit area weight carrying the given strengths."""
        strengths = np.asarray(strengths, dtype=float).reshape(-1)
        return cls(positions, strengths, np.ones_like(strengths), delta, gamma, p)

    def __len__(self):
        return self.positions.shape[0]

    @cached_property
    def strengths(self):
        out = self.omega * self.area
        out.setflags(write=False)
        return out

    @cached_property
    def alpha(self):
        return math.fsum(self.strengths)

    @property
    def beta(self):
        return self.gamma + self.alpha

    def with_positions(self, positions):
        return replace(self, positions=positions)


def blob_enclosed_fraction(rho, delta, radius):
    """Fraction of a unit algebraic blob at distance ``rho`` from the origin
    lying inside the centered disk of the given radius (exact)."""
    a2 = radius * radius
    big = a2 + rho * rho + delta * delta
    s = np.sqrt(np.maximum(big * big - 4 * a2 * rho * rho, 0.0))
    return 0.5 + (a2 - rho * rho - delta * delta) / (2 * s)


@dataclass(frozen=True, eq=False)
class FlowField:
    """One concrete velocity field: blobs, center vortex, sheet or closed-form terms."""

    tables: object = field(repr=False)
    blob_positions: np.ndarray = field(repr=False)
    blob_strengths: np.ndarray = field(repr=False)
    blob_core2: np.ndarray = field(repr=False)
    h0_coefficient: float
    sheet: np.ndarray = field(repr=False)  # source density, None in closed-form mode
    kirchhoff_coefficients: np.ndarray
    ell: np.ndarray
    r: float

    def velocity_raw(self, pts):
        pts = np.atleast_2d(pts)
        out = kernels.blob_velocity(pts, self.blob_positions, self.blob_strengths, self.blob_core2)
        if self.h0_coefficient != 0.0:
            out += self.h0_coefficient * point_vortex_h0(pts)
        if self.sheet is not None:
            out += self.tables.layer_velocity(self.sheet, pts)
        elif np.any(self.kirchhoff_coefficients[:2] != 0.0):
            grads = _disk_kirchhoff(pts, self.tables.geometry.a0)
            out += np.einsum("i,imk->mk", self.kirchhoff_coefficients, grads)
        return out

    def velocity(self, x):
        pts, single = _as_points(x)
        check_fluid(self.tables.geometry, pts)
        out = self.velocity_raw(pts)
        return out[0] if single else out

    def rigid_velocity(self, pts):
        return self.ell + self.r * perp(pts)

    def relative_velocity_raw(self, pts):
        pts = np.atleast_2d(pts)
        return self.velocity_raw(pts) - self.rigid_velocity(pts)

    def boundary_velocity(self):
        """Velocity on the fine curve samples."""
        return self.velocity_raw(self.tables.samples.points)

    def boundary_circulation(self):
        return self.tables.circulation(self.boundary_velocity())

    def boundary_residual(self):
        """max over nodes of |v.n - (l + r x^perp).n|."""
        t = self.tables
        nodes = t.boundary_points
        rel = self.relative_velocity_raw(nodes)
        return float(np.max(np.abs(np.sum(rel * t.boundary_normals, axis=-1)), initial=0.0))


def _kernel_parts(tables, vfield):
    """Blob sources, center-vortex coefficient and sheet density of K_delta."""
    g = tables.geometry
    y = vfield.positions
    gam = vfield.strengths
    core2 = np.full(len(gam), vfield.delta**2)
    if len(vfield) == 0:
        return y, gam, core2, 0.0, None
    if tables.analytic:
        a = g.a0
        rho = np.hypot(y[:, 0], y[:, 1])
        img = (a * a / rho**2)[:, None] * y
        img_core2 = (vfield.delta * a / rho) ** 2
        enclosed = math.fsum(gam * (blob_enclosed_fraction(rho, vfield.delta, a)
                                    - blob_enclosed_fraction(a * a / rho, np.sqrt(img_core2), a)))
        positions = np.concatenate([y, img])
        strengths = np.concatenate([gam, -gam])
        cores = np.concatenate([core2, img_core2])
        return positions, strengths, cores, -vfield.alpha - enclosed, None
    nodes = tables.boundary_points
    flux = -np.sum(kernels.blob_velocity(nodes, y, gam, core2) * tables.boundary_normals, axis=-1)
    q, _ = tables.source_system.solve(flux)
    free_circ = tables.circulation(kernels.blob_velocity(tables.samples.points, y, gam, core2))
    return y, gam, core2, -vfield.alpha - free_circ, q


def flow_field(tables, vfield, ell=(0.0, 0.0), r=0.0, include_kernel=True, beta=None):
    """Assemble ``v`` for the given particles and rigid velocities.

    ``beta`` overrides the coefficient of ``H`` (defaults to ``vfield.beta``).
    """
    ell = np.asarray(ell, dtype=float).reshape(2)
    r = float(r)
    beta = vfield.beta if beta is None else float(beta)
    coeffs = np.array([ell[0], ell[1], r])
    if include_kernel:
        pos, gam, core2, c_k, q_k = _kernel_parts(tables, vfield)
    else:
        pos, gam, core2, c_k, q_k = np.zeros((0, 2)), np.zeros(0), np.zeros(0), 0.0, None
    h0 = c_k + beta
    if tables.analytic:
        sheet = None
    else:
        sheet = h0 * tables.h_density + coeffs @ tables.source_density
        if q_k is not None:
            sheet = sheet + q_k
    return FlowField(tables, pos, gam, core2, float(h0), sheet, coeffs, ell, r)


def kernel_field(tables, vfield):
    """K_delta[omega] alone (circulation -alpha around the body)."""
    return flow_field(tables, vfield, beta=0.0)


def kernel_velocity(tables, vfield, x):
    return kernel_field(tables, vfield).velocity(x)


def total_velocity(tables, vfield, ell, r, x):
    return flow_field(tables, vfield, ell, r).velocity(x)


def relative_velocity(tables, vfield, ell, r, x):
    """Advection field ``v - l - r x^perp``; tangent to the body."""
    pts, single = _as_points(x)
    check_fluid(tables.geometry, pts)
    out = flow_field(tables, vfield, ell, r).relative_velocity_raw(pts)
    return out[0] if single else out
