"""Coupled evolution of the particles and the rigid body.

Particles move with the relative velocity ``w = v - l - r x^perp``.  The body
velocities solve

    M (l, r)' = F + (-m r l^perp, 0),

where ``F_i`` is the fluid force and torque beyond added mass.  Writing the
convective term as ``(w.grad)v + r v^perp = grad(|v|^2/2 - U.v) + omega w^perp``
with ``U = l + r x^perp`` turns the volume integrals against ``grad Phi_i``
into a boundary integral plus a sum over the vorticity carriers:

    F_i = oint (U.v - |v|^2/2) K_i ds - sum_j G_j w(y_j)^perp . grad Phi_i(y_j).

The volume form ``int v.((w.grad) grad Phi_i) - r v^perp.grad Phi_i`` is kept
as ``volume_force`` for cross-checks.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np

from .biot_savart import flow_field
from .errors import InvalidArgument, InvariantBreach, StepRejected
from .geometry import RigidState, fluid_quadrature, perp, rotation
from .potentials import kirchhoff_hessians, kirchhoff_raw

log = logging.getLogger(__name__)

DEFAULT_CFL = 0.5


@dataclass
class SimState:
    rigid: RigidState
    field: object
    step_count: int = 0
    penetrations: int = 0

    @property
    def t(self):
        return self.rigid.t


def boundary_weights(tables):
    """Neumann data (n1, n2, x^perp.n) times the weights on the fine samples."""
    sm = tables.samples
    k = np.stack([sm.normals[:, 0], sm.normals[:, 1], np.sum(perp(sm.points) * sm.normals, axis=-1)])
    return k * sm.weights[None, :]


def body_force(flow, positions, strengths, w=None):
    """``F`` for a flow field whose vorticity sits on ``positions``.

    ``w`` is the relative velocity at ``positions`` when already known.
    """
    t = flow.tables
    pts = t.samples.points
    v = flow.velocity_raw(pts)
    u = flow.rigid_velocity(pts)
    bern = np.sum(u * v, axis=-1) - 0.5 * np.sum(v * v, axis=-1)
    force = boundary_weights(t) @ bern
    if len(strengths):
        if w is None:
            w = flow.relative_velocity_raw(positions)
        grads = kirchhoff_raw(t, positions)
        force -= np.einsum("j,ijk,jk->i", strengths, grads, perp(w))
    return force


def solve_body(tables, force, ell, r):
    """(l', r') from the force and the Coriolis completion."""
    m = tables.geometry.mass
    rhs = np.array(force, dtype=float)
    rhs[:2] += -m * r * perp(ell)
    try:
        c = np.linalg.cholesky(tables.M)
    except np.linalg.LinAlgError as exc:
        raise InvariantBreach("total inertia matrix is not positive definite") from exc
    acc = np.linalg.solve(c.T, np.linalg.solve(c, rhs))
    return acc[:2], float(acc[2])


def body_rhs(tables, vfield, ell, r):
    flow = flow_field(tables, vfield, ell, r)
    return solve_body(tables, body_force(flow, vfield.positions, vfield.strengths), ell, r)


def particle_rhs(tables, vfield, ell, r):
    """Relative velocity at each particle; a blob induces nothing on itself."""
    flow = flow_field(tables, vfield, ell, r)
    return flow.relative_velocity_raw(vfield.positions)


def volume_force(tables, vfield, ell, r, outer_radius, spacing, step=1e-5):
    """``F`` from the volume integrals on a truncated log-polar grid."""
    flow = flow_field(tables, vfield, ell, r)
    ref = float(np.max(np.hypot(*vfield.positions.T), initial=0.0))
    quad = fluid_quadrature(tables.geometry, outer_radius, spacing, reference_radius=ref)
    x = quad.points
    v = flow.velocity_raw(x)
    w = v - flow.rigid_velocity(x)
    hess = kirchhoff_hessians(tables, x, step)
    grads = kirchhoff_raw(tables, x)
    b = np.einsum("ma,mb,imab,m->i", v, w, hess, quad.weights)
    c = -flow.r * np.einsum("mk,imk,m->i", perp(v), grads, quad.weights)
    return b + c


@dataclass(frozen=True)
class Derivative:
    positions: np.ndarray
    ell: np.ndarray
    r: float
    h: np.ndarray
    theta: float
    max_speed: float


def _rates(tables, vfield, ell, r, theta, frozen):
    flow = flow_field(tables, vfield, ell, r)
    if len(vfield):
        w = flow.relative_velocity_raw(vfield.positions)
        speed = float(np.max(np.hypot(w[:, 0], w[:, 1])))
    else:
        w = np.zeros((0, 2))
        speed = 0.0
    if frozen:
        dl, dr = np.zeros(2), 0.0
    else:
        dl, dr = solve_body(tables, body_force(flow, vfield.positions, vfield.strengths, w), ell, r)
    return Derivative(w, dl, dr, rotation(theta) @ ell, r, speed)


class Stepper:
    """Fixed-step RK4 for the coupled system.

    ``frozen`` keeps the body at rest (``l = r = 0``) and moves only the
    particles.  A step is rejected when ``dt`` times the largest particle
    speed exceeds ``cfl`` times the blob radius.  Particles that end a step
    inside the body are pushed radially back onto the boundary and counted.
    """

    def __init__(self, tables, frozen=False, cfl=DEFAULT_CFL):
        self.tables = tables
        self.frozen = bool(frozen)
        self.cfl = float(cfl)
        self.last_acceleration = (np.zeros(2), 0.0)

    def rates(self, state):
        g = state.rigid
        ell, r = (np.zeros(2), 0.0) if self.frozen else (g.ell, g.r)
        return _rates(self.tables, state.field, ell, r, g.theta, self.frozen)

    def step(self, state, dt):
        if dt < 0:
            raise InvalidArgument("dt must be non-negative")
        if dt == 0:
            return state
        g0 = state.rigid
        f0 = state.field
        k1 = self.rates(state)
        self.last_acceleration = (k1.ell, k1.r)
        if k1.max_speed * dt > self.cfl * f0.delta:
            raise StepRejected(
                f"dt={dt:g} moves a particle by {k1.max_speed * dt:.3g}, more than "
                f"{self.cfl:g} blob radii ({self.cfl * f0.delta:.3g})",
                suggested_dt=self.cfl * f0.delta / k1.max_speed,
            )

        def shifted(k, c):
            pos = f0.positions + c * k.positions
            return (f0.with_positions(pos), g0.ell + c * k.ell, g0.r + c * k.r, g0.theta + c * k.theta)

        def eval_at(args):
            fld, ell, r, theta = args
            if self.frozen:
                ell, r = np.zeros(2), 0.0
            return _rates(self.tables, fld, ell, r, theta, self.frozen)

        k2 = eval_at(shifted(k1, 0.5 * dt))
        k3 = eval_at(shifted(k2, 0.5 * dt))
        k4 = eval_at(shifted(k3, dt))

        def comb(name):
            return (getattr(k1, name) + 2 * getattr(k2, name) + 2 * getattr(k3, name)
                    + getattr(k4, name)) * (dt / 6.0)

        pos = f0.positions + comb("positions")
        pos, inside = self.tables.geometry.project_outside(pos)
        n_in = int(np.count_nonzero(inside))
        if n_in:
            log.warning("t=%.6g: %d particle(s) pushed back out of the body", g0.t + dt, n_in)
        if self.frozen:
            ell, r = np.zeros(2), 0.0
        else:
            ell, r = g0.ell + comb("ell"), g0.r + comb("r")
        rigid = RigidState(g0.h + comb("h"), g0.theta + comb("theta"), ell, r, g0.t + dt)
        return replace(state, rigid=rigid, field=f0.with_positions(pos),
                       step_count=state.step_count + 1, penetrations=state.penetrations + n_in)


def step(tables, state, dt, frozen=False, cfl=DEFAULT_CFL):
    return Stepper(tables, frozen, cfl).step(state, dt)
