"""Conserved and estimated quantities along a trajectory.

Energy: ``E = (m l^2 + J r^2 + int |v - beta H|^2) / 2``.  The finite-energy
part ``v - beta H`` is ``K[omega] + sum l_i grad Phi_i``; the two pieces are
L2-orthogonal (``K[omega]`` is tangent to the body and divergence free), so

    E = (l, r) M (l, r)^T / 2 + int |K[omega]|^2 / 2,

and only the vortical part needs a volume quadrature.

Weak residual: for a test field ``Psi`` (divergence free, rigid on the body,
compactly supported on the fluid side) and the pairing
``(u, Psi)_rho = m l_u.l_Psi + J r_u r_Psi + int_F u.Psi``,

    R = (Psi(T), v(T))_rho - (Psi(0), v(0))_rho - int (d_t Psi, v)_rho dt
        - int int_F v.((w.grad) Psi) dx dt + int int_F r v^perp.Psi dx dt
        [+ int m r l^perp.l_Psi dt]

with ``w = v - l - r x^perp``.  The bracketed body part of the last term is
included under the ``rho-weighted`` convention and left out under ``fluid``.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .biot_savart import flow_field, kernel_field
from .errors import InvalidArgument, InvalidTestFunction
from .geometry import fluid_quadrature, perp
from .potentials import harmonic_field_raw

log = logging.getLogger(__name__)

CONVENTIONS = ("fluid", "rho-weighted")


@dataclass
class DiagnosticsRecord:
    t: float
    E: float
    L1: float
    Lp: float
    L1_binned: float
    Lp_binned: float
    gamma: float
    alpha: float
    beta: float
    kelvin: float
    blasius_n: np.ndarray
    blasius_x: float
    ell_dot: float
    r_dot: float
    weak_residuals: dict = field(default_factory=dict)


# ---- energy ---------------------------------------------------------------

def support_radius(vfield):
    if len(vfield) == 0:
        return 0.0
    return float(np.max(np.hypot(vfield.positions[:, 0], vfield.positions[:, 1])))


@dataclass(frozen=True)
class EnergyParts:
    body: float
    vortical: float
    tail: float
    outer_radius: float

    @property
    def total(self):
        return self.body + self.vortical


def energy_parts(tables, vfield, ell, r, outer_radius=None, spacing=None):
    """Body/added-mass part, vortical part and the logged far-field tail.

    The vortical integral is truncated at ``outer_radius`` (default 8 times
    the vorticity support radius).  Beyond it ``|K| <= C/|x|^2`` with ``C``
    measured on the outer ring, giving a tail of ``pi C^2 / (2 R^2)`` for the
    half-square integral; the tail is reported, not added.
    """
    u = np.array([ell[0], ell[1], r], dtype=float)
    body = 0.5 * float(u @ tables.M @ u)
    if len(vfield) == 0:
        return EnergyParts(body, 0.0, 0.0, 0.0)
    supp = support_radius(vfield)
    geo = tables.geometry
    if outer_radius is None:
        outer_radius = 8.0 * max(supp, geo.max_radius)
    if outer_radius <= supp:
        raise InvalidArgument(f"energy radius {outer_radius:g} does not exceed the vorticity support {supp:g}")
    if spacing is None:
        spacing = 0.5 * vfield.delta
    quad = fluid_quadrature(geo, outer_radius, spacing, reference_radius=supp + 2 * vfield.delta)
    flow = kernel_field(tables, vfield)
    k = flow.velocity_raw(quad.points)
    vort = 0.5 * float(quad.weights @ np.sum(k * k, axis=-1))
    phi = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
    ring = outer_radius * np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    c = float(np.max(np.hypot(*flow.velocity_raw(ring).T))) * outer_radius**2
    tail = 0.5 * math.pi * c * c / outer_radius**2
    log.debug("energy tail beyond R=%.3g estimated at %.3e", outer_radius, tail)
    return EnergyParts(body, vort, tail, float(outer_radius))


def energy_like(tables, vfield, ell, r, outer_radius=None, spacing=None):
    return energy_parts(tables, vfield, ell, r, outer_radius, spacing).total


def fit_energy_constant(times, energies):
    """Smallest ``C >= 0`` with ``E(t) <= E(0) e^{Ct} + e^{Ct} - 1`` at every sample."""
    t = np.asarray(times, dtype=float)
    e = np.asarray(energies, dtype=float)
    mask = t > t[0]
    if not np.any(mask):
        return 0.0
    rates = np.log((e[mask] + 1.0) / (e[0] + 1.0)) / (t[mask] - t[0])
    return float(max(0.0, np.max(rates)))


def energy_bound(e0, c, t):
    g = np.exp(c * np.asarray(t, dtype=float))
    return e0 * g + g - 1.0


# ---- vorticity norms --------------------------------------------------------

def particle_norms(vfield, p):
    if len(vfield) == 0:
        return 0.0, 0.0
    w = np.abs(vfield.omega)
    l1 = math.fsum(w * vfield.area)
    lp = math.fsum(w**p * vfield.area) ** (1.0 / p)
    return l1, lp


def binned_norms(vfield, p, h):
    """Deposit strengths on a grid of spacing ``h`` by cloud-in-cell, then take norms.

    Grid nodes sit at ``(i + 1/2) h``, so particles sampled from cell centers
    of an aligned grid land exactly on nodes.
    """
    if len(vfield) == 0:
        return 0.0, 0.0
    s = vfield.positions / h - 0.5
    base = np.floor(s).astype(np.int64)
    frac = s - base
    lo = base.min(axis=0)
    shape = tuple(base.max(axis=0) - lo + 2)
    grid = np.zeros(shape)
    idx = base - lo
    g = vfield.strengths
    for dx in (0, 1):
        wx = frac[:, 0] if dx else 1.0 - frac[:, 0]
        for dy in (0, 1):
            wy = frac[:, 1] if dy else 1.0 - frac[:, 1]
            np.add.at(grid, (idx[:, 0] + dx, idx[:, 1] + dy), g * wx * wy)
    omega = np.abs(grid) / (h * h)
    l1 = float(np.sum(omega) * h * h)
    lp = float((np.sum(omega**p) * h * h) ** (1.0 / p))
    return l1, lp


def vorticity_norms(vfield, p=None, h=None):
    """((L1, Lp) from particle weights, (L1, Lp) from the binned field)."""
    p = vfield.p if p is None else float(p)
    if not p > 1:
        raise InvalidArgument("p > 1 is required")
    pw = particle_norms(vfield, p)
    if h is None:
        h = math.sqrt(float(np.median(vfield.area))) if len(vfield) else 1.0
    return pw, binned_norms(vfield, p, h)


# ---- boundary identities -------------------------------------------------

@dataclass(frozen=True)
class BlasiusIntegrals:
    normal: np.ndarray  # oint |H|^2 n ds
    moment: float  # oint |H|^2 x^perp.n ds
    scale: float  # oint |H|^2 ds
    normal_complex: np.ndarray
    moment_complex: float


def blasius_integrals(tables):
    """The two quadratic boundary integrals of ``H``, by direct and contour quadrature.

    On the boundary ``H = h tau``, so with ``f = H1 - i H2`` and ``dz = tau ds``
    one has ``oint |H|^2 n ds = i conj(oint f^2 dz)`` and
    ``oint |H|^2 x^perp.n ds = Re oint z f^2 dz``.
    """
    sm = tables.samples
    hv = harmonic_field_raw(tables, sm.points)
    h2 = np.sum(hv * hv, axis=-1)
    w = sm.weights
    normal = (h2 * w) @ sm.normals
    moment = float((h2 * w) @ np.sum(perp(sm.points) * sm.normals, axis=-1))
    f = hv[:, 0] - 1j * hv[:, 1]
    dz = (sm.tangents[:, 0] + 1j * sm.tangents[:, 1]) * w
    z = sm.points[:, 0] + 1j * sm.points[:, 1]
    c1 = 1j * np.conj(np.sum(f * f * dz))
    c2 = float(np.sum(z * f * f * dz).real)
    return BlasiusIntegrals(normal, moment, float(h2 @ w), np.array([c1.real, c1.imag]), c2)


def kelvin_circulation(tables, vfield, ell, r):
    return flow_field(tables, vfield, ell, r).boundary_circulation()


# ---- weak formulation ------------------------------------------------------

def _step_profile(s):
    """Smooth step S(s): 0 for s <= 0, 1 for s >= 1, with S' and S''."""
    s = np.asarray(s, dtype=float)
    out = [np.zeros_like(s), np.zeros_like(s), np.zeros_like(s)]
    out[0][s >= 1.0] = 1.0
    mid = (s > 0.0) & (s < 1.0)
    x = s[mid]
    y = 1.0 - x
    a = np.exp(-1.0 / x)
    b = np.exp(-1.0 / y)
    a1 = a / x**2
    b1 = -b / y**2
    a2 = a * (1.0 / x**4 - 2.0 / x**3)
    b2 = b * (1.0 / y**4 - 2.0 / y**3)
    d = a + b
    d1 = a1 + b1
    num1 = a1 * b - a * b1
    out[0][mid] = a / d
    out[1][mid] = num1 / d**2
    out[2][mid] = ((a2 * b - a * b2) * d - 2.0 * num1 * d1) / d**3
    return out


@dataclass(frozen=True)
class TestField:
    """``Psi(t, x) = tau(t) grad^perp(chi(|x - c|) g(x))``.

    ``chi`` equals 1 for ``|x - c| <= inner`` and 0 beyond ``outer``.
    ``g(x) = -l1 x2 + l2 x1 + rr |x|^2/2 + amplitude``, so that near ``c = 0``
    the field is the rigid motion ``(l1, l2) + rr x^perp``.  ``time_mode`` is
    ``"steady"`` (tau = 1) or ``"cos"`` (tau = cos t).
    """

    name: str
    center: tuple
    inner: float
    outer: float
    rigid: tuple = (0.0, 0.0, 0.0)
    amplitude: float = 0.0
    time_mode: str = "steady"

    def tau(self, t):
        return 1.0 if self.time_mode == "steady" else math.cos(t)

    def dtau(self, t):
        return 0.0 if self.time_mode == "steady" else -math.sin(t)

    @property
    def rigid_part(self):
        """(l_Psi, r_Psi) at unit time factor; nonzero only for fields centered on the body."""
        return np.array(self.rigid[:2], dtype=float), float(self.rigid[2])

    def _stream_derivatives(self, x):
        c = np.asarray(self.center, dtype=float)
        d = x - c
        rho = np.hypot(d[:, 0], d[:, 1])
        s, s1, s2 = _step_profile((self.outer - rho) / (self.outer - self.inner))
        width = self.outer - self.inner
        chi, chi1, chi2 = s, -s1 / width, s2 / width**2
        safe = np.where(rho > 0, rho, 1.0)
        e = d / safe[:, None]
        eye = np.eye(2)
        chi_grad = chi1[:, None] * e
        outer_e = e[:, :, None] * e[:, None, :]
        chi_hess = (chi2[:, None, None] * outer_e
                    + (chi1 / safe)[:, None, None] * (eye[None] - outer_e))
        l1, l2, rr = self.rigid
        g = -l1 * x[:, 1] + l2 * x[:, 0] + 0.5 * rr * np.sum(x * x, axis=-1) + self.amplitude
        g_grad = np.stack([l2 + rr * x[:, 0], -l1 + rr * x[:, 1]], axis=-1)
        g_hess = rr * eye
        grad = chi_grad * g[:, None] + chi[:, None] * g_grad
        hess = (chi_hess * g[:, None, None]
                + chi_grad[:, :, None] * g_grad[:, None, :]
                + g_grad[:, :, None] * chi_grad[:, None, :]
                + chi[:, None, None] * g_hess[None])
        return grad, hess

    def value(self, x, t=0.0):
        grad, _ = self._stream_derivatives(np.atleast_2d(x))
        return self.tau(t) * perp(grad)

    def jacobian(self, x, t=0.0):
        """``[m, a, b] = d_b Psi_a``."""
        _, hess = self._stream_derivatives(np.atleast_2d(x))
        out = np.empty_like(hess)
        out[:, 0, :] = -hess[:, 1, :]
        out[:, 1, :] = hess[:, 0, :]
        return self.tau(t) * out


def check_test_field(tf, geometry, samples=256, tol=1e-8):
    """Rigidity on the body and zero divergence, at sample points."""
    rng = np.random.default_rng(12345)
    phi = rng.uniform(0, 2 * np.pi, samples)
    frac = rng.uniform(0.0, 0.999, samples)
    inside = (frac * geometry.radius_at(phi))[:, None] * np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    lp, rp = tf.rigid_part
    mismatch = tf.value(inside) - (lp + rp * perp(inside))
    if np.max(np.abs(mismatch)) > tol * max(1.0, np.max(np.abs(lp)), abs(rp) * geometry.max_radius):
        raise InvalidTestFunction(f"test field {tf.name!r} is not rigid on the body")
    c = np.asarray(tf.center, dtype=float)
    rad = rng.uniform(0.0, tf.outer * 1.1, samples)
    ang = rng.uniform(0, 2 * np.pi, samples)
    pts = c + rad[:, None] * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    jac = tf.jacobian(pts)
    div = jac[:, 0, 0] + jac[:, 1, 1]
    scale = max(1.0, float(np.max(np.abs(jac))))
    if np.max(np.abs(div)) > tol * scale:
        raise InvalidTestFunction(f"test field {tf.name!r} is not divergence free")


def builtin_test_fields(geometry, vorticity_radius, vorticity_center=None):
    """Rigid motions cut off beyond the vorticity, plus a pulsed bump in the fluid.

    * ``translate-x``, ``translate-y``, ``rotate``: rigid on the disk of
      radius ``1.25 R_body``, zero beyond ``max(2.5 R_body, 1.5 R_omega)``;
    * ``bump``: ``cos(t) grad^perp`` of a smooth bump of radius ``R_b`` centred
      at ``vorticity_center`` when that point is clear of the body, else at
      ``(2.5 R_body, 0)``; ``R_b`` keeps it a distance ``R_b/2`` off the body.
    """
    rb = geometry.max_radius
    inner = 1.25 * rb
    outer = max(2.5 * rb, 1.5 * vorticity_radius)
    fields = [
        TestField("translate-x", (0.0, 0.0), inner, outer, rigid=(1.0, 0.0, 0.0)),
        TestField("translate-y", (0.0, 0.0), inner, outer, rigid=(0.0, 1.0, 0.0)),
        TestField("rotate", (0.0, 0.0), inner, outer, rigid=(0.0, 0.0, 1.0)),
    ]
    c = None if vorticity_center is None else np.asarray(vorticity_center, dtype=float)
    if c is None or np.hypot(*c) < 1.5 * rb:
        c = np.array([2.5 * rb, 0.0])
    radius = (np.hypot(*c) - rb) / 1.5
    fields.append(TestField("bump", (float(c[0]), float(c[1])), 0.0, radius, amplitude=radius, time_mode="cos"))
    for tf in fields:
        check_test_field(tf, geometry)
    return fields


@dataclass(frozen=True)
class Snapshot:
    t: float
    ell: np.ndarray
    r: float
    field: object


def _test_quadrature(tables, tf, spacing, vorticity_radius):
    geo = tables.geometry
    c = np.asarray(tf.center, dtype=float)
    if np.hypot(*c) == 0.0:
        # cover the disk |x| <= outer with the body-fitted log-polar rule
        outer = tf.outer * geo.a0 / geo.min_radius * 1.0001
        q = fluid_quadrature(geo, outer, spacing, reference_radius=max(vorticity_radius, geo.max_radius))
        return q.points, q.weights
    if np.hypot(*c) - tf.outer <= geo.max_radius:
        raise InvalidTestFunction(f"test field {tf.name!r} overlaps the body")
    n_r = max(8, int(np.ceil(tf.outer / spacing / 8.0)) * 8)
    x, w = np.polynomial.legendre.leggauss(n_r)
    rad = 0.5 * tf.outer * (x + 1.0)
    wr = 0.5 * tf.outer * w * rad
    n_phi = max(16, int(np.ceil(2 * np.pi * tf.outer / spacing)))
    phi = (np.arange(n_phi) + 0.5) * (2 * np.pi / n_phi)
    pts = c + rad[:, None, None] * np.stack([np.cos(phi), np.sin(phi)], axis=-1)[None]
    wts = wr[:, None] * np.full(n_phi, 2 * np.pi / n_phi)[None]
    return pts.reshape(-1, 2), wts.ravel()


class WeakResidual:
    """Running residual of the weak formulation for one test field.

    Snapshots are added in time order; ``value`` is the residual over
    ``[t_0, t_last]`` with the trapezoid rule in time.
    """

    def __init__(self, tables, tf, convention="rho-weighted", spacing=0.05, vorticity_radius=0.0):
        if convention not in CONVENTIONS:
            raise InvalidArgument(f"convention must be one of {CONVENTIONS}")
        check_test_field(tf, tables.geometry)
        self.tables = tables
        self.tf = tf
        self.convention = convention
        self.points, self.weights = _test_quadrature(tables, tf, spacing, vorticity_radius)
        self._psi = tf.value(self.points)
        self._jac = tf.jacobian(self.points)
        self.times = []
        self.pairs = []
        self.fluxes = []
        self._integral = 0.0

    def terms(self, snap):
        """((Psi, v)_rho at unit time factor, space integrand of the time integral)."""
        geo = self.tables.geometry
        lp, rp = self.tf.rigid_part
        ell = np.asarray(snap.ell, dtype=float)
        flow = flow_field(self.tables, snap.field, ell, snap.r)
        v = flow.velocity_raw(self.points)
        w = v - flow.rigid_velocity(self.points)
        wts = self.weights
        pair = geo.mass * float(ell @ lp) + geo.inertia * snap.r * rp + float(wts @ np.sum(v * self._psi, axis=-1))
        conv = float(wts @ np.einsum("ma,mb,mab->m", v, w, self._jac))
        cor = snap.r * float(wts @ np.sum(perp(v) * self._psi, axis=-1))
        if self.convention == "rho-weighted":
            cor += snap.r * geo.mass * float(perp(ell) @ lp)
        tf = self.tf
        # integrand of  int (d_t Psi, v)_rho  enters with a minus sign
        return pair, tf.tau(snap.t) * (cor - conv) - tf.dtau(snap.t) * pair

    def add(self, snap):
        pair, rate = self.terms(snap)
        if self.times:
            self._integral += 0.5 * (snap.t - self.times[-1]) * (rate + self.fluxes[-1])
        self.times.append(float(snap.t))
        self.pairs.append(pair)
        self.fluxes.append(rate)
        return self.value

    @property
    def value(self):
        if not self.times:
            return 0.0
        tf = self.tf
        return (tf.tau(self.times[-1]) * self.pairs[-1] - tf.tau(self.times[0]) * self.pairs[0]
                + self._integral)


def weak_residual(tables, snapshots, tf, convention="rho-weighted", spacing=None):
    """Residual of the weak formulation over the snapshot times (trapezoid rule)."""
    if len(snapshots) < 2:
        raise InvalidArgument("at least two snapshots are required")
    if spacing is None:
        spacing = 0.5 * snapshots[0].field.delta
    vrad = max(support_radius(s.field) for s in snapshots)
    acc = WeakResidual(tables, tf, convention, spacing, vrad)
    for snap in snapshots:
        acc.add(snap)
    return acc.value


# ---- one record ----------------------------------------------------------

def record(tables, vfield, ell, r, t, acceleration=(np.zeros(2), 0.0), energy_radius=None,
           energy_spacing=None, bin_h=None, blasius=None):
    """All instantaneous diagnostics for one snapshot."""
    (l1, lp), (b1, bp) = vorticity_norms(vfield, vfield.p, bin_h)
    bl = blasius if blasius is not None else blasius_integrals(tables)
    ell = np.asarray(ell, dtype=float)
    return DiagnosticsRecord(
        t=float(t),
        E=energy_like(tables, vfield, ell, r, energy_radius, energy_spacing),
        L1=l1, Lp=lp, L1_binned=b1, Lp_binned=bp,
        gamma=vfield.gamma, alpha=vfield.alpha, beta=vfield.beta,
        kelvin=kelvin_circulation(tables, vfield, ell, r),
        blasius_n=bl.normal, blasius_x=bl.moment,
        ell_dot=float(np.hypot(*acceleration[0])), r_dot=abs(float(acceleration[1])),
    )
