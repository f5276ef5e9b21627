"""Rigid body geometry, frame transforms and boundary quadrature.

The body is a star-shaped curve ``x(phi) = R(phi) (cos phi, sin phi)`` with
``R(phi) = a0 + sum_k (a_k cos k phi + b_k sin k phi)`` traversed
counterclockwise.  The boundary is cut into ``n_panels`` pieces at equally
spaced parameter values.  Each panel carries a quadrature node: the curve
point at its mid-parameter together with the exact unit tangent, the exact
normal and the weight ``|x'(phi)| dphi``.  Summing over nodes is the
trapezoid rule on a smooth periodic integrand.  The chords joining
consecutive endpoints are kept as a flat-panel view of the same boundary.

Normals point out of the fluid, i.e. into the body: ``n = tau_perp`` with
``tau`` the counterclockwise tangent, so ``n(x) = -x/|x|`` on a centered
circle.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidArgument, InvalidGeometry


def perp(v):
    """Rotate vectors by +90 degrees: (x1, x2) -> (-x2, x1)."""
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True, eq=False)
class BodyGeometry:
    kind: str
    a0: float
    cos_coeffs: tuple
    sin_coeffs: tuple
    n_panels: int
    mass: float
    inertia: float
    endpoints: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    tangents: np.ndarray = field(repr=False)
    normals: np.ndarray = field(repr=False)
    ds: np.ndarray = field(repr=False)

    # ---- shape -------------------------------------------------------
    def radius_at(self, phi):
        return _radius(self.a0, self.cos_coeffs, self.sin_coeffs, phi)

    def radius_derivative(self, phi):
        return _radius_derivative(self.cos_coeffs, self.sin_coeffs, phi)

    def curve(self, phi):
        phi = np.asarray(phi, dtype=float)
        rad = self.radius_at(phi)
        return np.stack([rad * np.cos(phi), rad * np.sin(phi)], axis=-1)

    def frame(self, phi):
        """Curve points, unit tangents and speed |x'(phi)| at parameters ``phi``."""
        phi = np.asarray(phi, dtype=float)
        rad = self.radius_at(phi)
        drad = self.radius_derivative(phi)
        c, s = np.cos(phi), np.sin(phi)
        deriv = np.stack([drad * c - rad * s, drad * s + rad * c], axis=-1)
        speed = np.hypot(deriv[..., 0], deriv[..., 1])
        return np.stack([rad * c, rad * s], axis=-1), deriv / speed[..., None], speed

    def curvature(self, phi):
        """Signed curvature, positive where the body is convex."""
        rad = self.radius_at(phi)
        d1 = self.radius_derivative(phi)
        d2 = _radius_second_derivative(self.cos_coeffs, self.sin_coeffs, phi)
        return (rad**2 + 2 * d1**2 - rad * d2) / (rad**2 + d1**2) ** 1.5

    @property
    def is_disk(self):
        return self.kind == "disk"

    @cached_property
    def area(self):
        # 1/2 int R^2 dphi, exact for a trigonometric polynomial
        a = np.asarray(self.cos_coeffs, dtype=float)
        b = np.asarray(self.sin_coeffs, dtype=float)
        return np.pi * self.a0**2 + 0.5 * np.pi * float(np.sum(a**2 + b**2))

    @cached_property
    def max_radius(self):
        phi = np.linspace(0.0, 2 * np.pi, 4096, endpoint=False)
        return float(np.max(self.radius_at(phi)))

    @cached_property
    def min_radius(self):
        phi = np.linspace(0.0, 2 * np.pi, 4096, endpoint=False)
        return float(np.min(self.radius_at(phi)))

    @property
    def density(self):
        return self.mass / self.area

    def _solid_moments(self, n=4096):
        phi = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        rad = self.radius_at(phi)
        w = 2 * np.pi / n
        first = w * np.array([np.sum(rad**3 * np.cos(phi)), np.sum(rad**3 * np.sin(phi))]) / 3.0
        second = w * np.sum(rad**4) / 4.0
        return first, second

    @cached_property
    def centroid(self):
        first, _ = self._solid_moments()
        return first / self.area

    def uniform_density_inertia(self):
        """Moment of inertia about the origin for constant density m/|S0|."""
        _, second = self._solid_moments()
        return self.density * second

    def contains(self, x):
        """True where ``x`` lies strictly inside the body."""
        x = np.asarray(x, dtype=float)
        rho = np.hypot(x[..., 0], x[..., 1])
        phi = np.arctan2(x[..., 1], x[..., 0])
        return rho < self.radius_at(phi)

    def signed_radial_gap(self, x):
        """|x| - R(arg x); negative inside the body."""
        x = np.asarray(x, dtype=float)
        rho = np.hypot(x[..., 0], x[..., 1])
        phi = np.arctan2(x[..., 1], x[..., 0])
        return rho - self.radius_at(phi)

    def project_outside(self, x, margin=1e-9):
        """Radially push points lying inside the body onto the boundary."""
        x = np.array(x, dtype=float)
        rho = np.hypot(x[..., 0], x[..., 1])
        phi = np.arctan2(x[..., 1], x[..., 0])
        target = self.radius_at(phi) * (1.0 + margin)
        inside = rho < target
        if np.any(inside):
            scale = target[inside] / np.maximum(rho[inside], 1e-300)
            x[inside] = x[inside] * scale[:, None]
        return x, inside

    # ---- flat panels --------------------------------------------------
    @cached_property
    def panel_start(self):
        return self.endpoints

    @cached_property
    def panel_end(self):
        return np.roll(self.endpoints, -1, axis=0)

    @cached_property
    def panel_mid(self):
        return 0.5 * (self.panel_start + self.panel_end)

    @cached_property
    def panel_length(self):
        d = self.panel_end - self.panel_start
        return np.hypot(d[:, 0], d[:, 1])

    @cached_property
    def panel_tangent(self):
        return (self.panel_end - self.panel_start) / self.panel_length[:, None]

    @cached_property
    def panel_normal(self):
        return perp(self.panel_tangent)

    @property
    def perimeter(self):
        return float(np.sum(self.ds))


def _radius(a0, cos_coeffs, sin_coeffs, phi):
    phi = np.asarray(phi, dtype=float)
    out = np.full(phi.shape, float(a0))
    for k, (a, b) in enumerate(zip(cos_coeffs, sin_coeffs), start=1):
        out = out + a * np.cos(k * phi) + b * np.sin(k * phi)
    return out


def _radius_derivative(cos_coeffs, sin_coeffs, phi):
    phi = np.asarray(phi, dtype=float)
    out = np.zeros(phi.shape)
    for k, (a, b) in enumerate(zip(cos_coeffs, sin_coeffs), start=1):
        out = out - k * a * np.sin(k * phi) + k * b * np.cos(k * phi)
    return out


def _radius_second_derivative(cos_coeffs, sin_coeffs, phi):
    phi = np.asarray(phi, dtype=float)
    out = np.zeros(phi.shape)
    for k, (a, b) in enumerate(zip(cos_coeffs, sin_coeffs), start=1):
        out = out - k * k * (a * np.cos(k * phi) + b * np.sin(k * phi))
    return out


def _build(kind, a0, cos_coeffs, sin_coeffs, n_panels, mass, inertia):
    if n_panels < 4:
        raise InvalidArgument("n_panels must be at least 4")
    if not mass > 0:
        raise InvalidArgument("mass must be positive")
    if not inertia > 0:
        raise InvalidArgument("inertia must be positive")
    cos_coeffs = tuple(float(c) for c in cos_coeffs)
    sin_coeffs = tuple(float(c) for c in sin_coeffs)

    probe = np.linspace(0.0, 2 * np.pi, max(4096, 16 * n_panels), endpoint=False)
    if np.min(_radius(a0, cos_coeffs, sin_coeffs, probe)) <= 0.0:
        raise InvalidGeometry("radius function must be strictly positive")

    dphi = 2 * np.pi / n_panels
    phi_end = dphi * np.arange(n_panels)
    phi_mid = phi_end + 0.5 * dphi
    rad = _radius(a0, cos_coeffs, sin_coeffs, phi_mid)
    drad = _radius_derivative(cos_coeffs, sin_coeffs, phi_mid)
    c, s = np.cos(phi_mid), np.sin(phi_mid)
    deriv = np.stack([drad * c - rad * s, drad * s + rad * c], axis=-1)
    speed = np.hypot(deriv[:, 0], deriv[:, 1])
    tangents = deriv / speed[:, None]
    rad_end = _radius(a0, cos_coeffs, sin_coeffs, phi_end)
    endpoints = np.stack([rad_end * np.cos(phi_end), rad_end * np.sin(phi_end)], axis=-1)
    nodes = np.stack([rad * c, rad * s], axis=-1)

    arrays = dict(endpoints=endpoints, nodes=nodes, tangents=tangents,
                  normals=perp(tangents), ds=speed * dphi)
    for arr in arrays.values():
        arr.setflags(write=False)
    geo = BodyGeometry(kind=kind, a0=float(a0), cos_coeffs=cos_coeffs,
                       sin_coeffs=sin_coeffs, n_panels=int(n_panels),
                       mass=float(mass), inertia=float(inertia), **arrays)

    if np.linalg.norm(geo.centroid) > 1e-8 * geo.max_radius:
        raise InvalidGeometry(
            f"center of mass {geo.centroid} is not at the origin; "
            "remove the Fourier modes that shift it"
        )
    return geo


def make_disk(radius, n_panels, mass, inertia):
    if not radius > 0:
        raise InvalidArgument("radius must be positive")
    return _build("disk", radius, (), (), n_panels, mass, inertia)


def make_fourier_body(coeffs, n_panels, mass, inertia):
    """Star-shaped body from ``[(a0, 0), (a1, b1), (a2, b2), ...]``.

    The first pair holds the mean radius (its sine entry is ignored).  A
    series with no higher modes gives back the disk discretization, but the
    body is still treated as a general shape by the potential solvers.
    """
    coeffs = [tuple(c) for c in coeffs]
    if not coeffs:
        raise InvalidGeometry("at least the mean radius a0 is required")
    a0 = coeffs[0][0]
    cos_c = [c[0] for c in coeffs[1:]]
    sin_c = [c[1] for c in coeffs[1:]]
    return _build("fourier", a0, cos_c, sin_c, n_panels, mass, inertia)


def boundary_integral(geometry, f):
    """Quadrature of ``f`` over the body boundary.

    ``f`` is either an array of node values (shape ``(N,)`` or ``(N, 2)``) or
    a callable evaluated on the ``(N, 2)`` node array.
    """
    values = f(geometry.nodes) if callable(f) else f
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        return float(np.dot(values, geometry.ds))
    return geometry.ds @ values


@dataclass(frozen=True)
class CurveSamples:
    points: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray
    weights: np.ndarray


def curve_samples(geometry, count, offset=0.5):
    """``count`` equally spaced samples of the exact curve, at ``(k + offset) 2pi/count``."""
    phi = (np.arange(count) + offset) * (2 * np.pi / count)
    points, tangents, speed = geometry.frame(phi)
    return CurveSamples(points, tangents, perp(tangents), speed * (2 * np.pi / count))


@dataclass
class RigidState:
    h: np.ndarray
    theta: float
    ell: np.ndarray
    r: float
    t: float = 0.0

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float).reshape(2)
        self.ell = np.asarray(self.ell, dtype=float).reshape(2)
        self.theta = float(self.theta)
        self.r = float(self.r)
        self.t = float(self.t)

    @classmethod
    def initial(cls, ell0=(0.0, 0.0), r0=0.0):
        return cls(h=np.zeros(2), theta=0.0, ell=np.asarray(ell0, dtype=float), r=r0, t=0.0)

    @property
    def Q(self):
        return rotation(self.theta)

    def copy(self):
        return RigidState(self.h.copy(), self.theta, self.ell.copy(), self.r, self.t)


def body_to_lab(state, x):
    x = np.asarray(x, dtype=float)
    return state.h + x @ state.Q.T


def lab_to_body(state, y):
    y = np.asarray(y, dtype=float)
    return (y - state.h) @ state.Q


@dataclass(frozen=True)
class FluidQuadrature:
    """Points and weights covering the fluid out to ``s_max`` times the body radius."""

    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    s_max: float
    outer_radius: float


def fluid_quadrature(geometry, outer_radius, spacing, order=8, reference_radius=None):
    """Log-polar rule on ``x = s R(phi) e(phi)``, ``1 <= s <= outer/a0``.

    With ``s = e^u`` the area element is ``s^2 R^2 du dphi``.  The rule is
    the trapezoid rule in ``phi`` and Gauss-Legendre panels in ``u``, sized
    so that the physical spacing is about ``spacing`` out to
    ``reference_radius`` (default: the body radius) and grows linearly beyond.
    """
    if not outer_radius > geometry.max_radius:
        raise InvalidArgument("outer radius must exceed the body radius")
    if not spacing > 0:
        raise InvalidArgument("spacing must be positive")
    s_max = outer_radius / geometry.a0
    u_max = np.log(s_max)
    ref = geometry.max_radius if reference_radius is None else max(reference_radius, geometry.max_radius)
    du = spacing / ref
    n_pan = max(1, int(np.ceil(u_max / (du * order))))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, u_max, n_pan + 1)
    half = 0.5 * np.diff(edges)
    u = (edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    wu = (half[:, None] * w[None, :]).ravel()
    n_phi = int(np.ceil(2 * np.pi * ref / spacing / 8.0)) * 8
    phi = (np.arange(n_phi) + 0.5) * (2 * np.pi / n_phi)
    rad = geometry.radius_at(phi)
    e = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    s = np.exp(u)
    pts = s[:, None, None] * rad[None, :, None] * e[None, :, :]
    wts = (s[:, None] ** 2) * (rad[None, :] ** 2) * wu[:, None] * (2 * np.pi / n_phi)
    return FluidQuadrature(pts.reshape(-1, 2), wts.ravel(), float(s_max), float(outer_radius))
