"""Gridded initial vorticity: presets, mollification and particle sampling.

Fields live on uniform square-cell grids and are sampled at cell centers.
The mollifier is the bump ``exp(-1/(1 - |x|^2))`` on the unit disk, scaled to
``eta_n(x) = n^2 eta(n x)`` and renormalized so that its discrete integral is
exactly one.  Convolution is a direct sum over the bump's footprint.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from .biot_savart import VortexField
from .errors import InvalidArgument, ResolutionError

log = logging.getLogger(__name__)

MIN_CELLS_ACROSS = 4


@dataclass(frozen=True)
class Grid:
    """``shape = (nx, ny)`` cells of side ``h``; ``origin`` is the lower-left corner."""

    origin: tuple
    h: float
    shape: tuple

    @property
    def cell_area(self):
        return self.h * self.h

    def axes(self):
        x = self.origin[0] + (np.arange(self.shape[0]) + 0.5) * self.h
        y = self.origin[1] + (np.arange(self.shape[1]) + 0.5) * self.h
        return x, y

    def centers(self):
        x, y = self.axes()
        xx, yy = np.meshgrid(x, y, indexing="ij")
        return np.stack([xx, yy], axis=-1)

    def pad(self, cells):
        return Grid((self.origin[0] - cells * self.h, self.origin[1] - cells * self.h),
                    self.h, (self.shape[0] + 2 * cells, self.shape[1] + 2 * cells))

    @classmethod
    def covering(cls, lower, upper, h):
        """Smallest grid of spacing ``h`` covering the box, aligned to multiples of ``h``."""
        i0 = math.floor(lower[0] / h)
        j0 = math.floor(lower[1] / h)
        i1 = math.ceil(upper[0] / h)
        j1 = math.ceil(upper[1] / h)
        return cls((i0 * h, j0 * h), float(h), (i1 - i0, j1 - j0))


@dataclass(frozen=True, eq=False)
class GridField:
    grid: Grid
    values: np.ndarray = field(repr=False)
    discarded_mass: float = 0.0

    def integral(self):
        return math.fsum(self.values.ravel()) * self.grid.cell_area

    def lp_norm(self, p):
        a = self.grid.cell_area
        if p == 1:
            return float(np.sum(np.abs(self.values)) * a)
        return float((np.sum(np.abs(self.values) ** p) * a) ** (1.0 / p))

    def support_radius(self, center=(0.0, 0.0)):
        """Largest distance from ``center`` to a cell center with nonzero value."""
        pts = self.grid.centers()[self.values != 0]
        if len(pts) == 0:
            return 0.0
        return float(np.max(np.hypot(pts[:, 0] - center[0], pts[:, 1] - center[1])))

    def embed(self, grid):
        """Zero-extension onto a larger grid with the same spacing and alignment."""
        if not np.isclose(grid.h, self.grid.h):
            raise InvalidArgument("grids have different spacings")
        di = round((self.grid.origin[0] - grid.origin[0]) / grid.h)
        dj = round((self.grid.origin[1] - grid.origin[1]) / grid.h)
        nx, ny = self.grid.shape
        if di < 0 or dj < 0 or di + nx > grid.shape[0] or dj + ny > grid.shape[1]:
            raise InvalidArgument("target grid does not contain the field's grid")
        out = np.zeros(grid.shape)
        out[di:di + nx, dj:dj + ny] = self.values
        return GridField(grid, out, self.discarded_mass)


def common_grid(a, b):
    """Smallest aligned grid holding both fields."""
    h = a.grid.h
    lo = np.minimum(a.grid.origin, b.grid.origin)
    hi_a = np.asarray(a.grid.origin) + h * np.asarray(a.grid.shape)
    hi_b = np.asarray(b.grid.origin) + h * np.asarray(b.grid.shape)
    hi = np.maximum(hi_a, hi_b)
    shape = tuple(int(round(v)) for v in (hi - lo) / h)
    return Grid(tuple(float(v) for v in lo), h, shape)


def difference(a, b):
    """``a - b`` on their common grid."""
    grid = common_grid(a, b)
    return GridField(grid, a.embed(grid).values - b.embed(grid).values)


# ---- presets --------------------------------------------------------------

def _smooth_profile(rho):
    """C-infinity radial profile on [0, 1): Gaussian-like core, compact support."""
    out = np.zeros_like(rho)
    inside = rho < 1.0
    r2 = rho[inside] ** 2
    out[inside] = np.exp(-4.0 * r2 / (1.0 - r2))
    return out


def preset_vorticity(kind, center, radius, amplitude, h):
    """Sample a named initial vorticity on a grid of spacing ``h``.

    * ``gaussian-patch``: ``A exp(-4 s^2 / (1 - s^2))`` with ``s = |x - c| / R``,
      smooth with compact support;
    * ``uniform-patch``: ``A`` times the indicator of the disk of radius ``R``;
    * ``vortex-pair``: two gaussian patches of radius ``R`` and amplitudes
      ``+A`` and ``-A`` centered at ``c + (0, 1.25 R)`` and ``c - (0, 1.25 R)``.
    """
    center = np.asarray(center, dtype=float)
    if kind == "vortex-pair":
        offset = np.array([0.0, 1.25 * radius])
        lower = center - offset - radius
        upper = center + offset + radius
    else:
        lower = center - radius
        upper = center + radius
    grid = Grid.covering(lower, upper, h)
    pts = grid.centers()

    def dist(c):
        return np.hypot(pts[..., 0] - c[0], pts[..., 1] - c[1]) / radius

    if kind == "gaussian-patch":
        values = amplitude * _smooth_profile(dist(center))
    elif kind == "uniform-patch":
        values = np.where(dist(center) < 1.0, float(amplitude), 0.0)
    elif kind == "vortex-pair":
        values = amplitude * (_smooth_profile(dist(center + offset))
                              - _smooth_profile(dist(center - offset)))
    else:
        raise InvalidArgument(f"unknown vorticity preset {kind!r}")
    return GridField(grid, values)


# ---- mollification ----------------------------------------------------------

def bump_kernel(n, h):
    """Discrete ``eta_n`` on the cell offsets of a grid of spacing ``h``, unit discrete mass."""
    if n < 1:
        raise InvalidArgument("mollification level n must be a positive integer")
    if 2.0 / (n * h) < MIN_CELLS_ACROSS:
        raise ResolutionError(
            f"grid spacing {h:g} leaves {2.0 / (n * h):.2f} cells across the support of eta_{n}; "
            f"at least {MIN_CELLS_ACROSS} are needed"
        )
    half = int(math.ceil(1.0 / (n * h)))
    off = np.arange(-half, half + 1) * h
    xx, yy = np.meshgrid(off, off, indexing="ij")
    s2 = (n * n) * (xx**2 + yy**2)
    ker = np.zeros_like(s2)
    inside = s2 < 1.0
    ker[inside] = np.exp(-1.0 / (1.0 - s2[inside]))
    ker /= ker.sum() * h * h
    return ker, half


def fluid_cell_mask(grid, geometry):
    """True for cells lying entirely outside the body (center and corners tested)."""
    c = grid.centers()
    h = grid.h
    mask = ~geometry.contains(c)
    for dx in (-0.5, 0.5):
        for dy in (-0.5, 0.5):
            mask &= ~geometry.contains(c + np.array([dx * h, dy * h]))
    return mask


def restrict_to_fluid(gfield, geometry):
    mask = fluid_cell_mask(gfield.grid, geometry)
    removed = float(np.sum(gfield.values[~mask]) * gfield.grid.cell_area)
    values = np.where(mask, gfield.values, 0.0)
    if removed != 0.0:
        log.info("restriction to fluid cells discarded vorticity mass %.6e", removed)
    return GridField(gfield.grid, values, gfield.discarded_mass + removed)


def mollify(omega0, n, geometry=None):
    """Convolve the zero-extension of ``omega0`` with ``eta_n``.

    The output grid is the input grid padded by the bump's half-width, so the
    support grows by at most ``1/n``.  With a geometry the result is restricted
    to fluid cells; the discarded mass is logged and recorded on the field.
    """
    ker, half = bump_kernel(int(n), omega0.grid.h)
    values = scipy.signal.convolve2d(omega0.values, ker, mode="full") * omega0.grid.cell_area
    out = GridField(omega0.grid.pad(half), values)
    if geometry is not None:
        out = restrict_to_fluid(out, geometry)
    return out


def corrected_beta(beta, omega_mollified, omega_original):
    """``beta + int (omega^n - omega)``, keeping the circulation ``gamma`` fixed."""
    return float(beta) + difference(omega_mollified, omega_original).integral()


def sample_particles(omega, delta, geometry=None, gamma=0.0, p=2.0):
    """One particle per nonzero fluid cell, at the cell center, carrying ``omega * h^2``."""
    values = omega.values
    keep = values != 0.0
    if geometry is not None:
        keep &= fluid_cell_mask(omega.grid, geometry)
    pts = omega.grid.centers()[keep]
    w = values[keep]
    return VortexField(pts, w, np.full(len(w), omega.grid.cell_area), delta, gamma, p)
