"""Low-level summation kernels.

Source-layer fields are trapezoid sums over a fine boundary grid written as
Cauchy integrals: in complex notation the velocity of a source layer with
density ``q`` is

    u1 - i u2 = -(1/2pi) oint g(zeta) / (zeta - z) dzeta,   g = q conj(tau).

For ``z`` outside the body, ``oint p(zeta)/(zeta - z) dzeta = 0`` for every
polynomial ``p``, so subtracting the first-order Taylor polynomial of ``g``
about the grid point nearest to ``z`` changes nothing analytically but removes
the near-singularity from the discrete sum.  At a grid point the summand of
that point tends to zero, which yields the fluid-side trace.

The blob sum is the algebraic vortex-blob kernel.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _cauchy_sum(targets, zeta, weights, g, dg, out):
    m = targets.shape[0]
    k = zeta.shape[0]
    s_count = g.shape[0]
    scale = -1.0 / (2.0 * np.pi)
    for i in range(m):
        z = targets[i]
        best = np.inf
        j0 = 0
        for j in range(k):
            d = zeta[j] - z
            r2 = d.real * d.real + d.imag * d.imag
            if r2 < best:
                best = r2
                j0 = j
        z0 = zeta[j0]
        for s in range(s_count):
            g0 = g[s, j0]
            g1 = dg[s, j0]
            acc = 0j
            for j in range(k):
                d = zeta[j] - z
                if d == 0j:
                    continue
                acc += (g[s, j] - g0 - g1 * (zeta[j] - z0)) * weights[j] / d
            val = acc * scale
            out[s, i, 0] = val.real
            out[s, i, 1] = -val.imag


def cauchy_velocity(targets, zeta, weights, g, dg):
    """Source-layer velocity at ``targets`` (M, 2) for each row of ``g``.

    ``zeta`` are the grid points, ``weights`` the complex weights
    ``zeta'(t) dt``, ``g`` and ``dg`` (k, K) the layer data and its
    derivative with respect to ``zeta``.  Returns (k, M, 2).
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    tz = np.ascontiguousarray(targets[:, 0] + 1j * targets[:, 1])
    out = np.zeros((g.shape[0], tz.shape[0], 2))
    if tz.shape[0]:
        _cauchy_sum(tz, zeta, weights, np.ascontiguousarray(g), np.ascontiguousarray(dg), out)
    return out


@njit(cache=True)
def _log_sum(tx, ty, px, py, w, out):
    m = tx.shape[0]
    k = px.shape[0]
    s_count = w.shape[0]
    scale = 1.0 / (4.0 * np.pi)
    for i in range(m):
        for j in range(k):
            dx = tx[i] - px[j]
            dy = ty[i] - py[j]
            lg = np.log(dx * dx + dy * dy)
            for s in range(s_count):
                out[s, i] += w[s, j] * lg * scale


def log_potential(targets, points, weighted_density):
    """(1/2pi) sum_j w_j log|x - y_j| for each row of ``weighted_density``."""
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    out = np.zeros((weighted_density.shape[0], targets.shape[0]))
    _log_sum(np.ascontiguousarray(targets[:, 0]), np.ascontiguousarray(targets[:, 1]),
             np.ascontiguousarray(points[:, 0]), np.ascontiguousarray(points[:, 1]),
             np.ascontiguousarray(weighted_density), out)
    return out


@njit(cache=True, fastmath=True)
def _blob_sum(tx, ty, sx, sy, gam, core2, out):
    m = tx.shape[0]
    n = sx.shape[0]
    inv = 1.0 / (2.0 * np.pi)
    for i in range(m):
        ux = 0.0
        uy = 0.0
        xi = tx[i]
        yi = ty[i]
        for j in range(n):
            dx = xi - sx[j]
            dy = yi - sy[j]
            r2 = dx * dx + dy * dy + core2[j]
            if r2 > 0.0:
                f = gam[j] / r2
                ux -= f * dy
                uy += f * dx
        out[i, 0] = ux * inv
        out[i, 1] = uy * inv


def blob_velocity(targets, sources, strengths, core2):
    """Sum of algebraic blobs  G (x - y)^perp / (2 pi (|x - y|^2 + d^2)).

    ``core2`` is the squared core radius, scalar or one value per source.
    A target coinciding with a source gets no contribution from it.
    """
    targets = np.ascontiguousarray(np.atleast_2d(targets), dtype=float)
    sources = np.ascontiguousarray(np.atleast_2d(sources), dtype=float)
    strengths = np.ascontiguousarray(strengths, dtype=float)
    core2 = np.ascontiguousarray(np.broadcast_to(np.asarray(core2, dtype=float), strengths.shape))
    out = np.zeros((targets.shape[0], 2))
    if sources.shape[0] == 0 or targets.shape[0] == 0:
        return out
    _blob_sum(targets[:, 0].copy(), targets[:, 1].copy(), sources[:, 0].copy(),
              sources[:, 1].copy(), strengths, core2, out)
    return out
