"""Figures written next to the CSV outputs."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def trajectory_figure(rows, path):
    """Body motion, energy and conservation columns against time."""
    t = np.array([r["t"] for r in rows])
    fig, axes = plt.subplots(2, 2, figsize=(10, 7))
    ax = axes[0, 0]
    ax.plot([r["h1"] for r in rows], [r["h2"] for r in rows], "-o", ms=2)
    ax.set_xlabel("h1")
    ax.set_ylabel("h2")
    ax.set_title("body centre (lab frame)")
    ax.set_aspect("equal", adjustable="datalim")
    ax = axes[0, 1]
    for key in ("l1", "l2", "r"):
        ax.plot(t, [r[key] for r in rows], label=key)
    ax.set_xlabel("t")
    ax.legend()
    ax.set_title("body velocities")
    ax = axes[1, 0]
    e = np.array([r["E"] for r in rows])
    ax.plot(t, e)
    ax.set_xlabel("t")
    ax.set_ylabel("E")
    ax.set_title("energy-like quantity")
    ax = axes[1, 1]
    for key in ("L1", "Lp", "Lp_binned", "gamma", "alpha"):
        v = np.array([r[key] for r in rows])
        ref = v[0] if v[0] != 0 else 1.0
        ax.plot(t, v / ref - 1.0 if v[0] != 0 else v, label=key)
    ax.set_xlabel("t")
    ax.set_title("relative change of conserved columns")
    ax.legend(fontsize=8)
    return _save(fig, path)


def particles_figure(geometry, positions, strengths, path, title=""):
    fig, ax = plt.subplots(figsize=(6, 6))
    phi = np.linspace(0, 2 * np.pi, 400)
    curve = geometry.curve(phi)
    ax.fill(curve[:, 0], curve[:, 1], color="0.8")
    ax.plot(curve[:, 0], curve[:, 1], "k-", lw=1)
    if len(strengths):
        lim = float(np.max(np.abs(strengths))) or 1.0
        sc = ax.scatter(positions[:, 0], positions[:, 1], c=strengths, s=4, cmap="RdBu_r", vmin=-lim, vmax=lim)
        fig.colorbar(sc, ax=ax, shrink=0.8, label="strength")
    ax.set_aspect("equal")
    ax.set_title(title)
    return _save(fig, path)


def regularize_figure(grids, levels, path):
    """Mollified fields side by side."""
    n = len(grids)
    fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 3.2), squeeze=False)
    lim = max(float(np.max(np.abs(g.values))) for g in grids) or 1.0
    for ax, g, level in zip(axes[0], grids, levels):
        x0, y0 = g.grid.origin
        nx, ny = g.grid.shape
        extent = (x0, x0 + nx * g.grid.h, y0, y0 + ny * g.grid.h)
        ax.imshow(g.values.T, origin="lower", extent=extent, cmap="RdBu_r", vmin=-lim, vmax=lim)
        ax.set_title("original" if level == 0 else f"n = {level}")
        ax.set_aspect("equal")
    return _save(fig, path)


def convergence_figure(levels, omega_diff, pair_diff, accel, path):
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
    axes[0].loglog(levels, omega_diff, "o-")
    axes[0].set_xlabel("n")
    axes[0].set_title("||omega0^n - omega0||_Lp")
    if pair_diff:
        axes[1].semilogy([f"{a}-{b}" for a, b, _ in pair_diff], [d for _, _, d in pair_diff], "o-")
    axes[1].set_title("max_t ||v^n - v^m||_L2(loc)")
    axes[2].plot(levels, accel, "o-")
    axes[2].set_xscale("log", base=2)
    axes[2].set_xlabel("n")
    axes[2].set_title("sup_t (|l'| + |r'|)")
    return _save(fig, path)
