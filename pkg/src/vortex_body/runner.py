"""Orchestration of the four CLI modes and their output files.

``run`` writes into the output directory:

* ``trajectory.csv``: one row per snapshot with columns ``t, h1, h2, theta,
  l1, l2, r, l_dot, r_dot, E, E_tail, L1, Lp, L1_binned, Lp_binned, gamma,
  alpha, kelvin, penetrations`` and one ``weak_<name>`` column per test field
  (the residual accumulated from ``t = 0``);
* ``particles_XXXX.csv``: ``x1, x2, Gamma`` per particle (body frame) for
  snapshot ``XXXX``;
* ``run.json``: configuration echo, tolerances, penetration count, timing;
* ``trajectory.png`` and ``particles_first.png`` / ``particles_last.png``.
"""

import csv
import json
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics as diag
from . import plotting
from .biot_savart import VortexField, flow_field
from .dynamics import SimState, Stepper, body_force, volume_force
from .errors import InvariantBreach, StepRejected
from .geometry import RigidState
from .potentials import assemble
from .regularization import (corrected_beta, difference, mollify, preset_vorticity,
                             sample_particles)

log = logging.getLogger(__name__)

KELVIN_TOLERANCE = 1e-6
NORM_TOLERANCE = 1e-12


def make_tables(cfg, geometry):
    return assemble(geometry, analytic=geometry.is_disk and cfg.geometry.closed_form)


def initial_vorticity(cfg):
    i = cfg.initial
    return preset_vorticity(i.preset, i.center, i.radius, i.amplitude, i.grid_spacing)


@dataclass
class InitialData:
    field: VortexField
    omega: object  # GridField actually sampled
    omega_original: object
    level: int
    beta_original: float
    beta_corrected: float
    discarded_mass: float

    def differences(self, p):
        d = difference(self.omega, self.omega_original)
        return d.lp_norm(1), d.lp_norm(p)


def initial_data(cfg, geometry, level=None):
    """Particles for mollification level ``level`` (0: the raw preset)."""
    i = cfg.initial
    level = i.mollify if level is None else int(level)
    original = initial_vorticity(cfg)
    omega = mollify(original, level, geometry) if level > 0 else original
    beta = i.gamma + original.integral()
    vf = sample_particles(omega, cfg.numerics.delta, geometry, gamma=i.gamma, p=i.p)
    return InitialData(vf, omega, original, level, beta, corrected_beta(beta, omega, original),
                       omega.discarded_mass)


def _vorticity_center(vfield):
    w = np.abs(vfield.strengths)
    if len(vfield) == 0 or w.sum() == 0:
        return None
    return (w @ vfield.positions) / w.sum()


def probe_grid(cfg, geometry):
    m = cfg.mollification
    c = np.asarray(m.probe_center, dtype=float)
    s = np.linspace(-m.probe_half_width, m.probe_half_width, m.probe_points)
    xx, yy = np.meshgrid(c[0] + s, c[1] + s, indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=-1)
    keep = geometry.signed_radial_gap(pts) > 0.02 * geometry.max_radius
    return pts[keep], (s[1] - s[0]) ** 2


@dataclass
class SimResult:
    rows: list
    snapshots: list
    penetrations: int
    sup_acceleration: float
    probe_times: list = field(default_factory=list)
    probe_velocities: list = field(default_factory=list)
    energy_tail: float = 0.0
    elapsed: float = 0.0
    final_state: object = None


def _dump_failure(out_dir, state, exc):
    if out_dir is None:
        return
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "failure.json"), "w", encoding="utf-8") as fh:
        json.dump({
            "error": type(exc).__name__,
            "message": str(exc),
            "t": state.t,
            "step": state.step_count,
            "h": state.rigid.h.tolist(),
            "theta": state.rigid.theta,
            "ell": state.rigid.ell.tolist(),
            "r": state.rigid.r,
            "penetrations": state.penetrations,
            "n_particles": len(state.field),
        }, fh, indent=2)


def simulate(cfg, tables, vfield, full_diagnostics=True, probe=None, out_dir=None, write_particles=False):
    """Integrate from the initial state; diagnostics at every snapshot."""
    num = cfg.numerics
    geo = tables.geometry
    i = cfg.initial
    stepper = Stepper(tables, frozen=num.frozen_body, cfl=num.cfl)
    ell0 = (0.0, 0.0) if num.frozen_body else i.ell0
    r0 = 0.0 if num.frozen_body else i.r0
    state = SimState(RigidState.initial(ell0, r0), vfield)
    n_steps = max(1, int(round(num.T / num.dt)))
    stride = max(1, int(round(num.snapshot_interval / num.dt)))
    bin_h = cfg.diagnostics.bin_spacing or num.delta
    p = vfield.p
    norms0 = diag.particle_norms(vfield, p)
    # floor of 1 so a vorticity-free, circulation-free run is judged on an absolute scale
    circ_scale = max(abs(vfield.gamma), float(np.sum(np.abs(vfield.strengths))), 1.0)
    blasius = diag.blasius_integrals(tables)

    trackers = {}
    if full_diagnostics and cfg.diagnostics.weak_residuals:
        vrad = diag.support_radius(vfield)
        for tf in diag.builtin_test_fields(geo, max(vrad, geo.max_radius), _vorticity_center(vfield)):
            trackers[tf.name] = diag.WeakResidual(tables, tf, cfg.diagnostics.weak_convention,
                                                  0.5 * num.delta, vrad)

    result = SimResult([], [], 0, 0.0)
    energy_radius = num.energy_radius or None
    t_start = time.perf_counter()

    def snapshot(state, k):
        g = state.rigid
        acc = stepper.rates(state)
        if not np.all(np.isfinite(state.field.positions)):
            raise InvariantBreach("non-finite particle positions")
        (l1, lp), (b1, bp) = diag.vorticity_norms(state.field, p, bin_h)
        for name, now, ref in (("L1", l1, norms0[0]), ("Lp", lp, norms0[1])):
            if abs(now - ref) > NORM_TOLERANCE * max(ref, 1e-300):
                raise InvariantBreach(f"particle {name} norm changed from {ref!r} to {now!r}")
        kelvin = diag.kelvin_circulation(tables, state.field, g.ell, g.r)
        if abs(kelvin - vfield.gamma) > KELVIN_TOLERANCE * circ_scale:
            raise InvariantBreach(f"boundary circulation {kelvin:.12g} differs from gamma {vfield.gamma:.12g}")
        row = {
            "t": g.t, "h1": g.h[0], "h2": g.h[1], "theta": g.theta,
            "l1": g.ell[0], "l2": g.ell[1], "r": g.r,
            "l_dot": float(np.hypot(*acc.ell)), "r_dot": abs(acc.r),
        }
        if full_diagnostics:
            ep = diag.energy_parts(tables, state.field, g.ell, g.r, energy_radius)
            row["E"] = ep.total
            row["E_tail"] = ep.tail
            result.energy_tail = max(result.energy_tail, ep.tail)
        row.update({"L1": l1, "Lp": lp, "L1_binned": b1, "Lp_binned": bp,
                    "gamma": state.field.gamma, "alpha": state.field.alpha,
                    "kelvin": kelvin, "penetrations": state.penetrations})
        snap = diag.Snapshot(g.t, g.ell.copy(), g.r, state.field)
        for name, tr in trackers.items():
            row[f"weak_{name}"] = tr.add(snap)
        if full_diagnostics:
            row["blasius_n1"], row["blasius_n2"] = (float(v) for v in blasius.normal)
            row["blasius_x"] = blasius.moment
        result.rows.append(row)
        result.snapshots.append(snap)
        if probe is not None:
            flow = flow_field(tables, state.field, g.ell, g.r)
            result.probe_times.append(g.t)
            result.probe_velocities.append(flow.velocity_raw(probe))
        if write_particles and out_dir is not None:
            write_particle_file(os.path.join(out_dir, f"particles_{k:04d}.csv"), state.field)
        result.sup_acceleration = max(result.sup_acceleration, row["l_dot"] + row["r_dot"])

    k = 0
    try:
        snapshot(state, k)
        for n in range(1, n_steps + 1):
            state = stepper.step(state, num.dt)
            a_l, a_r = stepper.last_acceleration
            result.sup_acceleration = max(result.sup_acceleration, float(np.hypot(*a_l)) + abs(a_r))
            if not np.all(np.isfinite(state.field.positions)) or not np.all(np.isfinite(state.rigid.ell)):
                raise InvariantBreach("non-finite state after a step")
            if n % stride == 0 or n == n_steps:
                k += 1
                snapshot(state, k)
    except (InvariantBreach, StepRejected) as exc:
        _dump_failure(out_dir, state, exc)
        if isinstance(exc, StepRejected):
            raise InvariantBreach(f"{exc} (suggested dt {exc.suggested_dt:.3g})") from exc
        raise
    result.penetrations = state.penetrations
    result.elapsed = time.perf_counter() - t_start
    result.final_state = state
    return result


def write_particle_file(path, vfield):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "Gamma"])
        for (x1, x2), g in zip(vfield.positions, vfield.strengths):
            w.writerow([repr(float(x1)), repr(float(x2)), repr(float(g))])


def write_rows(path, rows):
    if not rows:
        return
    keys = list(rows[0].keys())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()})


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def _out_dir(cfg, out_dir):
    path = out_dir or cfg.output_dir
    os.makedirs(path, exist_ok=True)
    return path


def _matrix(a):
    return [[float(v) for v in row] for row in np.asarray(a)]


# ---- modes -----------------------------------------------------------------

def run(cfg, out_dir=None):
    out = _out_dir(cfg, out_dir)
    t0 = time.perf_counter()
    geo = cfg.build_geometry()
    tables = make_tables(cfg, geo)
    init = initial_data(cfg, geo)
    vf = init.field
    log.info("run: %d particles, alpha=%.6g, beta=%.6g", len(vf), vf.alpha, vf.beta)
    res = simulate(cfg, tables, vf, full_diagnostics=True, out_dir=out, write_particles=True)
    write_rows(os.path.join(out, "trajectory.csv"), res.rows)
    plotting.trajectory_figure(res.rows, os.path.join(out, "trajectory.png"))
    plotting.particles_figure(geo, vf.positions, vf.strengths, os.path.join(out, "particles_first.png"), "t = 0")
    last = res.final_state.field
    plotting.particles_figure(geo, last.positions, last.strengths, os.path.join(out, "particles_last.png"),
                              f"t = {res.rows[-1]['t']:.3g}")
    info = {
        "config": cfg.to_dict(),
        "tolerances": {"kelvin_relative": KELVIN_TOLERANCE, "norm_relative": NORM_TOLERANCE,
                       "cfl": cfg.numerics.cfl},
        "n_particles": len(vf),
        "alpha": vf.alpha,
        "beta": vf.beta,
        "beta_corrected": init.beta_corrected,
        "discarded_mass": init.discarded_mass,
        "penetrations": res.penetrations,
        "max_energy_tail": res.energy_tail,
        "sup_acceleration": res.sup_acceleration,
        "M": _matrix(tables.M),
        "timing_seconds": {"simulate": res.elapsed, "total": time.perf_counter() - t0},
    }
    with open(os.path.join(out, "run.json"), "w", encoding="utf-8") as fh:
        json.dump(info, fh, indent=2)
    return res


def diagnose_report(cfg):
    geo = cfg.build_geometry()
    tables = make_tables(cfg, geo)
    init = initial_data(cfg, geo)
    vf = init.field
    i = cfg.initial
    bl = diag.blasius_integrals(tables)
    flow = flow_field(tables, vf, i.ell0, i.r0)
    scale = float(np.hypot(*i.ell0)) + abs(i.r0) + float(np.sum(np.abs(vf.strengths)))
    radius = cfg.numerics.quadrature_radius or 8.0 * max(diag.support_radius(vf), geo.max_radius)
    f_boundary = body_force(flow, vf.positions, vf.strengths)
    f_volume = volume_force(tables, vf, i.ell0, i.r0, radius, 0.5 * cfg.numerics.delta)
    return {
        "geometry": {"kind": geo.kind, "n_panels": geo.n_panels, "area": geo.area,
                     "mass": geo.mass, "inertia": geo.inertia, "closed_form": tables.analytic},
        "M1": _matrix(tables.M1),
        "M2": _matrix(tables.M2),
        "M2_layer": _matrix(tables.M2_panel),
        "M": _matrix(tables.M),
        "M2_asymmetry": tables.M2_asymmetry,
        "solver_residuals": tables.residuals,
        "H_circulation": tables.h_circulation,
        "blasius": {"normal": [float(v) for v in bl.normal], "moment": bl.moment, "scale": bl.scale,
                    "normal_contour": [float(v) for v in bl.normal_complex], "moment_contour": bl.moment_complex},
        "initial_state": {"n_particles": len(vf), "alpha": vf.alpha, "gamma": vf.gamma, "beta": vf.beta,
                          "boundary_residual": flow.boundary_residual(),
                          "boundary_residual_scale": scale,
                          "circulation": flow.boundary_circulation()},
        "force_boundary_form": [float(v) for v in f_boundary],
        "force_volume_form": [float(v) for v in f_volume],
        "volume_radius": radius,
    }


def _format_report(rep, indent=0):
    lines = []
    pad = "  " * indent
    for key, value in rep.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.extend(_format_report(value, indent + 1))
        elif isinstance(value, list) and value and isinstance(value[0], list):
            lines.append(f"{pad}{key}:")
            for row in value:
                lines.append(pad + "  [" + ", ".join(f"{v: .10e}" for v in row) + "]")
        elif isinstance(value, list):
            lines.append(f"{pad}{key}: [" + ", ".join(f"{v:.6e}" if isinstance(v, float) else str(v)
                                                     for v in value) + "]")
        elif isinstance(value, float):
            lines.append(f"{pad}{key}: {value:.10e}")
        else:
            lines.append(f"{pad}{key}: {value}")
    return lines


def diagnose(cfg, out_dir=None):
    out = _out_dir(cfg, out_dir)
    rep = diagnose_report(cfg)
    text = "\n".join(_format_report(rep)) + "\n"
    with open(os.path.join(out, "diagnose.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    with open(os.path.join(out, "diagnose.json"), "w", encoding="utf-8") as fh:
        json.dump(rep, fh, indent=2)
    return rep, text


def regularize(cfg, out_dir=None):
    """Mollified sequence: one gridded file per level plus a summary table."""
    out = _out_dir(cfg, out_dir)
    geo = cfg.build_geometry()
    tables = make_tables(cfg, geo)
    i = cfg.initial
    original = initial_vorticity(cfg)
    beta = i.gamma + original.integral()
    write_grid(os.path.join(out, "omega_original.csv"), original)
    rows, grids = [], [original]
    for level in cfg.mollification.levels:
        om = mollify(original, level, geo)
        d = difference(om, original)
        vf = sample_particles(om, cfg.numerics.delta, geo, gamma=i.gamma, p=i.p)
        circ = flow_field(tables, vf, i.ell0, i.r0).boundary_circulation()
        beta_n = corrected_beta(beta, om, original)
        rows.append({"level": level, "L1_diff": d.lp_norm(1), "Lp_diff": d.lp_norm(i.p),
                     "alpha_n": vf.alpha, "beta_n": beta_n, "beta_shift": abs(beta_n - beta),
                     "discarded_mass": om.discarded_mass, "circulation": circ,
                     "n_particles": len(vf)})
        write_grid(os.path.join(out, f"omega_n{level:03d}.csv"), om)
        grids.append(om)
    write_rows(os.path.join(out, "regularize.csv"), rows)
    plotting.regularize_figure(grids, [0, *cfg.mollification.levels], os.path.join(out, "regularize.png"))
    return rows


def write_grid(path, gfield):
    """Nonzero cells as ``i, j, x1, x2, omega``; the header row carries the grid."""
    g = gfield.grid
    x, y = g.axes()
    ii, jj = np.nonzero(gfield.values)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"# origin={g.origin[0]!r},{g.origin[1]!r} h={g.h!r} shape={g.shape[0]}x{g.shape[1]}"])
        w.writerow(["i", "j", "x1", "x2", "omega"])
        for a, b in zip(ii, jj):
            w.writerow([int(a), int(b), repr(float(x[a])), repr(float(y[b])), repr(float(gfield.values[a, b]))])


@dataclass
class ConvergenceReport:
    levels: list
    rows: list
    pairs: list


def converge(cfg, out_dir=None):
    """Identical numerics at every mollification level; Cauchy differences on a probe grid."""
    out = _out_dir(cfg, out_dir)
    geo = cfg.build_geometry()
    tables = make_tables(cfg, geo)
    probe, cell = probe_grid(cfg, geo)
    levels = list(cfg.mollification.levels)
    rows, velocities, times = [], [], None
    for level in levels:
        init = initial_data(cfg, geo, level)
        l1d, lpd = init.differences(cfg.initial.p)
        res = simulate(cfg, tables, init.field, full_diagnostics=False, probe=probe, out_dir=out)
        log.info("level %d: %d particles, sup accel %.4g, %.1fs", level, len(init.field),
                 res.sup_acceleration, res.elapsed)
        rows.append({"level": level, "n_particles": len(init.field), "L1_diff": l1d, "Lp_diff": lpd,
                     "beta_n": init.beta_corrected, "sup_acceleration": res.sup_acceleration,
                     "penetrations": res.penetrations, "seconds": res.elapsed})
        velocities.append(np.array(res.probe_velocities))
        times = res.probe_times
    pairs = []
    for k in range(len(levels) - 1):
        dv = velocities[k + 1] - velocities[k]
        per_time = np.sqrt(np.sum(dv * dv, axis=(1, 2)) * cell)
        pairs.append((levels[k], levels[k + 1], float(np.max(per_time))))
    write_rows(os.path.join(out, "converge.csv"), rows)
    write_rows(os.path.join(out, "converge_pairs.csv"),
               [{"level_a": a, "level_b": b, "max_t_L2_diff": d} for a, b, d in pairs])
    with open(os.path.join(out, "converge.json"), "w", encoding="utf-8") as fh:
        json.dump({"config": cfg.to_dict(), "rows": rows, "times": times,
                   "pairs": [{"level_a": a, "level_b": b, "max_t_L2_diff": d} for a, b, d in pairs]},
                  fh, indent=2)
    plotting.convergence_figure(levels, [r["Lp_diff"] for r in rows], pairs,
                                [r["sup_acceleration"] for r in rows], os.path.join(out, "converge.png"))
    return ConvergenceReport(levels, rows, pairs)
