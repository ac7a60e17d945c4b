"""Experiment drivers: convergence study and deforming-sphere runs."""
import csv
import logging
import os
import time

import numpy as np

from .. import fem
from ..mesh import make_mesh
from ..stepping import RunConfig, run
from .cases import DeformCase, ManufacturedCase
from .norms import ErrorRecorder, ErrorRow, ErrorTable
from .vtk import write_snapshot

log = logging.getLogger(__name__)

TIMESERIES_FIELDS = ["t", "area", "rel_area_change", "kinetic", "dissipation", "exchange",
                     "power", "balance_residual", "max_un"]


def run_manufactured(level, dt, config=None, case=None):
    """One manufactured-solution run; returns an :class:`ErrorRow`."""
    case = case or ManufacturedCase()
    config = (config or RunConfig(level=level, dt=dt, mu=case.mu)).with_(
        level=level, dt=dt, mu=case.mu, T=case.T)
    rec = ErrorRecorder(case)
    t0 = time.perf_counter()
    run(case.surface, config, u0=case.initial_velocity, forcing=case.forcing, callback=rec)
    wall = time.perf_counter() - t0
    h1, l2, p, lt = rec.norms()
    row = ErrorRow(level, make_mesh(level).h, float(np.mean(rec.dofs)), h1, l2, p,
                   float(max(rec.max_un)), lt, wall)
    log.info("level %d: H1 %.3e L2 %.3e p %.3e (%.0fs)", level, h1, l2, p, wall)
    return row, rec


def run_convergence(levels, dt0=0.05, config=None, case=None, out=None):
    """Manufactured runs with ``dt = dt0 * 2^-(level - levels[0])``."""
    levels = list(levels)
    if levels != sorted(levels):
        raise ValueError("levels must be ascending")
    table = ErrorTable()
    recorders = {}
    for lev in levels:
        dt = dt0 * 2.0 ** -(lev - levels[0])
        row, rec = run_manufactured(lev, dt, config, case)
        table.add(row)
        recorders[lev] = rec
    if out:
        os.makedirs(out, exist_ok=True)
        table.write_csv(os.path.join(out, "errors.csv"))
    return table, recorders


def correlation_div_constraint(state):
    """Correlation of ``div_G u_h`` with ``-w_N kappa`` over the discrete surface."""
    ps = state.patches
    fr = ps.frames
    _, grad = fem.surface_field(state.velocity, ps, state.basis)
    div = np.einsum("qij,qji->q", grad, fr.P)
    target = -fr.w_N * fr.kappa
    w = ps.weights
    a = div - np.sum(w * div) / np.sum(w)
    b = target - np.sum(w * target) / np.sum(w)
    den = np.sqrt(np.sum(w * a * a) * np.sum(w * b * b))
    return float(np.sum(w * a * b) / den) if den > 0 else float("nan")


def run_deform(case, config, out=None, vtk=None, snapshot_times=(0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0)):
    """Deforming-sphere run; returns the time series (list of dicts) and final state."""
    if not isinstance(case, DeformCase):
        raise TypeError("run_deform needs a DeformCase")
    config = config.with_(mu=case.mu)
    series = []
    snaps = {int(round(t / config.dt)) for t in snapshot_times if t <= config.T + 1e-12}
    area0 = []

    def record(state):
        area = state.patches.area
        if not area0:
            area0.append(area)
        if state.diagnostics and state.step > 0:
            d = dict(state.diagnostics[-1])
        else:
            from ..stepping import energy_report, normal_component_norm
            d = energy_report(state)
            d["max_un"] = normal_component_norm(state)
        d["t"] = state.t
        d["area"] = area
        d["rel_area_change"] = (area - area0[0]) / area0[0]
        series.append({k: d.get(k, float("nan")) for k in TIMESERIES_FIELDS})
        if vtk and state.step in snaps:
            write_snapshot(os.path.join(vtk, f"{case.name}_{state.step:05d}.vtk"), state)

    state = run(case.surface, config, u0=None, forcing=case.forcing, callback=record)
    if out:
        os.makedirs(out, exist_ok=True)
        write_timeseries(os.path.join(out, "timeseries.csv"), series)
    return series, state


def write_timeseries(path, series):
    with open(path, "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=TIMESERIES_FIELDS)
        wr.writeheader()
        for r in series:
            wr.writerow(r)
