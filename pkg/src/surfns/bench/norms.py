"""Space-time error norms for the manufactured solution and the error table."""
import csv
from dataclasses import dataclass, field
from math import log2

import numpy as np

from .. import fem


def surface_errors(state, case):
    """Squared spatial errors on the current discrete surface.

    Returns a dict with ``l2`` (``|u - u_h|^2``), ``grad`` (``|(grad u -
    grad u_h) P|^2``), ``p`` (``|p - mean_h(p) - p_h|^2``, or ``nan`` when no
    pressure is available) and ``l2_tangential`` (``|P (u - u_h)|^2``).
    """
    ps = state.patches
    fr = ps.frames
    w = ps.weights
    if state.basis is None:
        state.basis = fem.surface_basis(state.mesh, ps)
    uh, guh = fem.surface_field(state.velocity, ps, state.basis)
    t = state.t
    u = case.velocity(ps.points, t)
    gu = case.velocity_gradient(ps.points, t)
    e = u - uh
    eg = np.einsum("qij,qjk->qik", gu - guh, fr.P)
    et = fem.project_tangential(e, fr.n)
    out = {
        "l2": float(np.sum(w * np.sum(e * e, axis=1))),
        "l2_tangential": float(np.sum(w * np.sum(et * et, axis=1))),
        "grad": float(np.sum(w * np.einsum("qij,qij->q", eg, eg))),
        "p": float("nan"),
    }
    if state.pressure is not None:
        ph = np.einsum("qc,qc->q", state.basis.lam,
                       state.pressure.nodal(ps.tets)[ps.owner])
        p = case.pressure(ps.points, t)
        p = p - np.sum(w * p) / np.sum(w)
        ep = p - ph
        out["p"] = float(np.sum(w * ep * ep))
    return out


def time_norm(times, squared):
    """``(int |e(t)|^2 dt)^(1/2)`` by the composite trapezoid rule."""
    times = np.asarray(times, dtype=float)
    sq = np.asarray(squared, dtype=float)
    if len(times) < 2:
        return float(np.sqrt(sq[0])) if len(sq) else 0.0
    return float(np.sqrt(np.sum(0.5 * np.diff(times) * (sq[1:] + sq[:-1]))))


@dataclass
class ErrorRecorder:
    """Accumulates per-step errors of a manufactured run (used as callback)."""

    case: object
    times: list = field(default_factory=list)
    records: list = field(default_factory=list)
    dofs: list = field(default_factory=list)
    max_un: list = field(default_factory=list)

    def __call__(self, state):
        self.times.append(state.t)
        self.records.append(surface_errors(state, self.case))
        if state.step > 0:
            self.dofs.append(state.dofmap.size)
        from ..stepping import normal_component_norm
        self.max_un.append(normal_component_norm(state))

    def norms(self):
        """Time-integrated ``(H1, L2, pressure, L2 tangential)`` errors.

        The initial pressure error is unavailable (no discrete pressure at
        ``t_0``) and is extrapolated by the value at ``t_1``.
        """
        l2 = [r["l2"] for r in self.records]
        h1 = [r["l2"] + r["grad"] for r in self.records]
        lt = [r["l2_tangential"] for r in self.records]
        p = [r["p"] for r in self.records]
        if len(p) > 1 and np.isnan(p[0]):
            p[0] = p[1]
        return (time_norm(self.times, h1), time_norm(self.times, l2),
                time_norm(self.times, p), time_norm(self.times, lt))


@dataclass
class ErrorRow:
    level: int
    h: float
    dofs: float
    err_h1: float
    err_l2: float
    err_p: float
    max_un: float = float("nan")
    err_l2_tangential: float = float("nan")
    wall_time: float = float("nan")


@dataclass
class ErrorTable:
    rows: list = field(default_factory=list)

    def add(self, row):
        self.rows.append(row)
        self.rows.sort(key=lambda r: r.level)

    @staticmethod
    def _order(a, b):
        if a > 0 and b > 0:
            return log2(a / b)
        return float("nan")

    def orders(self, attr):
        """``log2(e_l / e_{l+1})`` for consecutive rows (first entry ``nan``)."""
        vals = [getattr(r, attr) for r in self.rows]
        return [float("nan")] + [self._order(a, b) for a, b in zip(vals, vals[1:])]

    def as_dicts(self):
        o1, o2, op = self.orders("err_h1"), self.orders("err_l2"), self.orders("err_p")
        out = []
        for r, a, b, c in zip(self.rows, o1, o2, op):
            out.append({"level": r.level, "h": r.h, "dofs": r.dofs, "err_h1": r.err_h1,
                        "err_l2": r.err_l2, "err_p": r.err_p, "order_h1": a,
                        "order_l2": b, "order_p": c})
        return out

    def write_csv(self, path):
        rows = self.as_dicts()
        fields = ["level", "h", "dofs", "err_h1", "err_l2", "err_p",
                  "order_h1", "order_l2", "order_p"]
        with open(path, "w", newline="") as fh:
            wr = csv.DictWriter(fh, fieldnames=fields)
            wr.writeheader()
            for r in rows:
                wr.writerow(r)

    def format(self):
        lines = [f"{'level':>5} {'h':>9} {'dofs':>9} {'|u-uh|_1':>10} {'ord':>5} "
                 f"{'|u-uh|_L2':>10} {'ord':>5} {'|p-ph|':>10} {'ord':>5}"]
        for d in self.as_dicts():
            lines.append(
                f"{d['level']:>5d} {d['h']:9.3e} {d['dofs']:9.3e} {d['err_h1']:10.3e} "
                f"{d['order_h1']:5.2f} {d['err_l2']:10.3e} {d['order_l2']:5.2f} "
                f"{d['err_p']:10.3e} {d['order_p']:5.2f}")
        return "\n".join(lines)
