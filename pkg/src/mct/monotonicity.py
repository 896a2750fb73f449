"""Truncated backward heat kernel and the perturbed monotonicity audit."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSnapshots, PoleInPast
from .grid import PeriodicGrid, minimal_image
from .measures import MeasureField, density_ratio, energy_and_discrepancy
from .potential import DoubleWell
from .transport import hat_p


def smootherstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)


def eta(r):
    """Radial cutoff: 1 on [0, 1/4], 0 on [1/2, inf), C^2 quintic in between."""
    return 1.0 - smootherstep((np.asarray(r, dtype=float) - 0.25) / 0.25)


@dataclass(frozen=True)
class KernelSpec:
    y: tuple
    s: float

    @property
    def dim(self) -> int:
        return len(self.y)


def kernel_eval(k: KernelSpec, x, t: float) -> np.ndarray:
    """rho~_(y,s)(x, t) at points ``x`` of shape ``(dim, ...)`` with minimal-image distance."""
    tau = k.s - t
    if tau <= 0.0:
        raise PoleInPast(f"t = {t} is not before the pole time s = {k.s}")
    x = np.asarray(x, dtype=float)
    r2 = sum(minimal_image(x[i] - k.y[i]) ** 2 for i in range(k.dim))
    r = np.sqrt(r2)
    return (4.0 * math.pi * tau) ** (-(k.dim - 1) / 2.0) * np.exp(-r2 / (4.0 * tau)) * eta(r)


def kernel_on_grid(grid: PeriodicGrid, k: KernelSpec, t: float) -> np.ndarray:
    return kernel_eval(k, grid.coords(), t)


def monotonicity_functional(m: MeasureField, k: KernelSpec, t: float) -> float:
    return m.weighted(kernel_on_grid(m.grid, k, t))


@dataclass
class AuditRecord:
    pole: KernelSpec
    t0: float
    t1: float
    rows: list
    delta_m: float
    discrepancy_term: float
    transport_term: float
    tail_term: float
    tolerance: float
    passed: bool
    p_hat: float | None = None
    ratios: dict = field(default_factory=dict)


def _trapezoid_cumulative(ts, vals):
    out = [0.0]
    for i in range(1, len(ts)):
        out.append(out[-1] + 0.5 * (vals[i] + vals[i - 1]) * (ts[i] - ts[i - 1]))
    return out


def monotonicity_audit(snapshots, well: DoubleWell, k: KernelSpec, t0: float, t1: float,
                       u_eps=None, tail_constant: float = 1.0, tolerance: float = 2e-3,
                       density: float | None = None, p: float | None = None, q: float | None = None) -> AuditRecord:
    """Check Delta M <= int int rho~ |u|^2/2 dmu dt + tail + tolerance over [t0, t1].

    The discrepancy integral int (2(s-t))^-1 int |xi| rho~ dx dt is recorded
    alongside but is not part of the verdict.
    """
    if not t0 < t1 < k.s:
        raise PoleInPast(f"need t0 < t1 < s, got {t0}, {t1}, {k.s}")
    tol_t = 1e-12 * max(1.0, abs(t1))
    sel = sorted((s for s in snapshots if t0 - tol_t <= s.t <= t1 + tol_t), key=lambda s: s.t)
    if len(sel) < 4:
        raise InsufficientSnapshots(f"{len(sel)} snapshots in [{t0}, {t1}], need at least 4")
    ts, vals, disc, trans, dens = [], [], [], [], []
    for snap in sel:
        m = energy_and_discrepancy(snap.phi, well)
        rho = kernel_on_grid(m.grid, k, snap.t)
        ts.append(snap.t)
        vals.append(m.weighted(rho))
        disc.append(m.grid.integrate(np.abs(m.xi) * rho) / (2.0 * (k.s - snap.t)))
        u = None if u_eps is None or u_eps.is_zero else u_eps.at(snap.t)
        trans.append(0.0 if u is None else 0.5 * m.weighted(rho * (u ** 2).sum(axis=0)))
        if density is None:
            dens.append(density_ratio(m).d_of_t)
    d_big = density if density is not None else max(dens)
    c_disc = _trapezoid_cumulative(ts, disc)
    c_trans = _trapezoid_cumulative(ts, trans)
    decay = math.exp(-1.0 / (128.0 * (k.s - ts[0])))
    rows = []
    for i, t in enumerate(ts):
        tail = tail_constant * decay * (t - ts[0]) * d_big
        dm = vals[i] - vals[0]
        rows.append({
            "pole": tuple(k.y), "s": k.s, "t": t, "value": vals[i],
            "delta_from_prev": vals[i] - vals[i - 1] if i else 0.0,
            "discrepancy_term": c_disc[i], "transport_term": c_trans[i], "tail_term": tail,
            "pass": dm <= c_trans[i] + tail + tolerance,
        })
    dm = vals[-1] - vals[0]
    tail = rows[-1]["tail_term"]
    excess = dm - c_trans[-1] - tail
    ratios = {name: (excess / val if val > 0 else math.nan)
              for name, val in (("discrepancy", c_disc[-1]), ("transport", c_trans[-1]), ("tail", tail))}
    ph = hat_p(p, q, k.dim) if p is not None and q is not None else None
    return AuditRecord(k, ts[0], ts[-1], rows, dm, c_disc[-1], c_trans[-1], tail, tolerance,
                       all(r["pass"] for r in rows), ph, ratios)
