"""Scenario orchestration, convergence sweeps and report emission."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, resolve_epsilon
from .errors import ConfigInvalid, MCTError, NoInterface
from .fielddump import write_field
from .grid import PeriodicGrid, minimal_image
from .initial import Geometry, build_initial_field
from .interface import (density_estimate, export_mesh_csv, extract_interface, fit_points,
                        interface_filename)
from .measures import (bv_projection, brakke_residual, density_ratio, energy_and_discrepancy,
                       positive_discrepancy_bound)
from .monotonicity import KernelSpec, monotonicity_audit
from .potential import standing_wave, well_by_name
from .solver import FlowState, SolverConfig, resolve_dt, run, step
from .transport import TransportSpec, load_sampled, mollify

MEASURE_COLUMNS = ["t", "mu_total", "D", "sup_xi_plus", "xi_l1", "tv_w", "brakke_residual"]
CHECK_COLUMNS = ["name", "value", "threshold", "passed", "binding", "detail"]
SWEEP_COLUMNS = ["epsilon", "resolution", "interface_error", "energy_error", "xi_l1", "D",
                 "order_interface", "order_energy", "order_xi"]


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    binding: bool = True
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else ("FAIL" if self.binding else "WARN")
        kind = "" if self.binding else " (advisory)"
        extra = f"  {self.detail}" if self.detail else ""
        return f"[{tag}] {self.name}{kind}: value {self.value:.6g} vs threshold {self.threshold:.6g}{extra}"


@dataclass
class DiagnosticsReport:
    name: str
    epsilon: float
    resolution: int
    measures: list = field(default_factory=list)
    monotonicity: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)
    output_dir: Path | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.binding)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def summary(self) -> str:
        lines = [f"scenario {self.name}: eps = {self.epsilon:.6g}, resolution {self.resolution}"]
        lines += [c.line() for c in self.checks]
        lines.append("verdict: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines) + "\n"


# -- building blocks ---------------------------------------------------------

def _as_tuple(v, n=None):
    vals = tuple(float(x) for x in np.atleast_1d(v))
    if n is not None and len(vals) != n:
        raise ConfigInvalid([f"expected {n} components, got {len(vals)}"])
    return vals


def build_geometry(cfg: ScenarioConfig) -> Geometry:
    kind = cfg["geometry.kind"]
    p = cfg.prefixed("geometry.")
    p.pop("kind", None)
    p.pop("r_trunc", None)
    dim = cfg["grid.dim"]
    try:
        if kind in ("circle", "sphere"):
            return getattr(Geometry, kind)(_as_tuple(p.get("center", [0.5] * dim), dim), float(p.get("r0", 0.25)))
        if kind == "two_circles":
            return Geometry.two_circles(_as_tuple(p["c1"], dim), float(p["r1"]), _as_tuple(p["c2"], dim), float(p["r2"]))
        if kind == "annulus":
            return Geometry.annulus(_as_tuple(p.get("center", [0.5] * dim), dim), float(p["r_in"]), float(p["r_out"]))
        if kind == "graph":
            if "heights_file" in p:
                heights = np.loadtxt(str(p["heights_file"]), delimiter=",", ndmin=1)
            else:
                heights = _as_tuple(p["heights"])
            return Geometry.graph(heights, float(p.get("width", 0.5)))
    except KeyError as exc:
        raise ConfigInvalid([f"geometry.{exc.args[0]}: required for kind {kind}"]) from exc
    except (OSError, ValueError) as exc:
        raise ConfigInvalid([f"geometry: {exc}"]) from exc
    raise ConfigInvalid([f"geometry.kind: unknown kind {kind!r}"])


def build_transport(cfg: ScenarioConfig) -> TransportSpec:
    kind = cfg["transport.kind"]
    p, q = cfg["transport.p"], cfg["transport.q"]
    if kind == "sampled":
        if not cfg["transport.files"]:
            raise ConfigInvalid(["transport.files: required for sampled transport"])
        return load_sampled(cfg["transport.files"], p, q)
    params = {}
    for k, v in cfg.prefixed("transport.params.").items():
        params[k] = v
    try:
        spec = TransportSpec(kind, params, p, q)
        spec.validate(cfg["grid.dim"])
    except ValueError as exc:
        raise ConfigInvalid([f"transport: {exc}"]) from exc
    return spec


def _r_trunc(cfg):
    v = cfg.prefixed("geometry.").get("r_trunc")
    if v is None or (isinstance(v, str) and v.lower() == "auto"):
        return None
    return float(v)


def _geometric_times(t0, t1, s, n):
    """``n`` times in [t0, t1] refining geometrically toward the pole time ``s``."""
    g0, g1 = s - t0, s - t1
    return [s - g0 * (g1 / g0) ** (k / (n - 1)) for k in range(n)]


def _poles(cfg, geometry, velocity):
    spec = cfg["diagnostics.poles"]
    if spec == "none" or not cfg["checks.audit"]:
        return []
    if spec != "auto":
        return [KernelSpec(tuple(y), s) for y, s in spec]
    if geometry.kind not in ("circle", "sphere"):
        return []
    n = geometry.dim
    r0 = geometry.params["r0"]
    t_star = r0 * r0 / (2.0 * (n - 1))
    c = np.asarray(geometry.params["center"]) + velocity * t_star
    return [KernelSpec(tuple(float(x) for x in c % 1.0), t_star)]


def _constant_velocity(u: TransportSpec, dim: int) -> np.ndarray:
    if u.kind == "constant":
        return np.asarray(u.params.get("velocity", [0.0] * dim), dtype=float)
    return np.zeros(dim)


def _expected_circles(geometry: Geometry, velocity, t):
    """(center, radius) of every sphere in the exact flow at time t."""
    n = geometry.dim
    p = geometry.params
    if geometry.kind in ("circle", "sphere"):
        items = [(p["center"], p["r0"])]
    elif geometry.kind == "two_circles":
        items = [(p["c1"], p["r1"]), (p["c2"], p["r2"])]
    else:
        return []
    out = []
    for c, r0 in items:
        r2 = r0 * r0 - 2.0 * (n - 1) * t
        out.append(((np.asarray(c) + velocity * t) % 1.0, math.sqrt(r2) if r2 > 0 else 0.0))
    return out


def _fit_components(mesh):
    fits = []
    for cid in range(mesh.n_components):
        center, radius, _ = fit_points(mesh.component_vertices(cid))
        fits.append((center, radius))
    return fits


def _plane_fronts(phi_data, h):
    """Mean x1 position of the rising and falling zero crossings of a band."""
    f = phi_data
    nxt = np.roll(f, -1, axis=0)
    x = (np.arange(f.shape[0]) + 0.5) * h
    rising = (f <= 0) & (nxt > 0)
    falling = (f > 0) & (nxt <= 0)
    out = []
    for mask in (rising, falling):
        i, j = np.nonzero(mask)
        frac = f[i, j] / (f[i, j] - nxt[i, j])
        pos = (x[i] + frac * h) % 1.0
        ang = 2 * math.pi * pos
        out.append((math.atan2(np.sin(ang).mean(), np.cos(ang).mean()) / (2 * math.pi)) % 1.0)
    return out


# -- run -----------------------------------------------------------------------

def run_scenario(cfg: ScenarioConfig, epsilon: float | None = None, resolution: int | None = None,
                 output_dir=None, write: bool = True) -> DiagnosticsReport:
    """Build, run and diagnose one scenario; writes CSVs, dumps and summary when ``write``."""
    res = int(resolution or cfg["grid.resolution"])
    if epsilon is None:
        if len(cfg["epsilon"]) != 1:
            raise ConfigInvalid(["epsilon: a run takes a single value; use sweep for lists"])
        epsilon = resolve_epsilon(cfg["epsilon"][0], res)
    grid = PeriodicGrid(cfg["grid.dim"], res)
    try:
        well = well_by_name(cfg["well"])
    except (ValueError, OSError) as exc:
        raise ConfigInvalid([f"well: {exc}"]) from exc
    profile = standing_wave(well)
    geometry = build_geometry(cfg)
    u = build_transport(cfg)
    beta = cfg["transport.beta"]
    t_end = cfg["solver.t_end"]
    phi0 = build_initial_field(geometry, profile, epsilon, grid, _r_trunc(cfg))
    u_eps = mollify(u, epsilon, grid, max(t_end, 1e-12), beta)
    velocity = _constant_velocity(u, grid.dim)

    diag_times = sorted({0.0, *(cfg["diagnostics.times"] or cfg["solver.snapshot_times"])})
    diag_times = [t for t in diag_times if t <= t_end * (1 + 1e-12)]
    poles = _poles(cfg, geometry, velocity)
    t0a, t1a = cfg["diagnostics.audit_window"]
    t1a = min(t1a, t_end)
    audit_times = []
    if poles and t0a < t1a:
        for k in poles:
            n = cfg["diagnostics.audit_snapshots"]
            if k.s > t1a:
                audit_times += _geometric_times(t0a, t1a, k.s, n)
            else:
                audit_times += list(np.linspace(t0a, t1a, n))
    targets = sorted({round(t, 15) for t in diag_times + audit_times if 0.0 < t <= t_end})
    scfg = SolverConfig(t_end=t_end, scheme=cfg["solver.scheme"], dt=cfg["solver.dt"],
                        cfl_safety=cfg["solver.cfl_safety"], snapshot_times=tuple(targets),
                        upwind=cfg["solver.upwind"])
    dt_max = resolve_dt(phi0, well, u_eps, scfg)

    out = Path(output_dir or cfg["output_dir"] or f"out/{cfg['name']}")
    report = DiagnosticsReport(cfg["name"], epsilon, res, output_dir=out if write else None)
    if write:
        out.mkdir(parents=True, exist_ok=True)
    brakke_tests = [s.strip() for s in cfg["diagnostics.brakke_tests"].split(",") if s.strip()]
    radii = cfg["diagnostics.density_radii"] or None
    theta_r = cfg["diagnostics.theta_radius_eps"] * epsilon
    sigma = profile.sigma
    fits, thetas, d_series, tv_gap, xi_sup, meshes = {}, {}, {}, [], [], {}
    diag_set = {round(t, 15) for t in diag_times}

    def on_snapshot(state: FlowState):
        t = state.t
        if round(t, 15) not in diag_set:
            return
        m = energy_and_discrepancy(state.phi, well)
        mu = m.mass()
        dens = density_ratio(m, radii)
        sup_xi, _ = positive_discrepancy_bound(m, beta)
        _, tv = bv_projection(state.phi, profile)
        nxt = step(state, well, u_eps, scfg, dt_max)
        brakke = {name: brakke_residual(state, nxt, well, u_eps, name) for name in brakke_tests}
        row = {"t": t, "mu_total": mu, "D": dens.d_of_t, "sup_xi_plus": sup_xi, "xi_l1": m.xi_l1,
               "tv_w": tv, "brakke_residual": brakke[brakke_tests[0]] if brakke_tests else math.nan}
        report.measures.append(row)
        report.extras.setdefault("brakke", {})[t] = brakke
        d_series[t] = dens.d_of_t
        tv_gap.append((t, tv - mu / sigma))
        xi_sup.append((t, sup_xi))
        if write and cfg["diagnostics.dump_fields"]:
            write_field(out / f"phi_t{t:.6g}.pfmf", state.phi.data, epsilon, t)
        if grid.dim >= 2:
            try:
                mesh = extract_interface(state.phi)
            except NoInterface:
                meshes[t] = None
                return
            meshes[t] = mesh
            if write and cfg["diagnostics.interface_csv"]:
                export_mesh_csv(mesh, out / interface_filename(t))
            if geometry.kind in ("circle", "sphere", "two_circles"):
                fits[t] = _fit_components(mesh)
            if 5 * epsilon <= theta_r <= 0.25:
                vals = []
                for cid in range(mesh.n_components):
                    verts = mesh.component_vertices(cid)
                    idx = np.linspace(0, len(verts), cfg["diagnostics.theta_probes"], endpoint=False).astype(int)
                    vals += [density_estimate(m, sigma, verts[i], theta_r).theta_hat for i in idx]
                thetas[t] = vals

    traj = run(FlowState(phi0), well, u_eps, scfg, on_snapshot)
    report.extras.update(d_series=d_series, trajectory_dt=traj.dt, steps=len(traj.step_times) - 1,
                         initial_energy=traj.energies[0] if traj.energies.size else math.nan,
                         perimeter=geometry.perimeter, sigma=sigma, thetas=thetas, fits=fits,
                         meshes={t: (None if mm is None else (mm.measure, mm.n_components)) for t, mm in meshes.items()},
                         sup_u=u_eps.sup_u, sup_grad_u=u_eps.sup_grad, mollifier_note=u_eps.note)
    report.extras["energy_error"] = report.extras["initial_energy"] / (sigma * geometry.perimeter) - 1.0
    _energy_checks(report, traj, u_eps)
    eps_bound = 10.0 * epsilon ** (-beta)
    worst = max(xi_sup, key=lambda r: r[1])
    report.checks.append(Check("discrepancy_sup", worst[1], eps_bound, worst[1] <= eps_bound,
                               detail=f"at t = {worst[0]:.6g}"))
    gap = max(tv_gap, key=lambda r: r[1])
    report.checks.append(Check("bv_bound", gap[1], 1e-8, gap[1] <= 1e-8,
                               detail=f"TV - mu/sigma at t = {gap[0]:.6g}"))
    if cfg["checks.radius_law"] and fits:
        _radius_checks(report, cfg, geometry, velocity, fits)
    if cfg["checks.plane"] and geometry.kind == "graph":
        _plane_checks(report, cfg, geometry, profile, velocity, traj, grid, epsilon)
    if cfg["checks.theta"] and thetas:
        _theta_check(report, cfg, geometry, thetas)
    for k in poles:
        _audit(report, cfg, traj, well, k, (t0a, t1a), u_eps, u, d_series)
    if write:
        write_outputs(report)
    return report


def _energy_checks(report, traj, u_eps):
    e = traj.energies
    if e.size < 2:
        return
    e0 = e[0]
    if u_eps.is_zero:
        inc = float(np.max(np.diff(e)))
        report.checks.append(Check("energy_dissipation", inc, 1e-10, inc <= 1e-10,
                                   detail="largest per-step energy increase"))
    else:
        excess = e - e0 - np.cumsum(traj.transport_work)
        worst = float(np.max(excess))
        report.checks.append(Check("energy_growth", worst, 1e-6 * e0, worst <= 1e-6 * e0,
                                   detail="max of mu_t - mu_0 - int eps (u.grad phi)^2"))


def _radius_checks(report, cfg, geometry, velocity, fits):
    times = cfg["checks.radius_times"] or [t for t in fits if t > 0]
    tol = cfg["checks.radius_tol"]
    worst_r, worst_c, where = 0.0, 0.0, None
    for t in times:
        key = min(fits, key=lambda s: abs(s - t))
        if abs(key - t) > 1e-9:
            continue
        expected = [e for e in _expected_circles(geometry, velocity, t) if e[1] > 0]
        got = fits[key]
        if len(got) != len(expected):
            report.checks.append(Check("radius_law", math.inf, tol, False,
                                       detail=f"{len(got)} components at t = {t:.6g}, expected {len(expected)}"))
            return
        for c_exp, r_exp in expected:
            c_fit, r_fit = min(got, key=lambda f: np.linalg.norm(minimal_image(f[0] - c_exp)))
            err = abs(r_fit - r_exp) / r_exp
            if err >= worst_r:
                worst_r, where = err, t
            if t > 0 and np.any(velocity):
                c0 = _expected_circles(geometry, velocity, 0.0)
                start = min(c0, key=lambda e: np.linalg.norm(minimal_image(e[0] + velocity * t - c_fit)))[0]
                drift = minimal_image(c_fit - start)
                want = velocity * t
                worst_c = max(worst_c, float(np.linalg.norm(drift - want) / np.linalg.norm(want)))
    report.checks.append(Check("radius_law", worst_r, tol, worst_r <= tol, detail=f"worst at t = {where}"))
    if cfg["checks.translation"]:
        ttol = cfg["checks.translation_tol"]
        report.checks.append(Check("translation", worst_c, ttol, worst_c <= ttol,
                                   detail="relative error of center drift vs U t"))


def _plane_checks(report, cfg, geometry, profile, velocity, traj, grid, epsilon):
    h = grid.h
    g0 = float(np.mean(geometry.params["heights"]))
    w = geometry.params["width"]
    base = traj.snapshots[0]
    start = _plane_fronts(base.phi.data, h)
    worst_front, worst_shape, worst_drift = 0.0, 0.0, 0.0
    for snap in traj.snapshots[1:]:
        t = snap.t
        fronts = _plane_fronts(snap.phi.data, h)
        for f0, f in zip(start, fronts):
            err = abs(float(minimal_image(f - f0 - velocity[0] * t)))
            worst_front = max(worst_front, err)
        shift = float(minimal_image(fronts[0] - start[0]))
        moved = Geometry.graph(np.asarray(geometry.params["heights"]) + shift, w)
        ref = build_initial_field(moved, profile, epsilon, grid, _r_trunc(cfg))
        worst_shape = max(worst_shape, float(np.max(np.abs(snap.phi.data - ref.data))))
        worst_drift = max(worst_drift, float(np.max(np.abs(snap.phi.data - base.phi.data))))
    tol_f = cfg["checks.plane_front_tol_h"] * h
    report.checks.append(Check("plane_front", worst_front, tol_f, worst_front <= tol_f,
                               detail=f"zero-set offset from x0 + U t (sheet at {g0:.4g})"))
    tol_s = cfg["checks.plane_shape_tol"]
    report.checks.append(Check("plane_shape", worst_shape, tol_s, worst_shape <= tol_s,
                               detail="sup |phi - Psi(d_shifted/eps)|"))
    if cfg["checks.plane_drift_tol"] > 0:
        tol_d = cfg["checks.plane_drift_tol"]
        report.checks.append(Check("plane_drift", worst_drift, tol_d, worst_drift <= tol_d,
                                   detail="sup |phi(t) - phi(0)|"))


def _theta_check(report, cfg, geometry, thetas):
    lo, hi = cfg["checks.theta_range"]
    t_max = cfg["checks.theta_t_max"]
    if t_max < 0:
        if geometry.kind in ("circle", "sphere"):
            r0 = geometry.params["r0"]
            t_max = 0.8 * r0 * r0 / (2.0 * (geometry.dim - 1))
        else:
            t_max = math.inf
    vals = [v for t, vs in thetas.items() if t <= t_max + 1e-12 for v in vs]
    if not vals:
        return
    vmin, vmax = min(vals), max(vals)
    ok = lo <= vmin and vmax <= hi
    report.checks.append(Check("theta_unit_density", vmax if vmax - 1 >= 1 - vmin else vmin,
                               hi if vmax - 1 >= 1 - vmin else lo, ok, binding=False,
                               detail=f"theta_hat in [{vmin:.4f}, {vmax:.4f}] for t <= {t_max:.6g}"))


def _audit(report, cfg, traj, well, k, window, u_eps, u, d_series):
    t0, t1 = window
    if t1 >= k.s:
        t1 = max(t for t in (s.t for s in traj.snapshots) if t < k.s)
    rec = monotonicity_audit(traj.snapshots, well, k, t0, t1, u_eps,
                             cfg["diagnostics.tail_constant"], cfg["checks.audit_tol"],
                             density=max(d_series.values()), p=u.p, q=u.q)
    report.monotonicity.extend(rec.rows)
    report.extras.setdefault("audits", []).append(rec)
    tol = cfg["checks.audit_tol"]
    pole = ", ".join(f"{x:.4g}" for x in k.y)
    if u_eps.is_zero:
        report.checks.append(Check("monotonicity_delta", rec.delta_m, tol, rec.delta_m <= tol,
                                   detail=f"pole ({pole}) @ {k.s:.6g}, window [{rec.t0:.4g}, {rec.t1:.4g}]"))
    bound = rec.transport_term + rec.tail_term + tol
    report.checks.append(Check("monotonicity_audit", rec.delta_m, bound, rec.passed,
                               detail=f"transport {rec.transport_term:.3g}, tail {rec.tail_term:.3g}, "
                                      f"discrepancy {rec.discrepancy_term:.3g}"))


# -- outputs -----------------------------------------------------------------

def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(r[c]) for c in columns])


def write_outputs(report: DiagnosticsReport) -> None:
    out = report.output_dir
    rows = sorted(report.measures, key=lambda r: r["t"])
    _write_csv(out / "measures.csv", MEASURE_COLUMNS, rows)
    if report.monotonicity:
        dim = len(report.monotonicity[0]["pole"])
        names = ["pole_x", "pole_y", "pole_z"][:dim]
        cols = names + ["s", "t", "value", "delta_from_prev", "discrepancy_term", "transport_term",
                        "tail_term", "pass"]
        flat = []
        for r in report.monotonicity:
            d = dict(r)
            d.update(zip(names, r["pole"]))
            flat.append(d)
        _write_csv(out / "monotonicity.csv", cols, flat)
    _write_csv(out / "checks.csv", CHECK_COLUMNS, [c.__dict__ for c in report.checks])
    (out / "summary.txt").write_text(report.summary())


def read_csv(path) -> list[dict]:
    """Rows with numeric fields parsed back to float (bools to bool)."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for k, v in row.items():
                if v in ("true", "false"):
                    parsed[k] = v == "true"
                else:
                    try:
                        parsed[k] = float(v)
                    except ValueError:
                        parsed[k] = v
            out.append(parsed)
    return out


def report(output_dir) -> tuple[str, int]:
    """Re-render summaries from the CSVs in ``output_dir`` (and its sweep members)."""
    out = Path(output_dir)
    dirs = [out] if (out / "checks.csv").exists() else []
    dirs += sorted(p.parent for p in out.glob("*/checks.csv"))
    if not dirs:
        raise FileNotFoundError(f"{out}: no checks.csv found")
    text, failed = [], False
    for d in dirs:
        checks = [Check(r["name"], float(r["value"]), float(r["threshold"]), bool(r["passed"]),
                        bool(r["binding"]), r["detail"] if isinstance(r["detail"], str) else "")
                  for r in read_csv(d / "checks.csv")]
        failed |= any(c.binding and not c.passed for c in checks)
        text.append(f"== {d}")
        if (d / "measures.csv").exists():
            rows = read_csv(d / "measures.csv")
            text.append("  " + "  ".join(f"{c:>14s}" for c in MEASURE_COLUMNS))
            for r in rows:
                text.append("  " + "  ".join(f"{r[c]:14.6g}" for c in MEASURE_COLUMNS))
        text += [c.line() for c in checks]
    if (out / "convergence.csv").exists():
        text.append(f"== {out / 'convergence.csv'}")
        for r in read_csv(out / "convergence.csv"):
            text.append("  " + "  ".join(f"{k}={r[k]:.6g}" for k in SWEEP_COLUMNS))
    text.append("verdict: " + ("FAIL" if failed else "PASS"))
    return "\n".join(text) + "\n", 1 if failed else 0


# -- sweeps --------------------------------------------------------------------

@dataclass
class SweepResult:
    rows: list
    reports: list
    checks: list
    output_dir: Path | None = None

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports) and all(c.passed for c in self.checks if c.binding)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


def _order(a, b, ea, eb):
    if not (a and b) or a <= 0 or b <= 0 or any(map(math.isnan, (a, b))):
        return math.nan
    return math.log(a / b) / math.log(ea / eb)


def strictly_decreasing(vals) -> bool:
    return all(b < a for a, b in zip(vals, vals[1:]))


def run_sweep(cfg: ScenarioConfig, output_dir=None, write: bool = True) -> SweepResult:
    entries = cfg["epsilon"]
    if len(entries) < 3:
        raise ConfigInvalid([f"epsilon: a sweep needs at least 3 values, got {len(entries)}"])
    resolutions = cfg.sweep_resolutions()
    out = Path(output_dir or cfg["output_dir"] or f"out/{cfg['name']}_sweep")
    reports, rows = [], []
    xi_time = cfg["sweep.xi_time"]
    for i, (entry, res) in enumerate(zip(entries, resolutions)):
        eps = resolve_epsilon(entry, res)
        rep = run_scenario(cfg, eps, res, out / f"eps_{i}", write)
        reports.append(rep)
        try:
            iface = rep.check("radius_law").value
        except KeyError:
            iface = math.nan
        xi = next((r["xi_l1"] for r in rep.measures if abs(r["t"] - xi_time) < 1e-12), math.nan)
        rows.append({"epsilon": eps, "resolution": res, "interface_error": iface,
                     "energy_error": abs(rep.extras["energy_error"]), "xi_l1": xi,
                     "D": max(rep.extras["d_series"].values())})
    for i, r in enumerate(rows):
        prev = rows[i - 1] if i else None
        for col, key in (("order_interface", "interface_error"), ("order_energy", "energy_error"), ("order_xi", "xi_l1")):
            r[col] = _order(prev[key], r[key], prev["epsilon"], r["epsilon"]) if prev else math.nan
    checks = []
    e_err = [r["energy_error"] for r in rows]
    checks.append(Check("sweep_energy_error_decreasing", float(e_err[-1]), float(e_err[0]),
                        strictly_decreasing(e_err), binding=False,
                        detail="|mu_0/(sigma Per) - 1| = " + ", ".join(f"{v:.3g}" for v in e_err)))
    xis = [r["xi_l1"] for r in rows]
    if not any(math.isnan(v) for v in xis):
        checks.append(Check("sweep_xi_l1_decreasing", float(xis[-1]), float(xis[0]),
                            strictly_decreasing(xis), binding=False,
                            detail=f"int |xi| at t = {xi_time:g}: " + ", ".join(f"{v:.3g}" for v in xis)))
    spread = d_spread(reports)
    checks.append(Check("sweep_density_spread", spread, 0.15, spread < 0.15, binding=False,
                        detail="max over t of (max D - min D)/min D across eps"))
    result = SweepResult(rows, reports, checks, out if write else None)
    if write:
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "convergence.csv", SWEEP_COLUMNS, rows)
        _write_csv(out / "checks.csv", CHECK_COLUMNS, [c.__dict__ for c in checks])
        text = "\n".join(c.line() for c in checks) + "\n"
        text += "".join(r.summary() for r in reports)
        (out / "summary.txt").write_text(text)
    return result


def d_spread(reports, t_max: float = 0.02) -> float:
    common = set.intersection(*(set(round(t, 12) for t in r.extras["d_series"]) for r in reports))
    worst = 0.0
    for t in sorted(common):
        if t > t_max + 1e-12:
            continue
        vals = [next(v for s, v in r.extras["d_series"].items() if round(s, 12) == t) for r in reports]
        worst = max(worst, (max(vals) - min(vals)) / min(vals))
    return worst


def safe_run(fn, *args, **kwargs):
    """Call ``fn`` mapping module errors to exit code 2."""
    try:
        return fn(*args, **kwargs), None
    except MCTError as exc:
        return None, exc
