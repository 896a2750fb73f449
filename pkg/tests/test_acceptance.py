"""Acceptance suite: thirteen criteria, one verdict line each.

Run with ``pytest tests/test_acceptance.py -v`` (the verdict lines are
collected in an ``acceptance`` section of the terminal summary) or directly
with ``python tests/test_acceptance.py``.  Thresholds are the stated ones;
a criterion that cannot be met is reported as FAIL, never loosened.
"""
from __future__ import annotations

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from mct.grid import PeriodicGrid
from mct.harness import d_spread, run_scenario, run_sweep
from mct.initial import Geometry, PhaseField, build_initial_field
from mct.interface import density_estimate
from mct.measures import brakke_residual, density_ratio, energy_and_discrepancy
from mct.potential import make_quartic_well, standing_wave
from mct.scenarios import builtin, builtin_names
from mct.solver import FlowState, SolverConfig, rhs, run, total_energy

pytestmark = pytest.mark.acceptance

RESULTS: dict[int, tuple[bool, str]] = {}
_CACHE: dict = {}


def record(n: int, passed: bool, detail: str) -> None:
    RESULTS[n] = (bool(passed), detail)
    print(verdict_line(n))


def verdict_line(n: int) -> str:
    ok, detail = RESULTS[n]
    return f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


def _well():
    if "well" not in _CACHE:
        _CACHE["well"] = make_quartic_well()
        _CACHE["profile"] = standing_wave(_CACHE["well"])
    return _CACHE["well"], _CACHE["profile"]


def _out(tmp: Path | None, name: str) -> Path:
    base = tmp or Path("acceptance_out")
    return base / name


def builtin_reports(tmp=None) -> dict:
    """Every built-in scenario once; cached for the whole session."""
    if "builtins" not in _CACHE:
        reps = {}
        for name in builtin_names():
            t0 = time.perf_counter()
            rep = run_scenario(builtin(name), output_dir=_out(tmp, name))
            rep.extras["wall_time"] = time.perf_counter() - t0
            reps[name] = rep
        _CACHE["builtins"] = reps
    return _CACHE["builtins"]


def circle_sweep(tmp=None):
    if "sweep" not in _CACHE:
        cfg = builtin("circle_shrink").with_values(epsilon=["8h", "4h", "2h"])
        _CACHE["sweep"] = run_sweep(cfg, output_dir=_out(tmp, "circle_sweep"))
    return _CACHE["sweep"]


@pytest.fixture(scope="module")
def reports(tmp_path_factory):
    return builtin_reports(tmp_path_factory.mktemp("builtins"))


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    return circle_sweep(tmp_path_factory.mktemp("sweep"))


def _fit_radius(rep, t):
    key = min(rep.extras["fits"], key=lambda s: abs(s - t))
    return rep.extras["fits"][key]


# -- criteria -------------------------------------------------------------------

def criterion_1(reports):
    rep = reports["circle_shrink"]
    errs = []
    for t in (0.005, 0.01, 0.02):
        (_, r), = _fit_radius(rep, t)
        errs.append(abs(r / math.sqrt(0.0625 - 2 * t) - 1))
    wall = rep.extras["wall_time"]
    ok = max(errs) <= 0.02 and wall <= 120
    record(1, ok, f"radius errors {', '.join(f'{e:.4f}' for e in errs)} (<= 0.02), wall {wall:.0f}s (<= 120)")


def criterion_2(reports):
    rep = reports["circle_transport"]
    rad, tr = rep.check("radius_law"), rep.check("translation")
    ok = rad.value <= 0.02 and tr.value <= 0.02
    record(2, ok, f"radius error {rad.value:.4f}, drift error {tr.value:.4f} (both <= 0.02)")


def criterion_3(reports):
    rep = reports["plane_translate"]
    h = 1.0 / rep.resolution
    front, shape = rep.check("plane_front").value, rep.check("plane_shape").value
    ok = front <= 1.5 * h and shape <= 5e-3
    record(3, ok, f"front offset {front:.3g} (<= {1.5 * h:.3g}), shape drift {shape:.3g} (<= 5e-3)")


def criterion_4(reports):
    c = reports["circle_shrink"].check("energy_dissipation")
    record(4, c.value <= 1e-10, f"largest step increase {c.value:.3g} (<= 1e-10), {reports['circle_shrink'].extras['steps']} steps")


def criterion_5(reports):
    rep = reports["circle_transport"]
    c = rep.check("energy_growth")
    lim = 1e-6 * rep.extras["initial_energy"]
    record(5, c.value <= lim, f"max excess {c.value:.3g} (<= {lim:.3g})")


def criterion_6(reports, sweep):
    worst = {n: r.check("discrepancy_sup") for n, r in reports.items()}
    sup_ok = all(c.value <= 10 * r.epsilon ** -0.25 for (n, c), r in zip(worst.items(), reports.values()))
    xis = [row["xi_l1"] for row in sweep.rows]
    trend_ok = all(b < a for a, b in zip(xis, xis[1:]))
    peak = max(worst.items(), key=lambda kv: kv[1].value / kv[1].threshold)
    record(6, sup_ok and trend_ok,
           f"sup xi+ within 10 eps^-1/4 on all {len(worst)} scenarios: {sup_ok} (tightest {peak[0]} "
           f"{peak[1].value:.3g}/{peak[1].threshold:.3g}); int|xi| at t=0.005 over 8h,4h,2h: "
           f"{', '.join(f'{v:.4g}' for v in xis)} strictly decreasing: {trend_ok}")


def _initial_error(geo, eps, n):
    well, profile = _well()
    grid = PeriodicGrid(2, n)
    phi = build_initial_field(geo, profile, eps, grid)
    return total_energy(phi, well) / (profile.sigma * geo.perimeter) - 1


def criterion_7():
    geos = {"circle": (Geometry.circle((0.5, 0.5), 0.25), 256),
            "two_circles": (Geometry.two_circles((0.25, 0.5), 0.125, (0.75, 0.5), 0.125), 512),
            "annulus": (Geometry.annulus((0.5, 0.5), 0.15, 0.38), 512)}
    at4h, trends, parts = {}, {}, []
    for name, (geo, sweep_res) in geos.items():
        at4h[name] = abs(_initial_error(geo, 4 / 256, 256))
        errs = [abs(_initial_error(geo, k / sweep_res, sweep_res)) for k in (8, 4, 2)]
        trends[name] = all(b < a for a, b in zip(errs, errs[1:]))
        parts.append(f"{name} {at4h[name]:.4f}; sweep@{sweep_res} {', '.join(f'{e:.2e}' for e in errs)}")
    ok = all(v <= 0.02 for v in at4h.values()) and all(trends.values())
    record(7, ok, f"4h error <= 0.02: {all(v <= 0.02 for v in at4h.values())}; decreasing: "
                  f"{all(trends.values())}  [{' | '.join(parts)}]")


def criterion_8(sweep):
    spread = d_spread(sweep.reports, 0.02)
    well, profile = _well()
    n = 256
    grid = PeriodicGrid(2, n)
    phi = build_initial_field(Geometry.graph([0.25] * 8, 0.5), profile, 4 / n, grid)
    probe = density_ratio(energy_and_discrepancy(phi, well), radii=[0.1], centers=[(64, 10)])
    ratio = probe.ratio_samples[0][2]
    ok = spread < 0.15 and abs(ratio / profile.sigma - 1) <= 0.05
    record(8, ok, f"D spread across eps {spread:.4f} (< 0.15); planar probe {ratio:.4f} vs sigma {profile.sigma:.4f} (5%)")


def criterion_9(reports):
    zero = reports["circle_shrink"].check("monotonicity_delta")
    moving = reports["circle_transport"].check("monotonicity_audit")
    ok = zero.value <= 2e-3 and moving.passed
    record(9, ok, f"u=0 dM {zero.value:.3g} (<= 2e-3); constant u dM {moving.value:.3g} <= bound {moving.threshold:.3g}: {moving.passed}")


def criterion_10(reports):
    rep = reports["circle_shrink"]
    t_star = 0.0625 / 2
    vals = [v for t, vs in rep.extras["thetas"].items() if t <= 0.8 * t_star + 1e-12 for v in vs]
    circle_ok = 0.9 <= min(vals) and max(vals) <= 1.1
    well, profile = _well()
    n = 256
    grid = PeriodicGrid(2, n)
    eps = 2 * grid.h
    x1 = grid.coords()[0]
    d = np.minimum(x1 - (0.5 - 3 * eps), (0.5 + 3 * eps) - x1)
    phi = PhaseField(grid, profile.psi(np.maximum(d, -0.2) / eps), eps)
    two = density_estimate(energy_and_discrepancy(phi, well), profile.sigma, (0.5, 0.5), 20 * eps).theta_hat
    ok = circle_ok and 1.8 <= two <= 2.2
    record(10, ok, f"circle theta in [{min(vals):.4f}, {max(vals):.4f}] (within [0.9, 1.1]); two sheets {two:.4f} (within [1.8, 2.2])")


def criterion_11(reports):
    gaps = {n: r.check("bv_bound").value for n, r in reports.items()}
    rep = reports["circle_shrink"]
    tv0 = min(rep.measures, key=lambda r: r["t"])["tv_w"]
    per = 2 * math.pi * 0.25
    ok = all(v <= 1e-8 for v in gaps.values()) and abs(tv0 / per - 1) <= 0.03
    record(11, ok, f"max TV - mu/sigma {max(gaps.values()):.3g} (<= 1e-8) over {len(gaps)} scenarios; "
                   f"TV(0)/perimeter - 1 = {tv0 / per - 1:.4f} (3%)")


def _brakke_pair(n, dt, t_probe=0.005):
    well, profile = _well()
    grid = PeriodicGrid(2, n)
    phi = build_initial_field(Geometry.circle((0.5, 0.5), 0.25), profile, 1 / 64, grid)
    cfg = SolverConfig(t_probe + dt, dt=dt, snapshot_times=(t_probe,), record_energy=False)
    snaps = run(FlowState(phi), well, None, cfg).snapshots
    return {name: brakke_residual(snaps[-2], snaps[-1], well, test=name) for name in ("one", "cos_x1")}


def criterion_12():
    dt = 0.5 * (1 / 256) ** 2 / 4
    coarse = _brakke_pair(256, dt)
    fine = _brakke_pair(362, dt / 2)
    ratios = {k: coarse[k] / fine[k] for k in coarse}
    ok = all(r >= 1.8 for r in ratios.values())
    record(12, ok, "decay factors " + ", ".join(f"{k} {v:.3f}" for k, v in ratios.items()) + " (>= 1.8)")


def criterion_13():
    well, profile = _well()
    eps = 1 / 64
    res = []
    for n in (256, 512):
        phi = build_initial_field(Geometry.graph([0.25] * 8, 0.5), profile, eps, PeriodicGrid(2, n))
        res.append(float(np.abs(rhs(phi, well)).max()))
    order = math.log2(res[0] / res[1])
    rng = np.random.default_rng(13)
    grid = PeriodicGrid(2, 64)
    base = PhaseField(grid, 0.8 * np.tanh(rng.standard_normal(grid.shape)), 4 * grid.h)
    r = rhs(base, well)
    worst = 0.0
    for _ in range(10):
        d = rng.standard_normal(grid.shape)
        s = 1e-5
        fd = (total_energy(PhaseField(grid, base.data + s * d, base.epsilon), well)
              - total_energy(PhaseField(grid, base.data - s * d, base.epsilon), well)) / (2 * s)
        exact = -base.epsilon * grid.integrate(r * d)
        worst = max(worst, abs(fd / exact - 1))
    ok = 1.8 <= order <= 2.2 and worst <= 1e-6
    record(13, ok, f"planar residual order {order:.3f} (second order); gradient check worst rel. error {worst:.2e} (<= 1e-6)")


# -- pytest entry points ----------------------------------------------------------

def test_criterion_01_shrinking_circle(reports):
    criterion_1(reports)
    assert RESULTS[1][0], verdict_line(1)


def test_criterion_02_transport_superposition(reports):
    criterion_2(reports)
    assert RESULTS[2][0], verdict_line(2)


def test_criterion_03_travelling_wave(reports):
    criterion_3(reports)
    assert RESULTS[3][0], verdict_line(3)


def test_criterion_04_energy_dissipation(reports):
    criterion_4(reports)
    assert RESULTS[4][0], verdict_line(4)


def test_criterion_05_energy_growth(reports):
    criterion_5(reports)
    assert RESULTS[5][0], verdict_line(5)


def test_criterion_06_discrepancy(reports, sweep):
    criterion_6(reports, sweep)
    assert RESULTS[6][0], verdict_line(6)


def test_criterion_07_surface_tension():
    criterion_7()
    assert RESULTS[7][0], verdict_line(7)


def test_criterion_08_density_ratio(sweep):
    criterion_8(sweep)
    assert RESULTS[8][0], verdict_line(8)


def test_criterion_09_monotonicity(reports):
    criterion_9(reports)
    assert RESULTS[9][0], verdict_line(9)


def test_criterion_10_unit_density(reports):
    criterion_10(reports)
    assert RESULTS[10][0], verdict_line(10)


def test_criterion_11_bv_bound(reports):
    criterion_11(reports)
    assert RESULTS[11][0], verdict_line(11)


def test_criterion_12_brakke_residual():
    criterion_12()
    assert RESULTS[12][0], verdict_line(12)


def test_criterion_13_gradient_checks():
    criterion_13()
    assert RESULTS[13][0], verdict_line(13)


def main() -> int:
    reps = builtin_reports()
    sw = circle_sweep()
    steps = [lambda: criterion_1(reps), lambda: criterion_2(reps), lambda: criterion_3(reps),
             lambda: criterion_4(reps), lambda: criterion_5(reps), lambda: criterion_6(reps, sw),
             criterion_7, lambda: criterion_8(sw), lambda: criterion_9(reps), lambda: criterion_10(reps),
             lambda: criterion_11(reps), criterion_12, criterion_13]
    for s in steps:
        s()
    return 0 if all(ok for ok, _ in RESULTS.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
