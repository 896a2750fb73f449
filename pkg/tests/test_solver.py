import math

import numpy as np
import pytest

from mct.errors import EpsilonGridMismatch, GridMismatch, InvalidTimeStep, StabilityViolation
from mct.grid import PeriodicGrid
from mct.initial import Geometry, PhaseField, build_initial_field
from mct.interface import extract_interface, fit_circle
from mct.solver import (
    FlowState, SolverConfig, resolve_dt, rhs, run, stable_dt, step, total_energy,
)
from mct.transport import TransportSpec, mollify


def _plane(profile, n, eps):
    grid = PeriodicGrid(2, n)
    return build_initial_field(Geometry.graph([0.25] * 8, 0.5), profile, eps, grid)


def _front(phi):
    # zero crossing of the first column, linear interpolation between cells
    col = phi.data[:, 0]
    h = phi.grid.h
    k = np.flatnonzero((col[:-1] <= 0) & (col[1:] > 0))[0]
    return (k + 0.5) * h + h * (-col[k]) / (col[k + 1] - col[k])


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(1.0, scheme="rk4")
    with pytest.raises(ValueError):
        SolverConfig(1.0, cfl_safety=1.5)
    with pytest.raises(ValueError):
        SolverConfig(1.0, snapshot_times=(0.5, 0.2))
    with pytest.raises(ValueError):
        SolverConfig(1.0, snapshot_times=(2.0,))


def test_stable_dt(quartic):
    h, eps = 1 / 64, 4 / 64
    explicit = stable_dt(h, 2, eps, quartic, 0.0, "explicit", 0.5)
    assert explicit == pytest.approx(0.5 * h * h / 4)
    semi = stable_dt(h, 2, eps, quartic, 0.0, "semi_implicit", 0.5)
    assert semi == pytest.approx(0.5 * eps * eps / quartic.d2_max)
    assert stable_dt(h, 2, eps, quartic, 1e4, "semi_implicit", 1.0) == pytest.approx(h / 1e4)


def test_rhs_trivial(quartic):
    g = PeriodicGrid(2, 32)
    one = PhaseField(g, np.ones(g.shape), 4 * g.h)
    u = mollify(TransportSpec("shear", {"amplitude": 0.5}), one.epsilon, g, 1.0)
    assert np.all(rhs(one, quartic, u, 0.3) == 0.0)
    zero = PhaseField(g, np.zeros(g.shape), 4 * g.h)
    assert np.all(rhs(zero, quartic) == 0.0)
    with pytest.raises(GridMismatch):
        rhs(PhaseField(PeriodicGrid(2, 16), np.ones((16, 16)), 0.25), quartic, u)


def test_planar_residual_is_second_order(profile, quartic):
    eps = 1 / 64
    res = [np.abs(rhs(_plane(profile, n, eps), quartic)).max() for n in (256, 512)]
    # leading error of the 3-point Laplacian is h^2 Psi''''/(12 eps^4)
    x = np.linspace(-4, 4, 80001)
    d4 = np.gradient(np.gradient(np.gradient(np.gradient(np.tanh(math.sqrt(2) * x), x), x), x), x)
    assert res[0] <= 1.1 * np.abs(d4).max() / 12 * (1 / 256) ** 2 / eps ** 4
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.1)


def test_gradient_check(quartic):
    rng = np.random.default_rng(7)
    g = PeriodicGrid(2, 32)
    eps = 4 * g.h
    base = PhaseField(g, 0.8 * np.tanh(rng.standard_normal(g.shape)), eps)
    r = rhs(base, quartic)
    for _ in range(10):
        d = rng.standard_normal(g.shape)
        s = 1e-5
        up = total_energy(PhaseField(g, base.data + s * d, eps), quartic)
        dn = total_energy(PhaseField(g, base.data - s * d, eps), quartic)
        fd = (up - dn) / (2 * s)
        exact = -eps * g.integrate(r * d)
        assert fd == pytest.approx(exact, rel=1e-6)


@pytest.mark.parametrize("scheme", ["explicit", "semi_implicit"])
def test_constant_state_is_fixed(quartic, scheme):
    g = PeriodicGrid(2, 32)
    st = FlowState(PhaseField(g, np.ones(g.shape), 4 * g.h))
    u = mollify(TransportSpec("constant", {"velocity": [1.0, 0.5]}), 4 * g.h, g, 1.0)
    out = step(st, quartic, u, SolverConfig(1.0, scheme=scheme), 1e-5)
    np.testing.assert_allclose(out.phi.data, 1.0, rtol=0, atol=1e-14)
    assert out.t == 1e-5 and out.step_count == 1


def test_stability_monitor(quartic):
    g = PeriodicGrid(2, 32)
    data = np.random.default_rng(0).uniform(-1, 1, g.shape)
    st = FlowState(PhaseField(g, data, 4 * g.h))
    with pytest.raises(StabilityViolation) as info:
        step(st, quartic, None, SolverConfig(1.0), 10 * g.h ** 2)
    assert info.value.t == pytest.approx(10 * g.h ** 2)


def test_dt_checks(quartic):
    g = PeriodicGrid(2, 32)
    phi = PhaseField(g, np.zeros(g.shape), 4 * g.h)
    with pytest.raises(InvalidTimeStep):
        resolve_dt(phi, quartic, None, SolverConfig(1.0, dt=1.0))
    with pytest.raises(EpsilonGridMismatch):
        run(FlowState(PhaseField(g, np.zeros(g.shape), 10 * g.h)), quartic, None, SolverConfig(0.1))


def test_t_end_zero(profile, quartic):
    phi = _plane(profile, 128, 4 / 128)
    traj = run(FlowState(phi), quartic, None, SolverConfig(0.0))
    assert len(traj.snapshots) == 1 and traj.snapshots[0].t == 0.0


@pytest.mark.parametrize("scheme", ["explicit", "semi_implicit"])
def test_energy_dissipation(profile, quartic, scheme):
    g = PeriodicGrid(2, 128)
    phi = build_initial_field(Geometry.circle((0.5, 0.5), 0.25), profile, 4 * g.h, g)
    traj = run(FlowState(phi), quartic, None, SolverConfig(0.005, scheme=scheme, snapshot_times=(0.002,)))
    assert np.diff(traj.energies).max() <= 1e-10
    assert [s.t for s in traj.snapshots] == [0.0, 0.002, 0.005]
    assert np.abs(traj.snapshots[-1].phi.data).max() <= 1 + 1e-6


def test_energy_growth_bound_with_transport(profile, quartic):
    g = PeriodicGrid(2, 128)
    eps = 4 * g.h
    phi = build_initial_field(Geometry.circle((0.5, 0.5), 0.25), profile, eps, g)
    u = mollify(TransportSpec("shear", {"amplitude": 1.0}), eps, g, 0.005)
    traj = run(FlowState(phi), quartic, u, SolverConfig(0.005))
    excess = traj.energies - traj.energies[0] - np.cumsum(traj.transport_work)
    assert excess.max() <= 1e-6 * traj.energies[0]


def test_plane_translates(profile, quartic):
    n = 128
    eps = 4 / n
    phi = _plane(profile, n, eps)
    x0 = _front(phi)
    u = mollify(TransportSpec("constant", {"velocity": [0.5, 0.0]}), eps, phi.grid, 0.02)
    traj = run(FlowState(phi), quartic, u, SolverConfig(0.02))
    assert abs(_front(traj.snapshots[-1].phi) - (x0 + 0.01)) <= 1.5 / n


def test_deterministic(profile, quartic):
    phi = _plane(profile, 128, 4 / 128)
    u = mollify(TransportSpec("shear", {"amplitude": 0.3}), phi.epsilon, phi.grid, 0.002)
    a = run(FlowState(phi), quartic, u, SolverConfig(0.002)).snapshots[-1].phi.data
    b = run(FlowState(phi), quartic, u, SolverConfig(0.002)).snapshots[-1].phi.data
    np.testing.assert_array_equal(a, b)


@pytest.mark.slow
def test_circle_radius_law(profile, quartic):
    g = PeriodicGrid(2, 256)
    phi = build_initial_field(Geometry.circle((0.5, 0.5), 0.25), profile, 4 * g.h, g)
    traj = run(FlowState(phi), quartic, None, SolverConfig(0.01, record_energy=False))
    _, r, _ = fit_circle(extract_interface(traj.snapshots[-1].phi))
    assert r == pytest.approx(math.sqrt(0.0625 - 0.02), rel=0.02)


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="finite-eps interfaces lag the sharp extinction time")
def test_extinction_energy(profile, quartic):
    g = PeriodicGrid(2, 256)
    phi = build_initial_field(Geometry.circle((0.5, 0.5), 0.25), profile, 4 * g.h, g)
    traj = run(FlowState(phi), quartic, None, SolverConfig(0.031))
    # the sharp-interface ratio is sqrt(0.0625 - 0.062) / 0.25 = 0.089
    assert traj.energies[-1] < 0.1 * traj.energies[0]
