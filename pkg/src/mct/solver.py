"""Time stepping for phi_t = lap phi - W'(phi)/eps^2 - u . grad phi."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .errors import EpsilonGridMismatch, GridMismatch, InvalidTimeStep, StabilityViolation
from .initial import PhaseField
from .potential import DoubleWell
from .transport import MollifiedTransport

MAX_PRINCIPLE_TOL = 1e-6
EPS_H_RANGE = (2.0, 8.0)


@dataclass(frozen=True)
class SolverConfig:
    t_end: float
    scheme: str = "explicit"
    dt: float | str = "auto"
    cfl_safety: float = 0.5
    snapshot_times: tuple = ()
    upwind: bool = False
    record_energy: bool = True

    def __post_init__(self):
        if self.scheme not in ("explicit", "semi_implicit"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.t_end < 0.0:
            raise ValueError("t_end must be non-negative")
        if not (self.dt == "auto" or (isinstance(self.dt, (int, float)) and self.dt > 0)):
            raise ValueError("dt must be 'auto' or a positive number")
        ts = [float(t) for t in self.snapshot_times]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("snapshot times must be strictly increasing")
        if ts and (ts[0] < 0.0 or ts[-1] > self.t_end * (1 + 1e-12)):
            raise ValueError("snapshot times must lie in [0, t_end]")


@dataclass
class FlowState:
    phi: PhaseField
    t: float = 0.0
    step_count: int = 0

    def copy(self) -> "FlowState":
        return FlowState(self.phi.copy(), self.t, self.step_count)


@dataclass
class Trajectory:
    snapshots: list
    step_times: np.ndarray
    energies: np.ndarray
    transport_work: np.ndarray
    dt: float

    def snapshot_at(self, t: float, tol: float = 1e-12) -> FlowState:
        for s in self.snapshots:
            if abs(s.t - t) <= tol * max(1.0, abs(t)):
                return s
        raise KeyError(f"no snapshot at t = {t}")


def check_eps_h(epsilon: float, h: float) -> None:
    ratio = epsilon / h
    lo, hi = EPS_H_RANGE
    if not lo * (1 - 1e-9) <= ratio <= hi * (1 + 1e-9):
        raise EpsilonGridMismatch(f"epsilon/h = {ratio:.4g} outside [{lo:g}, {hi:g}]")


def stable_dt(h: float, dim: int, epsilon: float, well: DoubleWell, max_speed: float,
              scheme: str, cfl_safety: float) -> float:
    bounds = [epsilon ** 2 / well.d2_max]
    if scheme == "explicit":
        bounds.append(h * h / (2.0 * dim))
    if max_speed > 0.0:
        bounds.append(h / max_speed)
    return cfl_safety * min(bounds)


def _velocity(u_eps: MollifiedTransport | None, t: float):
    if u_eps is None or u_eps.is_zero:
        return None
    return u_eps.at(t)


def rhs(phi: PhaseField, well: DoubleWell, u_eps: MollifiedTransport | None = None, t: float = 0.0) -> np.ndarray:
    """Discrete right-hand side lap phi - W'(phi)/eps^2 - u_eps . grad phi."""
    g = phi.grid
    if u_eps is not None and u_eps.grid != g:
        raise GridMismatch("transport and phase field live on different grids")
    out = g.laplacian(phi.data) - well.d1(phi.data) / phi.epsilon ** 2
    u = _velocity(u_eps, t)
    if u is not None:
        out -= _kernels.advection(u, phi.data, g.h)
    return out


def step(state: FlowState, well: DoubleWell, u_eps: MollifiedTransport | None, cfg: SolverConfig,
         dt: float) -> FlowState:
    """Advance by ``dt``; velocity is taken at the half step."""
    phi = state.phi
    g, eps = phi.grid, phi.epsilon
    u = _velocity(u_eps, state.t + 0.5 * dt)
    dw = well.d1(phi.data)
    if cfg.scheme == "explicit":
        new = _kernels.explicit_update(phi.data, dw, u, g.h, dt, 1.0 / eps ** 2, cfg.upwind)
    else:
        new = phi.data - dt * dw / eps ** 2
        if u is not None:
            new -= dt * _kernels.advection(u, phi.data, g.h, cfg.upwind)
        a = dt / g.h ** 2
        for ax in range(g.dim):
            new = _kernels.cyclic_solve(new, a, ax)
    t_new = state.t + dt
    peak = float(np.max(np.abs(new)))
    if not math.isfinite(peak) or peak > 1.0 + MAX_PRINCIPLE_TOL:
        raise StabilityViolation(f"max |phi| = {peak:.9g} exceeds 1 + {MAX_PRINCIPLE_TOL:g}", t=t_new)
    return FlowState(PhaseField(g, new, eps), t_new, state.step_count + 1)


def total_energy(phi: PhaseField, well: DoubleWell) -> float:
    g, eps = phi.grid, phi.epsilon
    return g.integrate(0.5 * eps * g.grad_sq(phi.data) + well.value(phi.data) / eps)


def transport_power(phi: PhaseField, u: np.ndarray | None) -> float:
    """int eps (u . grad phi)^2 dx."""
    if u is None:
        return 0.0
    adv = _kernels.advection(u, phi.data, phi.grid.h)
    return phi.epsilon * phi.grid.integrate(adv * adv)


def resolve_dt(phi: PhaseField, well: DoubleWell, u_eps, cfg: SolverConfig) -> float:
    g = phi.grid
    speed = 0.0 if u_eps is None or u_eps.is_zero else u_eps.max_speed
    bound = stable_dt(g.h, g.dim, phi.epsilon, well, speed, cfg.scheme, cfg.cfl_safety)
    if cfg.dt == "auto":
        return bound
    if cfg.dt > bound * (1 + 1e-12):
        raise InvalidTimeStep(f"dt = {cfg.dt:g} exceeds the stability bound {bound:g}")
    return float(cfg.dt)


def run(initial: FlowState, well: DoubleWell, u_eps: MollifiedTransport | None, cfg: SolverConfig,
        on_snapshot: Callable[[FlowState], None] | None = None) -> Trajectory:
    """Step to ``cfg.t_end`` landing exactly on every snapshot time.

    The initial state is always the first snapshot.  Step sizes are shrunk
    uniformly inside each inter-snapshot window so no step overshoots.
    """
    phi0 = initial.phi
    check_eps_h(phi0.epsilon, phi0.grid.h)
    dt_max = resolve_dt(phi0, well, u_eps, cfg)
    targets = sorted({float(t) for t in cfg.snapshot_times if t > initial.t} | {float(cfg.t_end)})
    targets = [t for t in targets if t > initial.t]

    state = initial.copy()
    snaps = [state.copy()]
    if on_snapshot:
        on_snapshot(snaps[0])
    times = [state.t]
    energies = [total_energy(state.phi, well)] if cfg.record_energy else []
    work = [0.0]
    for target in targets:
        span = target - state.t
        n = max(1, math.ceil(span / dt_max * (1 - 1e-12)))
        dt = span / n
        for k in range(n):
            if cfg.record_energy:
                power = transport_power(state.phi, _velocity(u_eps, state.t + 0.5 * dt))
            state = step(state, well, u_eps, cfg, dt)
            if k == n - 1:
                state.t = target
            times.append(state.t)
            if cfg.record_energy:
                energies.append(total_energy(state.phi, well))
                work.append(power * dt)
        snaps.append(state.copy())
        if on_snapshot:
            on_snapshot(snaps[-1])
    return Trajectory(snaps, np.asarray(times), np.asarray(energies), np.asarray(work), dt_max)
