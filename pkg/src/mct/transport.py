"""Transport fields u, their mixed Sobolev norms, and mollified u_eps."""
from __future__ import annotations

import glob
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GridMismatch, InvalidExponents, SupBoundViolated
from .fielddump import read_field
from .grid import PeriodicGrid, minimal_image

ANALYTIC_KINDS = ("zero", "constant", "shear", "oscillating_shear", "rotation", "rough_radial")
STEADY_KINDS = ("zero", "constant", "shear", "rotation", "rough_radial")


def check_exponents(p: float, q: float, dim: int) -> None:
    """Integrability window for (p, q): 2 < q < inf, nq / (2(q-1)) < p, p >= 4/3 if n = 2."""
    problems = []
    if not (2.0 < q < math.inf):
        problems.append(f"q = {q} must satisfy 2 < q < inf")
    elif not dim * q / (2.0 * (q - 1.0)) < p:
        problems.append(f"p = {p} must exceed n q / (2 (q - 1)) = {dim * q / (2 * (q - 1)):.4g}")
    if dim == 2 and p < 4.0 / 3.0:
        problems.append(f"p = {p} must be >= 4/3 in dimension 2")
    if problems:
        raise InvalidExponents("; ".join(problems))


def hat_p(p: float, q: float, dim: int) -> float:
    """Time exponent of the transport contribution to the monotonicity bound."""
    if p < dim:
        return (2.0 * p * q - 2.0 * p - dim * q) / (p * q)
    # for p == n any exponent below (q-2)/q works; report the supremum
    return (q - 2.0) / q


def _smooth_cutoff(r, r_in, r_out):
    t = np.clip((r - r_in) / (r_out - r_in), 0.0, 1.0)
    return 1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)


@dataclass(frozen=True)
class TransportSpec:
    kind: str = "zero"
    params: dict = field(default_factory=dict)
    p: float = 4.0
    q: float = 4.0
    times: tuple = ()
    samples: tuple = ()

    def __post_init__(self):
        if self.kind not in ANALYTIC_KINDS + ("sampled",):
            raise ValueError(f"unknown transport kind {self.kind!r}")
        if self.kind == "sampled" and len(self.times) != len(self.samples):
            raise ValueError("sampled transport needs one sample per time knot")

    @property
    def steady(self) -> bool:
        return self.kind in STEADY_KINDS or (self.kind == "sampled" and len(self.times) == 1)

    @property
    def is_zero(self) -> bool:
        if self.kind == "zero":
            return True
        if self.kind == "constant":
            return not np.any(np.asarray(self.params.get("velocity", 0.0), dtype=float))
        return False

    def validate(self, dim: int) -> None:
        check_exponents(self.p, self.q, dim)
        if self.kind in ("shear", "oscillating_shear", "rotation") and dim < 2:
            raise ValueError(f"{self.kind} transport needs dim >= 2")
        if self.kind == "constant" and len(np.atleast_1d(self.params.get("velocity", [0.0] * dim))) != dim:
            raise ValueError("constant velocity must have dim components")

    def sample(self, grid: PeriodicGrid, t: float) -> np.ndarray:
        """Field at time ``t`` on the cell centers, shape ``(dim,) + grid.shape``."""
        dim = grid.dim
        out = np.zeros((dim,) + grid.shape)
        prm = self.params
        if self.kind == "zero":
            return out
        if self.kind == "constant":
            v = np.atleast_1d(np.asarray(prm.get("velocity", [0.0] * dim), dtype=float))
            for k in range(dim):
                out[k] = v[k]
            return out
        if self.kind == "sampled":
            return self._interp(grid, t)
        x = grid.coords()
        amp = float(prm.get("amplitude", 1.0))
        if self.kind in ("shear", "oscillating_shear"):
            out[0] = amp * np.sin(2.0 * math.pi * x[1])
            if self.kind == "oscillating_shear":
                out[0] *= math.cos(2.0 * math.pi * float(prm.get("frequency", 1.0)) * t)
            return out
        center = np.asarray(prm.get("center", [0.5] * dim), dtype=float)
        rel = np.stack([minimal_image(x[k] - center[k]) for k in range(dim)])
        if self.kind == "rotation":
            r = np.sqrt(rel[0] ** 2 + rel[1] ** 2)
            chi = _smooth_cutoff(r, float(prm.get("r_in", 0.3)), float(prm.get("r_out", 0.45)))
            omega = float(prm.get("omega", 1.0))
            out[0] = -omega * rel[1] * chi
            out[1] = omega * rel[0] * chi
            return out
        # rough_radial: A |r|^a r/|r|, cut off smoothly before the wrap seam
        r = np.sqrt((rel ** 2).sum(axis=0))
        a = float(prm.get("exponent", 0.5))
        chi = _smooth_cutoff(r, float(prm.get("r_in", 0.3)), float(prm.get("r_out", 0.45)))
        with np.errstate(invalid="ignore", divide="ignore"):
            mag = np.where(r > 0.0, amp * r ** (a - 1.0) * chi, 0.0)
        return rel * mag

    def _interp(self, grid, t):
        times = np.asarray(self.times, dtype=float)
        for s in self.samples:
            if s.shape != (grid.dim,) + grid.shape:
                raise GridMismatch("sampled transport does not match the grid")
        if len(times) == 1 or t <= times[0]:
            return np.array(self.samples[0], dtype=float)
        if t >= times[-1]:
            return np.array(self.samples[-1], dtype=float)
        j = int(np.searchsorted(times, t, side="right")) - 1
        w = (t - times[j]) / (times[j + 1] - times[j])
        return (1.0 - w) * self.samples[j] + w * self.samples[j + 1]


def load_sampled(pattern, p: float = 4.0, q: float = 4.0) -> TransportSpec:
    """Build a sampled field from raw dumps.

    Files are grouped by the time in their header; within one time the
    components are ordered by file name (e.g. ``u_t0_c0.pfmf``, ``u_t0_c1.pfmf``).
    """
    paths = sorted(glob.glob(str(pattern))) if isinstance(pattern, (str, Path)) else sorted(map(str, pattern))
    if not paths:
        raise FileNotFoundError(f"no field dumps match {pattern}")
    by_time: dict[float, list] = {}
    for path in paths:
        dump = read_field(path)
        by_time.setdefault(dump.time, []).append(dump.data)
    times = sorted(by_time)
    samples = []
    for t in times:
        comps = by_time[t]
        if len(comps) != comps[0].ndim:
            raise ValueError(f"time {t}: expected {comps[0].ndim} components, found {len(comps)}")
        samples.append(np.stack(comps))
    return TransportSpec("sampled", {}, p, q, tuple(times), tuple(samples))


# ---------------------------------------------------------------------------

def jacobian(grid: PeriodicGrid, u: np.ndarray) -> np.ndarray:
    return np.stack([grid.gradient(u[c]) for c in range(grid.dim)])


def w1p_integral(grid: PeriodicGrid, u: np.ndarray, p: float) -> float:
    """int |u|^p + |grad u|^p dx with the Frobenius norm for grad u."""
    mag = np.sqrt((u ** 2).sum(axis=0))
    jac = np.sqrt((jacobian(grid, u) ** 2).sum(axis=(0, 1)))
    return grid.integrate(mag ** p + jac ** p)


def sobolev_norm_of(sample, grid: PeriodicGrid, T: float, p: float, q: float,
                    knots=None, n_slices: int = 64) -> float:
    """(int_0^T (int |u|^p + |grad u|^p)^{q/p} dt)^{1/q} for ``sample(t) -> field``.

    ``knots`` selects the trapezoid rule on given times; otherwise a midpoint
    rule on ``n_slices`` uniform slices is used.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    if knots is not None:
        ts = np.asarray([t for t in knots if 0.0 <= t <= T], dtype=float)
        if ts.size == 0 or ts[0] > 0.0:
            ts = np.concatenate([[0.0], ts])
        if ts[-1] < T:
            ts = np.concatenate([ts, [T]])
        vals = np.array([w1p_integral(grid, sample(t), p) ** (q / p) for t in ts])
        total = float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(ts)))
    else:
        dt = T / n_slices
        mids = (np.arange(n_slices) + 0.5) * dt
        total = float(sum(w1p_integral(grid, sample(t), p) ** (q / p) for t in mids) * dt)
    return total ** (1.0 / q)


def sobolev_norm(u: TransportSpec, T: float, grid: PeriodicGrid, n_slices: int = 64) -> float:
    """Mixed norm of ``u`` in L^q([0, T]; W^{1,p})."""
    if u.is_zero:
        return 0.0
    if u.steady:
        val = w1p_integral(grid, u.sample(grid, 0.0), u.p)
        return (val ** (u.q / u.p) * T) ** (1.0 / u.q)
    knots = u.times if u.kind == "sampled" else None
    return sobolev_norm_of(lambda t: u.sample(grid, t), grid, T, u.p, u.q, knots, n_slices)


def gaussian_mollify(grid: PeriodicGrid, u: np.ndarray, std: float) -> np.ndarray:
    """Convolve each component with the periodic Gaussian of standard deviation ``std``."""
    freqs = [np.fft.fftfreq(grid.resolution, d=grid.h)] * (grid.dim - 1)
    freqs.append(np.fft.rfftfreq(grid.resolution, d=grid.h))
    k2 = sum(np.meshgrid(*[f ** 2 for f in freqs], indexing="ij"))
    mult = np.exp(-2.0 * math.pi ** 2 * std ** 2 * k2)
    axes = tuple(range(1, grid.dim + 1))
    spec = np.fft.rfftn(u, axes=axes) * mult
    return np.fft.irfftn(spec, s=grid.shape, axes=axes)


@dataclass
class MollifiedTransport:
    base: TransportSpec
    epsilon: float
    grid: PeriodicGrid
    beta: float
    std: float
    T: float
    check_times: np.ndarray
    sup_u: float
    sup_grad: float
    note: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def is_zero(self) -> bool:
        return self.base.is_zero

    @property
    def max_speed(self) -> float:
        return self.sup_u

    def at(self, t: float) -> np.ndarray | None:
        """u_eps(., t) on the grid, ``None`` for the zero field."""
        if self.is_zero:
            return None
        key = 0.0 if self.base.steady else float(t)
        hit = self._cache.get(key)
        if hit is None:
            hit = gaussian_mollify(self.grid, self.base.sample(self.grid, key), self.std)
            if not self.base.steady and len(self._cache) > 64:
                self._cache.clear()
            self._cache[key] = hit
        return hit

    @property
    def bound_u(self) -> float:
        return self.epsilon ** (-self.beta)

    @property
    def bound_grad(self) -> float:
        return self.epsilon ** (-(self.beta + 1.0))


def mollify(u: TransportSpec, epsilon: float, grid: PeriodicGrid, T: float,
            beta: float = 0.25, n_check: int = 65) -> MollifiedTransport:
    """Gaussian-mollify ``u`` at scale max(h, eps^(1+beta)) and verify the sup bounds."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if not 0.0 < beta < 0.5:
        raise ValueError("beta must lie in (0, 1/2)")
    std = max(grid.h, epsilon ** (1.0 + beta))
    if u.steady:
        check_times = np.array([0.0])
    elif u.kind == "sampled":
        check_times = np.asarray([t for t in u.times if t <= T] or [u.times[0]], dtype=float)
    else:
        check_times = np.linspace(0.0, T, n_check)
    out = MollifiedTransport(u, epsilon, grid, beta, std, T, check_times, 0.0, 0.0)
    if u.kind == "sampled":
        out.note = "gradient bound checked on grid points only; sub-grid violations undetectable"
    if u.is_zero:
        return out
    sup_u = sup_g = 0.0
    for t in check_times:
        f = out.at(t)
        sup_u = max(sup_u, float(np.sqrt((f ** 2).sum(axis=0)).max()))
        sup_g = max(sup_g, float(np.sqrt((jacobian(grid, f) ** 2).sum(axis=(0, 1))).max()))
    out.sup_u, out.sup_grad = sup_u, sup_g
    if sup_u > out.bound_u or sup_g > out.bound_grad:
        raise SupBoundViolated(
            f"sup|u_eps| = {sup_u:.4g} (bound {out.bound_u:.4g}), "
            f"sup|grad u_eps| = {sup_g:.4g} (bound {out.bound_grad:.4g}) at eps = {epsilon:g}")
    return out
