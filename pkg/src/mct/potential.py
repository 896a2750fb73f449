"""Double-well potentials, the standing-wave profile and the BV map."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, interpolate

from .errors import IntegrationFailure, InvalidWell, QuadratureFailure

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class DoubleWell:
    """A W-shaped potential on [-1, 1] with non-degenerate minima at +-1.

    ``value``, ``d1`` and ``d2`` are vectorised callables.  ``gamma`` is the
    location of the interior maximum; ``d2 >= kappa`` on ``alpha <= |s| <= 1``.
    """

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]
    gamma: float
    alpha: float
    kappa: float
    closed_form: bool = False

    def __post_init__(self):
        validate_well(self)

    @property
    def d2_max(self) -> float:
        """max |W''| on [-1, 1], used by the time-step bound."""
        s = np.linspace(-1.0, 1.0, 20001)
        return float(np.max(np.abs(self.d2(s))))

    def scaled(self, c: float) -> "DoubleWell":
        if c <= 0:
            raise InvalidWell("scale factor must be positive")
        v, a, b = self.value, self.d1, self.d2
        return DoubleWell(f"{c:g}*{self.name}", lambda s: c * v(s), lambda s: c * a(s),
                          lambda s: c * b(s), self.gamma, self.alpha, c * self.kappa)


def validate_well(well: DoubleWell) -> None:
    ends = np.array([-1.0, 1.0])
    if np.any(np.abs(well.value(ends)) > 1e-12) or np.any(np.abs(well.d1(ends)) > 1e-10):
        raise InvalidWell(f"{well.name}: W(+-1) and W'(+-1) must vanish")
    if not -1.0 < well.gamma < 1.0:
        raise InvalidWell(f"{well.name}: gamma must lie in (-1, 1)")
    if not (0.0 < well.alpha < 1.0 and well.kappa > 0.0):
        raise InvalidWell(f"{well.name}: need alpha in (0, 1) and kappa > 0")
    s = np.linspace(-1.0, 1.0, 20001)[1:-1]
    w = well.value(s)
    if np.any(w <= 0.0):
        raise InvalidWell(f"{well.name}: W must be positive on (-1, 1)")
    d1 = well.d1(s)
    # the sign condition is checked away from gamma, where d1 vanishes
    right = s > well.gamma + 1e-3
    left = s < well.gamma - 1e-3
    if np.any(d1[right] >= 0.0) or np.any(d1[left] <= 0.0):
        raise InvalidWell(f"{well.name}: W' must change sign only at gamma")
    outer = np.abs(np.linspace(-1.0, 1.0, 20001)) >= well.alpha
    if np.any(well.d2(np.linspace(-1.0, 1.0, 20001)[outer]) < well.kappa * (1 - 1e-12)):
        raise InvalidWell(f"{well.name}: W'' < kappa somewhere on |s| >= alpha")


def find_convexity_floor(d2: Callable, step: float = 1e-4) -> tuple[float, float]:
    """Scan ``d2`` on a ``step`` grid for an (alpha, kappa) pair."""
    a = np.arange(0.0, 1.0 + step / 2, step)
    m = np.minimum(d2(a), d2(-a))
    # running min from |s| = 1 inwards
    tail_min = np.minimum.accumulate(m[::-1])[::-1]
    positive = np.flatnonzero(tail_min > 0.0)
    if positive.size == 0 or a[positive[0]] >= 1.0:
        raise InvalidWell("no (alpha < 1, kappa > 0) pair exists")
    a_star = a[positive[0]]
    alpha = 0.5 * (a_star + 1.0)
    idx = int(round(alpha / step))
    kappa = float(tail_min[idx])
    if not (alpha < 1.0 and kappa > 0.0):
        raise InvalidWell("no (alpha < 1, kappa > 0) pair exists")
    return float(alpha), kappa


def _interior_max(d1: Callable) -> float:
    s = np.linspace(-1.0, 1.0, 200001)[1:-1]
    v = d1(s)
    idx = np.flatnonzero((v[:-1] > 0) & (v[1:] <= 0))
    if idx.size != 1:
        raise InvalidWell("W' must change sign exactly once in (-1, 1)")
    i = idx[0]
    return float(s[i] - v[i] * (s[i + 1] - s[i]) / (v[i + 1] - v[i]))


def make_quartic_well() -> DoubleWell:
    """W(s) = (1 - s^2)^2."""
    return DoubleWell(
        "quartic",
        lambda s: (1.0 - s * s) ** 2,
        lambda s: -4.0 * s * (1.0 - s * s),
        lambda s: -4.0 + 12.0 * s * s,
        gamma=0.0,
        alpha=0.9,
        kappa=-4.0 + 12.0 * 0.81,
        closed_form=True,
    )


def make_tilted_well(tilt: float = 0.3) -> DoubleWell:
    """W(s) = (1 - s^2)^2 (1 + tilt*s); asymmetric profile, same zero minima."""
    if not abs(tilt) < 1.0:
        raise InvalidWell("tilt must satisfy |tilt| < 1")

    def value(s):
        return (1.0 - s * s) ** 2 * (1.0 + tilt * s)

    def d1(s):
        return (1.0 - s * s) * (tilt - 4.0 * s - 5.0 * tilt * s * s)

    def d2(s):
        return -2.0 * s * (tilt - 4.0 * s - 5.0 * tilt * s * s) + (1.0 - s * s) * (-4.0 - 10.0 * tilt * s)

    alpha, kappa = find_convexity_floor(d2)
    return DoubleWell(f"tilted({tilt:g})", value, d1, d2, _interior_max(d1), alpha, kappa)


def load_table_well(path) -> DoubleWell:
    """Well from a two-column CSV of ``(s, W(s))`` samples, clamped cubic spline."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].strip().startswith("#"):
                continue
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except ValueError:
                continue  # header line
    if len(rows) < 5:
        raise InvalidWell(f"{path}: need at least 5 samples")
    data = np.array(sorted(rows))
    s, w = data[:, 0], data[:, 1]
    if s[0] != -1.0 or s[-1] != 1.0:
        raise InvalidWell(f"{path}: samples must span exactly [-1, 1]")
    if w[0] != 0.0 or w[-1] != 0.0:
        raise InvalidWell(f"{path}: W(+-1) must be 0")
    spline = interpolate.CubicSpline(s, w, bc_type=((1, 0.0), (1, 0.0)))
    d1s, d2s = spline.derivative(1), spline.derivative(2)

    def value(x):
        return spline(np.clip(x, -1.0, 1.0))

    def d1(x):
        return d1s(np.clip(x, -1.0, 1.0))

    def d2(x):
        return d2s(np.clip(x, -1.0, 1.0))

    alpha, kappa = find_convexity_floor(d2)
    return DoubleWell(f"table:{path}", value, d1, d2, _interior_max(d1), alpha, kappa)


def well_by_name(name: str) -> DoubleWell:
    if name == "quartic":
        return make_quartic_well()
    if name.startswith("tilted"):
        arg = name[len("tilted"):].strip("():")
        return make_tilted_well(float(arg) if arg else 0.3)
    if name.startswith("table:"):
        return load_table_well(name[len("table:"):])
    raise InvalidWell(f"unknown well {name!r}")


# ---------------------------------------------------------------------------

def _sqrt2w(well: DoubleWell):
    def f(s):
        return np.sqrt(2.0 * np.maximum(well.value(s), 0.0))
    return f


def surface_tension(well: DoubleWell) -> float:
    """sigma = int_{-1}^{1} sqrt(2 W(s)) ds."""
    f = _sqrt2w(well)
    val, err = integrate.quad(lambda s: float(f(np.float64(s))), -1.0, 1.0,
                              epsabs=0.0, epsrel=1e-13, limit=400)
    if not np.isfinite(val) or val <= 0.0 or err > 1e-10 * val:
        raise QuadratureFailure(f"sigma quadrature did not converge (estimate {err:.3e})")
    return float(val)


def bv_map(well: DoubleWell, sigma: float | None = None) -> Callable[[np.ndarray], np.ndarray]:
    """Phi(s) = sigma^{-1} int_{-1}^{s} sqrt(2W), with Phi(-1) = 0 and Phi(1) = 1."""
    if sigma is None:
        sigma = surface_tension(well)
    if well.closed_form and well.name == "quartic":
        c = SQRT2 / sigma

        def phi_quartic(s):
            s = np.clip(np.asarray(s, dtype=float), -1.0, 1.0)
            return c * (s - s ** 3 / 3.0 + 2.0 / 3.0)

        return phi_quartic

    f = _sqrt2w(well)
    nodes = np.linspace(-1.0, 1.0, 2001)
    gx, gw = np.polynomial.legendre.leggauss(10)
    lo, hi = nodes[:-1], nodes[1:]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    pts = mid[:, None] + half[:, None] * gx[None, :]
    pieces = (f(pts) * gw[None, :]).sum(axis=1) * half
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    total = cum[-1]
    if abs(total - sigma) > 1e-10 * sigma:
        raise QuadratureFailure("BV map table disagrees with sigma")
    table = interpolate.CubicHermiteSpline(nodes, cum / total, f(nodes) / total)

    def phi_generic(s):
        return table(np.clip(np.asarray(s, dtype=float), -1.0, 1.0))

    return phi_generic


@dataclass(frozen=True)
class Profile:
    """Standing wave psi with psi(0) = 0, its derivative, sigma and the BV map."""

    well: DoubleWell
    psi: Callable[[np.ndarray], np.ndarray]
    psi_prime: Callable[[np.ndarray], np.ndarray]
    sigma: float
    phi_map: Callable[[np.ndarray], np.ndarray]
    equipartition_residual: float = field(default=0.0)


def _tabulated_wave(well: DoubleWell, half_width: float = 12.0, spacing: float = 0.005):
    f = _sqrt2w(well)

    def rhs(_x, y):
        v = y[0]
        if v >= 1.0 or v <= -1.0:
            return [0.0]
        return [float(f(np.float64(v)))]

    xs_pos = np.arange(0.0, half_width + spacing / 2, spacing)
    branches = []
    for sign in (1.0, -1.0):
        sol = integrate.solve_ivp(rhs, (0.0, sign * half_width), [0.0], method="DOP853",
                                  t_eval=sign * xs_pos, rtol=1e-13, atol=1e-15, max_step=0.02)
        if not sol.success:
            raise IntegrationFailure(f"standing-wave ODE failed: {sol.message}")
        branches.append(sol.y[0])
    x = np.concatenate([-xs_pos[:0:-1], xs_pos])
    y = np.concatenate([branches[1][:0:-1], branches[0]])
    y = np.clip(y, -1.0, 1.0)
    yp = f(y)
    ypp = well.d1(y)
    poly = interpolate.BPoly.from_derivatives(x, np.column_stack([y, yp, ypp]))
    dpoly = poly.derivative()

    # exponential tails beyond the table, decay rate sqrt(W''(+-1))
    rates = {s: math.sqrt(float(well.d2(np.float64(s)))) for s in (1.0, -1.0)}
    gap_r = max(1.0 - y[-1], 0.0)
    gap_l = max(y[0] + 1.0, 0.0)

    def psi(xq):
        xq = np.asarray(xq, dtype=float)
        out = np.asarray(poly(np.clip(xq, -half_width, half_width)), dtype=float)
        hi = xq > half_width
        lo = xq < -half_width
        out = np.where(hi, 1.0 - gap_r * np.exp(-rates[1.0] * (xq - half_width)), out)
        out = np.where(lo, -1.0 + gap_l * np.exp(-rates[-1.0] * (-half_width - xq)), out)
        return out

    def psi_prime(xq):
        xq = np.asarray(xq, dtype=float)
        out = np.asarray(dpoly(np.clip(xq, -half_width, half_width)), dtype=float)
        hi = xq > half_width
        lo = xq < -half_width
        out = np.where(hi, rates[1.0] * gap_r * np.exp(-rates[1.0] * (xq - half_width)), out)
        out = np.where(lo, rates[-1.0] * gap_l * np.exp(-rates[-1.0] * (-half_width - xq)), out)
        return out

    return psi, psi_prime


def equipartition_residual(well: DoubleWell, psi, psi_prime, half_width=10.0, spacing=1e-3) -> float:
    x = np.arange(-half_width, half_width + spacing / 2, spacing)
    return float(np.max(np.abs(psi_prime(x) ** 2 - 2.0 * well.value(psi(x)))))


def standing_wave(well: DoubleWell, tol: float = 1e-10) -> Profile:
    """Solve psi' = sqrt(2 W(psi)), psi(0) = 0, and certify equipartition."""
    sigma = surface_tension(well)
    if well.closed_form and well.name == "quartic":
        def psi(x):
            return np.tanh(SQRT2 * np.asarray(x, dtype=float))

        def psi_prime(x):
            return SQRT2 / np.cosh(SQRT2 * np.asarray(x, dtype=float)) ** 2
    else:
        psi, psi_prime = _tabulated_wave(well)
    res = equipartition_residual(well, psi, psi_prime)
    if res > tol:
        raise IntegrationFailure(f"equipartition residual {res:.3e} exceeds {tol:.1e}")
    return Profile(well, psi, psi_prime, sigma, bv_map(well, sigma), res)
