"""Initial phase fields: truncated signed distance composed with the standing wave."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import EpsilonGridMismatch, InvalidGeometry, TruncationTooTight
from .grid import PeriodicGrid, minimal_image, unit_ball_volume
from .potential import Profile

CLEARANCE = 0.1
KINDS = ("circle", "sphere", "two_circles", "annulus", "graph")


@dataclass
class PhaseField:
    grid: PeriodicGrid
    data: np.ndarray
    epsilon: float

    def __post_init__(self):
        self.grid.check(self.data)

    def copy(self) -> "PhaseField":
        return PhaseField(self.grid, self.data.copy(), self.epsilon)


def _radial(x, center):
    c = np.asarray(center, dtype=float)
    rel = [minimal_image(x[k] - c[k]) for k in range(len(c))]
    return np.sqrt(sum(r * r for r in rel))


def _sphere_area(dim, r):
    return dim * unit_ball_volume(dim) * r ** (dim - 1)


@dataclass(frozen=True)
class Geometry:
    """A smooth closed hypersurface on the torus, inside positive.

    ``graph`` is the band ``{g(x2) < x1 < g(x2) + width}`` (dim 2) whose two
    sheets are copies of one periodic height profile.
    """

    kind: str
    dim: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidGeometry(f"unknown geometry kind {self.kind!r}")
        self._validate()

    # -- constructors ----------------------------------------------------

    @classmethod
    def circle(cls, center=(0.5, 0.5), r0=0.25):
        return cls("circle", len(center), {"center": tuple(map(float, center)), "r0": float(r0)})

    @classmethod
    def sphere(cls, center=(0.5, 0.5, 0.5), r0=0.25):
        return cls("sphere", len(center), {"center": tuple(map(float, center)), "r0": float(r0)})

    @classmethod
    def two_circles(cls, c1=(0.25, 0.5), r1=0.125, c2=(0.75, 0.5), r2=0.125):
        return cls("two_circles", len(c1), {"c1": tuple(map(float, c1)), "r1": float(r1),
                                            "c2": tuple(map(float, c2)), "r2": float(r2)})

    @classmethod
    def annulus(cls, center=(0.5, 0.5), r_in=0.15, r_out=0.38):
        return cls("annulus", len(center), {"center": tuple(map(float, center)),
                                            "r_in": float(r_in), "r_out": float(r_out)})

    @classmethod
    def graph(cls, heights, width=0.5):
        return cls("graph", 2, {"heights": tuple(map(float, heights)), "width": float(width)})

    # -- validation ------------------------------------------------------

    def _validate(self):
        p = self.params
        if self.kind == "sphere" and self.dim != 3:
            raise InvalidGeometry("sphere needs a 3-D center")
        if self.kind in ("circle", "two_circles", "annulus") and self.dim not in (2, 3):
            raise InvalidGeometry(f"{self.kind} needs dim 2 or 3")
        if self.kind in ("circle", "sphere"):
            if p["r0"] <= 0 or 1.0 - 2.0 * p["r0"] < CLEARANCE:
                raise InvalidGeometry(f"radius {p['r0']} leaves less than {CLEARANCE} clearance across the wrap")
        elif self.kind == "two_circles":
            if min(p["r1"], p["r2"]) <= 0:
                raise InvalidGeometry("radii must be positive")
            if len(p["c2"]) != self.dim:
                raise InvalidGeometry("centers must have the same dimension")
            for r in (p["r1"], p["r2"]):
                if 1.0 - 2.0 * r < CLEARANCE:
                    raise InvalidGeometry(f"radius {r} leaves less than {CLEARANCE} clearance across the wrap")
            if self._pair_gap() <= 0.0:
                raise InvalidGeometry("two_circles closures must be disjoint")
        elif self.kind == "annulus":
            if not 0 < p["r_in"] < p["r_out"]:
                raise InvalidGeometry("annulus needs 0 < r_in < r_out")
            if 1.0 - 2.0 * p["r_out"] < CLEARANCE:
                raise InvalidGeometry(f"outer radius leaves less than {CLEARANCE} clearance across the wrap")
        else:
            w = p["width"]
            if len(p["heights"]) < 4:
                raise InvalidGeometry("graph needs at least 4 height samples")
            if not CLEARANCE <= w <= 1.0 - CLEARANCE:
                raise InvalidGeometry(f"band width must lie in [{CLEARANCE}, {1 - CLEARANCE}]")
            hs = np.asarray(p["heights"])
            if np.ptp(hs) > min(w, 1.0 - w) - CLEARANCE:
                raise InvalidGeometry("height oscillation makes the band sheets come too close")

    def _pair_gap(self):
        p = self.params
        d = np.sqrt(np.sum(minimal_image(np.subtract(p["c1"], p["c2"])) ** 2))
        return float(d - p["r1"] - p["r2"])

    # -- graph helpers ---------------------------------------------------

    def _height_spline(self, blur: float = 0.0):
        hs = np.asarray(self.params["heights"], dtype=float)
        m = hs.size
        if blur > 0.0:
            k = np.fft.rfftfreq(m, d=1.0 / m)
            hs = np.fft.irfft(np.fft.rfft(hs) * np.exp(-2.0 * math.pi ** 2 * blur ** 2 * k ** 2), n=m)
        nodes = np.arange(m + 1) / m
        return CubicSpline(nodes, np.append(hs, hs[0]), bc_type="periodic")

    def smoothed(self, h: float) -> "Geometry":
        """Graph heights blurred by a periodic Gaussian at scale 2h; other kinds unchanged."""
        if self.kind != "graph":
            return self
        spl = self._height_spline(blur=2.0 * h)
        m = len(self.params["heights"])
        return Geometry.graph(spl(np.arange(m) / m), self.params["width"])

    def _graph_curvature_max(self) -> float:
        spl = self._height_spline()
        s = np.linspace(0.0, 1.0, 4001)
        g1, g2 = spl(s, 1), spl(s, 2)
        return float(np.max(np.abs(g2) / (1.0 + g1 ** 2) ** 1.5))

    def _graph_sheet_distance(self, x1, x2, offset, spl, iters=30):
        """Unsigned distance to the curve x1 = g(s) + offset by Newton on s."""
        s = x2.copy()
        for _ in range(iters):
            dx = minimal_image(x1 - spl(s % 1.0) - offset)
            g1 = spl(s % 1.0, 1)
            g2 = spl(s % 1.0, 2)
            f = (s - x2) - dx * g1
            fp = 1.0 + g1 * g1 - dx * g2
            step = f / np.where(fp > 0.1, fp, 0.1)
            s = s - np.clip(step, -0.05, 0.05)
            if np.max(np.abs(step)) < 1e-14:
                break
        dx = minimal_image(x1 - spl(s % 1.0) - offset)
        return np.sqrt(dx ** 2 + (s - x2) ** 2)

    # -- geometry --------------------------------------------------------

    def signed_distance(self, x) -> np.ndarray:
        """Signed distance at points ``x`` of shape ``(dim, ...)``, positive inside."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.dim:
            raise InvalidGeometry(f"points have {x.shape[0]} coordinates, geometry has {self.dim}")
        p = self.params
        if self.kind in ("circle", "sphere"):
            return p["r0"] - _radial(x, p["center"])
        if self.kind == "two_circles":
            return np.maximum(p["r1"] - _radial(x, p["c1"]), p["r2"] - _radial(x, p["c2"]))
        if self.kind == "annulus":
            r = _radial(x, p["center"])
            return np.minimum(r - p["r_in"], p["r_out"] - r)
        spl = self._height_spline()
        w = p["width"]
        x1, x2 = x[0] % 1.0, x[1] % 1.0
        d = np.minimum(self._graph_sheet_distance(x1, x2, 0.0, spl),
                       self._graph_sheet_distance(x1, x2, w, spl))
        inside = ((x1 - spl(x2)) % 1.0) < w
        return np.where(inside, d, -d)

    @property
    def reach(self) -> float:
        """Distance from the surface to its medial axis, including wrap-around copies."""
        p = self.params
        if self.kind in ("circle", "sphere"):
            return min(p["r0"], 0.5 - p["r0"])
        if self.kind == "two_circles":
            return min(p["r1"], p["r2"], 0.5 - p["r1"], 0.5 - p["r2"], 0.5 * self._pair_gap())
        if self.kind == "annulus":
            return min(p["r_in"], 0.5 * (p["r_out"] - p["r_in"]), 0.5 - p["r_out"])
        kmax = self._graph_curvature_max()
        w = p["width"]
        band = 0.5 * min(w, 1.0 - w)
        return band if kmax <= 0 else min(band, 1.0 / kmax)

    def default_r_trunc(self) -> float:
        """Largest truncation radius whose plateau 2r/3 stays within the reach."""
        r = 1.5 * self.reach
        if self.kind == "graph":
            kmax = self._graph_curvature_max()
            if kmax > 0:
                r = min(r, 0.5 / kmax)
        return r

    @property
    def perimeter(self) -> float:
        """(n-1)-measure of the surface."""
        p = self.params
        n = self.dim
        if self.kind in ("circle", "sphere"):
            return _sphere_area(n, p["r0"])
        if self.kind == "two_circles":
            return _sphere_area(n, p["r1"]) + _sphere_area(n, p["r2"])
        if self.kind == "annulus":
            return _sphere_area(n, p["r_in"]) + _sphere_area(n, p["r_out"])
        spl = self._height_spline()
        s = np.linspace(0.0, 1.0, 20001)
        arc = np.sqrt(1.0 + spl(s, 1) ** 2)
        return 2.0 * float(np.trapezoid(arc, s))

    @property
    def volume(self) -> float:
        p = self.params
        n = self.dim
        if self.kind in ("circle", "sphere"):
            return unit_ball_volume(n) * p["r0"] ** n
        if self.kind == "two_circles":
            return unit_ball_volume(n) * (p["r1"] ** n + p["r2"] ** n)
        if self.kind == "annulus":
            return unit_ball_volume(n) * (p["r_out"] ** n - p["r_in"] ** n)
        return p["width"]


def _blend(t):
    # C^2 step with g(0) = 0, g(1) = 1/2, g'(0) = 1, g'(1) = g''(0) = g''(1) = 0
    return t - t ** 3 + 0.5 * t ** 4


@dataclass(frozen=True)
class TruncatedDistance:
    geometry: Geometry
    r_trunc: float

    def __post_init__(self):
        if self.r_trunc <= 0:
            raise InvalidGeometry("r_trunc must be positive")

    def apply(self, d):
        """Monotone clamp of ``d``: identity on |d| <= r/3, constant +-r/2 beyond 2r/3."""
        d = np.asarray(d, dtype=float)
        third = self.r_trunc / 3.0
        a = np.abs(d)
        t = np.clip((a - third) / third, 0.0, 1.0)
        mag = np.where(a <= third, a, third + third * _blend(t))
        return np.sign(d) * mag

    def __call__(self, x):
        return self.apply(self.geometry.signed_distance(x))


@dataclass(frozen=True)
class InitialReport:
    r_trunc: float
    xi_plus_sup: float
    xi_bound: float
    grad_scaled_sup: float
    hess_scaled_sup: float


def build_initial_field(geometry: Geometry, profile: Profile, epsilon: float, grid: PeriodicGrid,
                        r_trunc: float | None = None) -> PhaseField:
    """phi_0 = Psi(d~ / eps) on the cell centers."""
    if geometry.dim != grid.dim:
        raise InvalidGeometry(f"geometry dim {geometry.dim} != grid dim {grid.dim}")
    if epsilon < 2.0 * grid.h * (1.0 - 1e-12):
        raise EpsilonGridMismatch(f"epsilon {epsilon:g} is below 2h = {2 * grid.h:g}")
    geometry = geometry.smoothed(grid.h)
    if r_trunc is None:
        r_trunc = geometry.default_r_trunc()
    if epsilon > r_trunc / 10.0 * (1.0 + 1e-12):
        raise TruncationTooTight(f"epsilon {epsilon:g} exceeds r_trunc/10 = {r_trunc / 10:g}")
    dt = TruncatedDistance(geometry, r_trunc)
    data = profile.psi(dt(grid.coords()) / epsilon)
    return PhaseField(grid, np.asarray(data, dtype=float), float(epsilon))


def initial_report(phi: PhaseField, profile: Profile, r_trunc: float, beta: float = 0.25) -> InitialReport:
    """Discrete checks on phi_0: sup of the positive discrepancy and scaled derivative sizes."""
    g, eps = phi.grid, phi.epsilon
    w = profile.well.value(phi.data)
    xi = 0.5 * eps * g.grad_sq(phi.data) - w / eps
    grad = np.sqrt((g.gradient(phi.data) ** 2).sum(axis=0))
    return InitialReport(r_trunc, float(max(xi.max(), 0.0)), eps ** (-beta),
                         float(eps * grad.max()), float(eps * eps * np.abs(g.laplacian(phi.data)).max()))
