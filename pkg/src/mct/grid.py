"""Periodic lattice on the unit torus and its discrete operators.

Scalar fields are numpy arrays of shape ``grid.shape``; vector fields carry a
leading component axis, shape ``(dim,) + grid.shape``.  Cell ``i`` has its
center at ``(i + 1/2) h`` along every axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import GridMismatch, RadiusTooLarge


def unit_ball_volume(dim: int) -> float:
    """Lebesgue measure of the unit ball in R^dim (omega_0 = 1)."""
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)


def minimal_image(delta):
    """Wrap coordinate differences into [-1/2, 1/2)."""
    return (np.asarray(delta, dtype=float) + 0.5) % 1.0 - 0.5


@dataclass(frozen=True)
class PeriodicGrid:
    dim: int
    resolution: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        if self.resolution < 16:
            raise ValueError("resolution must be at least 16")

    @property
    def h(self) -> float:
        return 1.0 / self.resolution

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.resolution,) * self.dim

    @property
    def size(self) -> int:
        return self.resolution ** self.dim

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @cached_property
    def axes(self) -> np.ndarray:
        return (np.arange(self.resolution) + 0.5) * self.h

    def coords(self) -> np.ndarray:
        """Cell-center coordinates, shape ``(dim,) + shape``."""
        return np.stack(np.meshgrid(*([self.axes] * self.dim), indexing="ij"))

    def points(self) -> np.ndarray:
        """Cell centers as an ``(size, dim)`` array in row-major order."""
        return self.coords().reshape(self.dim, -1).T

    def check(self, f: np.ndarray, vector: bool = False) -> None:
        want = ((self.dim,) if vector else ()) + self.shape
        if f.shape != want:
            raise GridMismatch(f"field shape {f.shape} does not match grid {want}")

    # -- operators -------------------------------------------------------

    def gradient(self, f: np.ndarray) -> np.ndarray:
        """Second-order central differences with periodic wrap."""
        self.check(f)
        return _kernels.central_gradient(f, self.h)

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        """Compact (2 dim + 1)-point Laplacian."""
        self.check(f)
        return _kernels.laplacian(f, self.h)

    def forward_gradient(self, f: np.ndarray) -> np.ndarray:
        """Forward differences, living on the cell faces ``x + h/2 e_k``."""
        self.check(f)
        return np.stack([(np.roll(f, -1, ax) - f) / self.h for ax in range(self.dim)])

    def backward_divergence(self, v: np.ndarray) -> np.ndarray:
        """Divergence of a face-centred field; adjoint partner of ``forward_gradient``."""
        self.check(v, vector=True)
        return sum((v[ax] - np.roll(v[ax], 1, ax)) / self.h for ax in range(self.dim))

    def divergence(self, v: np.ndarray) -> np.ndarray:
        self.check(v, vector=True)
        return sum((np.roll(v[ax], -1, ax) - np.roll(v[ax], 1, ax)) / (2.0 * self.h)
                   for ax in range(self.dim))

    def grad_sq(self, f: np.ndarray) -> np.ndarray:
        """Cell-wise squared gradient, averaged over the adjacent faces."""
        self.check(f)
        return _kernels.edge_grad_sq(f, self.h)

    def integrate(self, f: np.ndarray) -> float:
        return float(np.sum(f) * self.cell_volume)

    # -- ball geometry ---------------------------------------------------

    def periodic_distance(self, center) -> np.ndarray:
        """Minimal-image distance from every cell center to ``center``."""
        c = np.asarray(center, dtype=float).reshape(self.dim)
        sq = np.zeros(self.shape)
        for ax in range(self.dim):
            d = minimal_image(self.axes - c[ax]) ** 2
            sq = sq + d.reshape([-1 if k == ax else 1 for k in range(self.dim)])
        return np.sqrt(sq)

    def ball_mask(self, center, r: float) -> np.ndarray:
        if r > 0.5:
            raise RadiusTooLarge(f"radius {r} exceeds 1/2 on the unit torus")
        return self.periodic_distance(center) < r

    def ball_cells(self, center, r: float) -> np.ndarray:
        """Flat row-major indices of cells whose centers lie within distance ``r``."""
        return np.flatnonzero(self.ball_mask(center, r))

    def ball_stencil_sum(self, f: np.ndarray, r: float) -> np.ndarray:
        """``sum_{B_r(x)} f`` for every cell center ``x`` at once (circular convolution)."""
        if r > 0.5:
            raise RadiusTooLarge(f"radius {r} exceeds 1/2 on the unit torus")
        kernel = self.ball_mask(np.full(self.dim, 0.5 * self.h), r).astype(float)
        out = np.fft.irfftn(np.fft.rfftn(f) * np.fft.rfftn(kernel), s=self.shape, axes=tuple(range(self.dim)))
        return out

    def cell_of(self, point) -> tuple[int, ...]:
        p = np.asarray(point, dtype=float) % 1.0
        return tuple(int(v) % self.resolution for v in np.floor(p / self.h))
