"""Zero level set extraction, primitive fits, and local density estimates."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InvalidGeometry, MultipleLoops, NoInterface, RadiusTooLarge, RadiusTooSmall
from .grid import minimal_image, unit_ball_volume
from .initial import PhaseField
from .measures import MeasureField

TIE_SHIFT = 1e-12


@dataclass
class InterfaceMesh:
    dim: int
    vertices: np.ndarray     # (k, dim) positions in [0, 1)
    cells: np.ndarray        # (m, 2) segments or (m, 3) triangles, vertex indices
    component: np.ndarray    # loop / patch id per vertex
    measure: float           # total length (dim 2) or area (dim 3)

    @property
    def n_components(self) -> int:
        return int(self.component.max()) + 1 if self.component.size else 0

    def component_vertices(self, cid: int) -> np.ndarray:
        return self.vertices[self.component == cid]


def _untie(data: np.ndarray) -> np.ndarray:
    return np.where(data == 0.0, TIE_SHIFT, data)


# corner offsets of a square, counter-clockwise
_CORNERS = ((0, 0), (1, 0), (1, 1), (0, 1))
# edges as corner pairs: bottom, right, top, left
_EDGES = ((0, 1), (1, 2), (3, 2), (0, 3))
_CORNER_EDGES = ((3, 0), (0, 1), (1, 2), (2, 3))


def _edge_key(i, j, n, corner_a, corner_b):
    """Canonical id of the lattice edge between two corners of square (i, j)."""
    (ai, aj), (bi, bj) = _CORNERS[corner_a], _CORNERS[corner_b]
    pi, pj = (i + ai) % n, (j + aj) % n
    axis = 0 if aj == bj else 1
    return (axis, pi, pj)


def _marching_squares(data: np.ndarray, h: float) -> InterfaceMesh:
    n = data.shape[0]
    pos = data > 0.0
    corners = [np.roll(np.roll(pos, -ci, 0), -cj, 1) for ci, cj in _CORNERS]
    code = sum(c.astype(np.int8) << k for k, c in enumerate(corners))
    ii, jj = np.nonzero((code != 0) & (code != 15))
    vid: dict[tuple, int] = {}
    verts: list = []
    segs: list = []

    def vertex(i, j, ca, cb):
        key = _edge_key(i, j, n, ca, cb)
        if key not in vid:
            (ai, aj), (bi, bj) = _CORNERS[ca], _CORNERS[cb]
            fa = data[(i + ai) % n, (j + aj) % n]
            fb = data[(i + bi) % n, (j + bj) % n]
            w = fa / (fa - fb)
            p = np.array([i + ai + w * (bi - ai), j + aj + w * (bj - aj)], dtype=float)
            vid[key] = len(verts)
            verts.append(((p + 0.5) * h) % 1.0)
        return vid[key]

    for i, j in zip(ii.tolist(), jj.tolist()):
        c = int(code[i, j])
        signs = [(c >> k) & 1 for k in range(4)]
        crossed = [e for e, (a, b) in enumerate(_EDGES) if signs[a] != signs[b]]
        if len(crossed) == 2:
            pairs = [tuple(crossed)]
        else:
            centre = 0.25 * sum(data[(i + ci) % n, (j + cj) % n] for ci, cj in _CORNERS) > 0.0
            lone = [k for k in range(4) if bool(signs[k]) != centre]
            pairs = [_CORNER_EDGES[k] for k in lone]
        for ea, eb in pairs:
            segs.append((vertex(i, j, *_EDGES[ea]), vertex(i, j, *_EDGES[eb])))

    vertices = np.array(verts).reshape(-1, 2)
    cells = np.array(segs, dtype=np.int64).reshape(-1, 2)
    degree = np.bincount(cells.ravel(), minlength=len(vertices))
    if np.any(degree != 2):
        raise InvalidGeometry("marching squares produced a non-manifold curve")
    comp = _components(len(vertices), cells)
    d = minimal_image(vertices[cells[:, 1]] - vertices[cells[:, 0]])
    length = float(np.sum(np.sqrt((d ** 2).sum(axis=1))))
    return InterfaceMesh(2, vertices, cells, comp, length)


def _components(nv: int, cells: np.ndarray) -> np.ndarray:
    rows = np.repeat(cells[:, 0], cells.shape[1] - 1)
    cols = cells[:, 1:].ravel()
    adj = coo_matrix((np.ones(rows.size), (rows, cols)), shape=(nv, nv))
    _, labels = connected_components(adj, directed=False)
    # renumber by first appearance so ids are deterministic
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    remap = np.empty_like(order)
    remap[order] = np.arange(order.size)
    return remap[labels]


def _marching_cubes(data: np.ndarray, h: float) -> InterfaceMesh:
    from skimage.measure import marching_cubes

    n = data.shape[0]
    padded = np.pad(data, ((0, 1),) * 3, mode="wrap")
    verts, faces, _, _ = marching_cubes(padded, level=0.0, spacing=(h, h, h), allow_degenerate=False)
    a, b, c = (verts[faces[:, k]] for k in range(3))
    area = 0.5 * float(np.sum(np.linalg.norm(np.cross(b - a, c - a), axis=1)))
    # merge seam duplicates so components are counted on the torus
    wrapped = (verts + 0.5 * h) % 1.0
    keys = np.round(wrapped / h * 4096).astype(np.int64) % (4096 * n)
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    uniq = np.zeros((inverse.max() + 1, 3))
    uniq[inverse] = wrapped
    tri = inverse[faces]
    comp = _components(len(uniq), tri)
    return InterfaceMesh(3, uniq, tri, comp, area)


def extract_interface(phi: PhaseField) -> InterfaceMesh:
    """Zero set of phi by marching squares (dim 2) or marching cubes (dim 3)."""
    data = _untie(phi.data)
    if np.all(data > 0) or np.all(data < 0):
        raise NoInterface("phi has one sign everywhere")
    if phi.grid.dim == 2:
        return _marching_squares(data, phi.grid.h)
    if phi.grid.dim == 3:
        return _marching_cubes(data, phi.grid.h)
    raise InvalidGeometry("interface extraction needs dim 2 or 3")


def _circular_mean(points: np.ndarray) -> np.ndarray:
    ang = 2.0 * math.pi * points
    return (np.arctan2(np.sin(ang).mean(axis=0), np.cos(ang).mean(axis=0)) / (2.0 * math.pi)) % 1.0


def _unwrap(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ref = _circular_mean(points)
    return ref + minimal_image(points - ref), ref


def _kasa(points: np.ndarray):
    a = np.column_stack([2.0 * points, np.ones(len(points))])
    rhs = (points ** 2).sum(axis=1)
    sol, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    center = sol[:-1]
    radius = math.sqrt(sol[-1] + float(center @ center))
    resid = np.linalg.norm(points - center, axis=1) - radius
    return center, radius, float(np.sqrt(np.mean(resid ** 2)))


def _fit(mesh: InterfaceMesh, dim: int):
    if mesh.dim != dim:
        raise InvalidGeometry(f"fit needs a dim-{dim} mesh")
    if mesh.n_components != 1:
        raise MultipleLoops(f"mesh has {mesh.n_components} components")
    pts, _ = _unwrap(mesh.vertices)
    center, radius, rms = _kasa(pts)
    return center % 1.0, radius, rms


def fit_circle(mesh: InterfaceMesh):
    """Least-squares circle (center, radius, rms residual) for a single loop."""
    return _fit(mesh, 2)


def fit_sphere(mesh: InterfaceMesh):
    return _fit(mesh, 3)


def fit_points(points: np.ndarray):
    """Circle or sphere fit of raw torus points, unwrapped around their circular mean."""
    pts, _ = _unwrap(np.asarray(points, dtype=float))
    center, radius, rms = _kasa(pts)
    return center % 1.0, radius, rms


@dataclass(frozen=True)
class DensityEstimate:
    center: tuple
    radius: float
    theta_hat: float
    nearest_integer: int
    deviation: float


def density_estimate(m: MeasureField, sigma: float, center, radius: float) -> DensityEstimate:
    """theta_hat = mu(B_r(center)) / (sigma omega_{n-1} r^{n-1})."""
    if radius < 5.0 * m.epsilon * (1 - 1e-12):
        raise RadiusTooSmall(f"radius {radius:g} is below 5 eps = {5 * m.epsilon:g}")
    if radius > 0.25:
        raise RadiusTooLarge(f"radius {radius:g} exceeds 0.25")
    g = m.grid
    mass = m.mass(g.ball_mask(center, radius))
    theta = mass / (sigma * unit_ball_volume(g.dim - 1) * radius ** (g.dim - 1))
    k = int(round(theta))
    return DensityEstimate(tuple(float(c) for c in np.asarray(center).ravel()), float(radius),
                           float(theta), k, float(theta - k))


def export_mesh_csv(mesh: InterfaceMesh, path) -> Path:
    """Vertices with their loop/patch id, 17 significant digits."""
    path = Path(path)
    names = ["x", "y", "z"][: mesh.dim]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["component"])
        for v, c in zip(mesh.vertices, mesh.component):
            w.writerow([f"{x:.17g}" for x in v] + [int(c)])
    return path


def interface_filename(t: float) -> str:
    return f"interface_t{t:.6g}.csv"
