"""Periodic stencil kernels.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy
version with identical semantics.  ``MCT_NUMBA=0`` in the environment
selects the numpy path at import time; ``MCT_THREADS`` caps numba workers.

All kernels work on arrays padded to three axes.  An inactive axis has
length 1, so its periodic neighbours are the cell itself and its stencil
contribution vanishes identically; one code path serves dim = 1, 2, 3.
"""
from __future__ import annotations

import os
from functools import lru_cache

import numpy as np


def _env_flag(name: str, default: bool) -> bool:
    raw = os.environ.get(name)
    if raw is None:
        return default
    return raw.strip().lower() not in ("0", "false", "no", "off", "")


try:
    import numba
    from numba import njit, prange
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

if numba is not None and "NUMBA_THREADING_LAYER" not in os.environ:
    # skip the TBB probe, which warns on older system TBB builds
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

USE_NUMBA = numba is not None and _env_flag("MCT_NUMBA", True)

if numba is not None and os.environ.get("MCT_THREADS"):
    numba.set_num_threads(max(1, min(int(os.environ["MCT_THREADS"]), numba.config.NUMBA_NUM_THREADS)))


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def as3d(a: np.ndarray) -> np.ndarray:
    """View ``a`` with trailing singleton axes so that ``a.ndim == 3``."""
    return a.reshape(a.shape + (1,) * (3 - a.ndim))


def _vec3d(u: np.ndarray) -> np.ndarray:
    return u.reshape(u.shape + (1,) * (4 - u.ndim))


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _np_laplacian(f, h):
    out = -2.0 * f.ndim * f
    for ax in range(f.ndim):
        out = out + np.roll(f, 1, ax) + np.roll(f, -1, ax)
    return out / (h * h)


def _np_central_gradient(f, h):
    return np.stack([(np.roll(f, -1, ax) - np.roll(f, 1, ax)) / (2.0 * h) for ax in range(f.ndim)])


def _np_advection(u, f, h, upwind):
    out = np.zeros_like(f)
    for ax in range(u.shape[0]):
        fp = np.roll(f, -1, ax)
        fm = np.roll(f, 1, ax)
        if upwind:
            d = np.where(u[ax] > 0.0, f - fm, fp - f) / h
        else:
            d = (fp - fm) / (2.0 * h)
        out = out + u[ax] * d
    return out


def _np_edge_grad_sq(f, h):
    out = np.zeros_like(f)
    for ax in range(f.ndim):
        d = (np.roll(f, -1, ax) - f) / h
        out = out + 0.5 * (d * d + np.roll(d, 1, ax) ** 2)
    return out


def _np_explicit_update(phi, dw, u, h, dt, inv_eps2, upwind):
    rate = _np_laplacian(phi, h) - inv_eps2 * dw
    if u is not None:
        rate = rate - _np_advection(u, phi, h, upwind)
    return phi + dt * rate


@lru_cache(maxsize=32)
def _cyclic_inverse(n: int, a: float) -> np.ndarray:
    eye = np.eye(n)
    mat = (1.0 + 2.0 * a) * eye - a * np.roll(eye, 1, 0) - a * np.roll(eye, -1, 0)
    return np.linalg.inv(mat)


def _np_cyclic_solve(f, a, axis):
    n = f.shape[axis]
    if n == 1:
        return f.copy()
    inv = _cyclic_inverse(n, float(a))
    moved = np.moveaxis(f, axis, 0)
    out = (inv @ moved.reshape(n, -1)).reshape(moved.shape)
    return np.ascontiguousarray(np.moveaxis(out, 0, axis))


# ---------------------------------------------------------------------------
# numba implementations (3-D padded arrays only)
# ---------------------------------------------------------------------------

if numba is not None:

    @njit(parallel=True, cache=True)
    def _nb_laplacian(f, h):
        n0, n1, n2 = f.shape
        out = np.empty_like(f)
        c = 1.0 / (h * h)
        for i in prange(n0):
            ip = (i + 1) % n0
            im = (i - 1) % n0
            for j in range(n1):
                jp = (j + 1) % n1
                jm = (j - 1) % n1
                for k in range(n2):
                    kp = (k + 1) % n2
                    km = (k - 1) % n2
                    out[i, j, k] = c * (f[ip, j, k] + f[im, j, k] + f[i, jp, k] + f[i, jm, k]
                                        + f[i, j, kp] + f[i, j, km] - 6.0 * f[i, j, k])
        return out

    @njit(parallel=True, cache=True)
    def _nb_central_gradient(f, h, dim):
        n0, n1, n2 = f.shape
        out = np.zeros((dim, n0, n1, n2))
        c = 0.5 / h
        for i in prange(n0):
            ip = (i + 1) % n0
            im = (i - 1) % n0
            for j in range(n1):
                jp = (j + 1) % n1
                jm = (j - 1) % n1
                for k in range(n2):
                    kp = (k + 1) % n2
                    km = (k - 1) % n2
                    out[0, i, j, k] = c * (f[ip, j, k] - f[im, j, k])
                    if dim > 1:
                        out[1, i, j, k] = c * (f[i, jp, k] - f[i, jm, k])
                    if dim > 2:
                        out[2, i, j, k] = c * (f[i, j, kp] - f[i, j, km])
        return out

    @njit(inline="always")
    def _nb_adv_term(u, f, i, j, k, ip, im, jp, jm, kp, km, h, upwind):
        dim = u.shape[0]
        acc = 0.0
        for ax in range(dim):
            if ax == 0:
                fp = f[ip, j, k]
                fm = f[im, j, k]
            elif ax == 1:
                fp = f[i, jp, k]
                fm = f[i, jm, k]
            else:
                fp = f[i, j, kp]
                fm = f[i, j, km]
            v = u[ax, i, j, k]
            if upwind:
                if v > 0.0:
                    d = (f[i, j, k] - fm) / h
                else:
                    d = (fp - f[i, j, k]) / h
            else:
                d = (fp - fm) / (2.0 * h)
            acc += v * d
        return acc

    @njit(parallel=True, cache=True)
    def _nb_advection(u, f, h, upwind):
        n0, n1, n2 = f.shape
        out = np.empty_like(f)
        for i in prange(n0):
            ip = (i + 1) % n0
            im = (i - 1) % n0
            for j in range(n1):
                jp = (j + 1) % n1
                jm = (j - 1) % n1
                for k in range(n2):
                    kp = (k + 1) % n2
                    km = (k - 1) % n2
                    out[i, j, k] = _nb_adv_term(u, f, i, j, k, ip, im, jp, jm, kp, km, h, upwind)
        return out

    @njit(parallel=True, cache=True)
    def _nb_edge_grad_sq(f, h):
        n0, n1, n2 = f.shape
        out = np.empty_like(f)
        c = 0.5 / (h * h)
        for i in prange(n0):
            ip = (i + 1) % n0
            im = (i - 1) % n0
            for j in range(n1):
                jp = (j + 1) % n1
                jm = (j - 1) % n1
                for k in range(n2):
                    kp = (k + 1) % n2
                    km = (k - 1) % n2
                    x = f[i, j, k]
                    s = ((f[ip, j, k] - x) ** 2 + (x - f[im, j, k]) ** 2
                         + (f[i, jp, k] - x) ** 2 + (x - f[i, jm, k]) ** 2
                         + (f[i, j, kp] - x) ** 2 + (x - f[i, j, km]) ** 2)
                    out[i, j, k] = c * s
        return out

    @njit(parallel=True, cache=True)
    def _nb_explicit_update(phi, dw, u, has_u, h, dt, inv_eps2, upwind):
        n0, n1, n2 = phi.shape
        out = np.empty_like(phi)
        c = 1.0 / (h * h)
        for i in prange(n0):
            ip = (i + 1) % n0
            im = (i - 1) % n0
            for j in range(n1):
                jp = (j + 1) % n1
                jm = (j - 1) % n1
                for k in range(n2):
                    kp = (k + 1) % n2
                    km = (k - 1) % n2
                    x = phi[i, j, k]
                    lap = c * (phi[ip, j, k] + phi[im, j, k] + phi[i, jp, k] + phi[i, jm, k]
                               + phi[i, j, kp] + phi[i, j, km] - 6.0 * x)
                    rate = lap - inv_eps2 * dw[i, j, k]
                    if has_u:
                        rate -= _nb_adv_term(u, phi, i, j, k, ip, im, jp, jm, kp, km, h, upwind)
                    out[i, j, k] = x + dt * rate
        return out

    @njit(cache=True)
    def _nb_cyclic_factor(n, a):
        # Thomas factors for the cyclic system via Sherman-Morrison.
        b = 1.0 + 2.0 * a
        off = -a
        gamma = -b
        diag = np.full(n, b)
        diag[0] = b - gamma
        diag[n - 1] = b - off * off / gamma
        cp = np.empty(n)
        denom = np.empty(n)
        denom[0] = diag[0]
        cp[0] = off / denom[0]
        for i in range(1, n):
            denom[i] = diag[i] - off * cp[i - 1]
            cp[i] = off / denom[i]
        z = np.zeros(n)
        z[0] = gamma
        z[n - 1] = off
        z[0] = z[0] / denom[0]
        for i in range(1, n):
            z[i] = (z[i] - off * z[i - 1]) / denom[i]
        for i in range(n - 2, -1, -1):
            z[i] -= cp[i] * z[i + 1]
        zfac = 1.0 + z[0] + off * z[n - 1] / gamma
        return cp, denom, z, off, gamma, zfac

    @njit(inline="always")
    def _nb_cyclic_line(line, cp, denom, z, off, gamma, zfac):
        n = line.shape[0]
        line[0] = line[0] / denom[0]
        for i in range(1, n):
            line[i] = (line[i] - off * line[i - 1]) / denom[i]
        for i in range(n - 2, -1, -1):
            line[i] -= cp[i] * line[i + 1]
        fact = (line[0] + off * line[n - 1] / gamma) / zfac
        for i in range(n):
            line[i] -= fact * z[i]

    @njit(parallel=True, cache=True)
    def _nb_cyclic_solve_axis0(f, a):
        n0, n1, n2 = f.shape
        cp, denom, z, off, gamma, zfac = _nb_cyclic_factor(n0, a)
        out = np.empty_like(f)
        for j in prange(n1):
            line = np.empty(n0)
            for k in range(n2):
                for i in range(n0):
                    line[i] = f[i, j, k]
                _nb_cyclic_line(line, cp, denom, z, off, gamma, zfac)
                for i in range(n0):
                    out[i, j, k] = line[i]
        return out


def _nb_cyclic_solve(f, a, axis):
    if f.shape[axis] == 1:
        return f.copy()
    moved = np.ascontiguousarray(np.swapaxes(f, 0, axis))
    out = _nb_cyclic_solve_axis0(moved, float(a))
    return np.ascontiguousarray(np.swapaxes(out, 0, axis))


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def laplacian(f: np.ndarray, h: float) -> np.ndarray:
    if USE_NUMBA:
        return _nb_laplacian(np.ascontiguousarray(as3d(f), dtype=np.float64), h).reshape(f.shape)
    return _np_laplacian(f, h)


def central_gradient(f: np.ndarray, h: float) -> np.ndarray:
    if USE_NUMBA:
        g = _nb_central_gradient(np.ascontiguousarray(as3d(f), dtype=np.float64), h, f.ndim)
        return g.reshape((f.ndim,) + f.shape)
    return _np_central_gradient(f, h)


def advection(u: np.ndarray, f: np.ndarray, h: float, upwind: bool = False) -> np.ndarray:
    """Return ``u . grad f`` with periodic central (or first-order upwind) differences."""
    if USE_NUMBA:
        out = _nb_advection(np.ascontiguousarray(_vec3d(u), dtype=np.float64),
                            np.ascontiguousarray(as3d(f), dtype=np.float64), h, upwind)
        return out.reshape(f.shape)
    return _np_advection(u, f, h, upwind)


def edge_grad_sq(f: np.ndarray, h: float) -> np.ndarray:
    """Cell-wise ``|grad f|^2`` as the mean of the squared forward and backward differences.

    Summed over the torus it equals the squared forward-difference norm, whose
    variational derivative is exactly the compact Laplacian.
    """
    if USE_NUMBA:
        return _nb_edge_grad_sq(np.ascontiguousarray(as3d(f), dtype=np.float64), h).reshape(f.shape)
    return _np_edge_grad_sq(f, h)


def explicit_update(phi, dw, u, h, dt, inv_eps2, upwind=False):
    """One forward-Euler step of ``phi_t = lap phi - dw/eps^2 - u . grad phi``."""
    if USE_NUMBA:
        p3 = np.ascontiguousarray(as3d(phi), dtype=np.float64)
        d3 = np.ascontiguousarray(as3d(dw), dtype=np.float64)
        if u is None:
            u3 = np.zeros((1, 1, 1, 1))
        else:
            u3 = np.ascontiguousarray(_vec3d(u), dtype=np.float64)
        return _nb_explicit_update(p3, d3, u3, u is not None, h, dt, inv_eps2, upwind).reshape(phi.shape)
    return _np_explicit_update(phi, dw, u, h, dt, inv_eps2, upwind)


def cyclic_solve(f: np.ndarray, a: float, axis: int) -> np.ndarray:
    """Solve ``(1 + 2a) x_i - a x_{i-1} - a x_{i+1} = f_i`` periodically along ``axis``."""
    if USE_NUMBA:
        return _nb_cyclic_solve(np.ascontiguousarray(as3d(f), dtype=np.float64), a, axis).reshape(f.shape)
    return _np_cyclic_solve(f, a, axis)
