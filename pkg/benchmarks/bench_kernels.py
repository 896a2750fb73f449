"""Time the numba stencil kernels against their numpy twins.

    python benchmarks/bench_kernels.py --n 256 512 --repeat 5

Both backends run in one process by flipping ``mct._kernels.USE_NUMBA``; the
first numba call of each kernel is a warm-up so JIT time is excluded.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from mct import _kernels as K


def _cases(n: int, dim: int, rng: np.random.Generator):
    shape = (n,) * dim
    h = 1.0 / n
    phi = rng.uniform(-1.0, 1.0, shape)
    dw = phi**3 - phi
    u = rng.normal(size=(dim,) + shape)
    dt = 0.2 * h * h
    return {
        "laplacian": lambda: K.laplacian(phi, h),
        "central_gradient": lambda: K.central_gradient(phi, h),
        "advection": lambda: K.advection(u, phi, h),
        "edge_grad_sq": lambda: K.edge_grad_sq(phi, h),
        "explicit_update": lambda: K.explicit_update(phi, dw, u, h, dt, 1.0e4),
        "cyclic_solve": lambda: K.cyclic_solve(phi, 0.5, 0),
    }


def _time(fn, repeat: int) -> float:
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[256, 512])
    ap.add_argument("--dim", type=int, default=2, choices=(1, 2, 3))
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    if K.numba is None:
        print("numba is not importable; nothing to compare")
        return 1
    saved = K.USE_NUMBA
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18} {'n':>5} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    try:
        for n in args.n:
            for name, fn in _cases(n, args.dim, rng).items():
                K.USE_NUMBA = False
                t_np = _time(fn, args.repeat)
                K.USE_NUMBA = True
                t_nb = _time(fn, args.repeat)
                print(f"{name:<18} {n:>5} {1e3 * t_np:>10.3f} {1e3 * t_nb:>10.3f} {t_np / t_nb:>7.1f}x")
    finally:
        K.USE_NUMBA = saved
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
