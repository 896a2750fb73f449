import math
import struct

import numpy as np
import pytest

from mct.errors import GridMismatch, RadiusTooLarge
from mct.fielddump import MAGIC, read_field, write_field
from mct.grid import PeriodicGrid, minimal_image, unit_ball_volume
from oracles import ball_cells_bruteforce, ball_mass_bruteforce, monte_carlo_ball_volume


def test_grid_basics():
    g = PeriodicGrid(2, 64)
    assert g.h == 1.0 / 64 and g.shape == (64, 64) and g.size == 4096
    assert g.coords().shape == (2, 64, 64)
    with pytest.raises(ValueError):
        PeriodicGrid(2, 8)
    with pytest.raises(ValueError):
        PeriodicGrid(4, 32)
    with pytest.raises(GridMismatch):
        g.laplacian(np.zeros((32, 32)))


def test_minimal_image():
    np.testing.assert_allclose(minimal_image([0.7, -0.7, 0.2, 0.5]), [-0.3, 0.3, 0.2, -0.5])


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_constant_field(dim):
    g = PeriodicGrid(dim, 16)
    f = np.full(g.shape, 3.0)
    assert np.all(g.gradient(f) == 0.0)
    assert np.all(g.laplacian(f) == 0.0)


def test_gradient_of_sine():
    g = PeriodicGrid(2, 256)
    x = g.coords()
    f = np.sin(2 * math.pi * x[0])
    d = g.gradient(f)
    # central difference of sin: 2 pi cos(2 pi x) * sin(2 pi h) / (2 pi h)
    want = 2 * math.pi * np.cos(2 * math.pi * x[0]) * math.sin(2 * math.pi * g.h) / (2 * math.pi * g.h)
    np.testing.assert_allclose(d[0], want, atol=1e-10)
    assert np.abs(d[1]).max() == 0.0
    # the nearest cell centre to x = 0 sits at h/2
    taylor = 2 * math.pi * (1 - (2 * math.pi * g.h) ** 2 / 6) * math.cos(math.pi * g.h)
    assert np.max(d[0]) == pytest.approx(taylor, rel=1e-6)


def test_gradient_of_sawtooth():
    g = PeriodicGrid(1, 32)
    f = g.axes.copy()
    d = g.gradient(f)[0]
    assert np.allclose(d[1:-1], 1.0)
    assert d[0] != pytest.approx(1.0) and d[-1] != pytest.approx(1.0)


def test_laplacian_eigenfunction():
    g = PeriodicGrid(2, 128)
    x = g.coords()
    f = np.sin(2 * math.pi * x[0])
    lam = -(2 / g.h ** 2) * (1 - math.cos(2 * math.pi * g.h))
    np.testing.assert_allclose(g.laplacian(f), lam * f, atol=1e-8)
    rng = np.random.default_rng(3)
    r = rng.standard_normal(g.shape)
    assert abs(g.laplacian(r).sum()) < 1e-8 * np.abs(g.laplacian(r)).sum()


def test_laplacian_is_div_of_staggered_grad():
    g = PeriodicGrid(2, 128)
    x = g.coords()
    f = np.sin(2 * math.pi * x[0]) * np.cos(4 * math.pi * x[1]) + 0.3 * np.cos(2 * math.pi * (x[0] + x[1]))
    lhs = g.laplacian(f)
    rhs = g.backward_divergence(g.forward_gradient(f))
    assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(lhs).max() * 1e3


def test_shift_equivariance():
    g = PeriodicGrid(3, 16)
    f = np.random.default_rng(0).standard_normal(g.shape)
    s = np.roll(f, (3, -2, 5), axis=(0, 1, 2))
    np.testing.assert_array_equal(g.laplacian(s), np.roll(g.laplacian(f), (3, -2, 5), axis=(0, 1, 2)))
    np.testing.assert_array_equal(g.gradient(s), np.roll(g.gradient(f), (3, -2, 5), axis=(1, 2, 3)))


def test_grad_sq_sums_to_staggered_energy():
    g = PeriodicGrid(2, 32)
    f = np.random.default_rng(1).standard_normal(g.shape)
    fwd = g.forward_gradient(f)
    assert g.grad_sq(f).sum() == pytest.approx((fwd ** 2).sum(), rel=1e-13)


def test_ball_cells_small():
    g = PeriodicGrid(2, 64)
    h = g.h
    c = (10.5 * h, 20.5 * h)
    assert g.ball_cells((10 * h, 20 * h), 0.4 * h).size == 0
    plus = g.ball_cells(c, 1.2 * h)
    assert plus.size == 5
    assert set(plus.tolist()) == ball_cells_bruteforce(64, 2, c, 1.2 * h)
    # diagonal neighbours lie at sqrt(2) h < 1.5 h
    assert g.ball_cells(c, 1.5 * h).size == 9


def test_ball_cells_large_volume():
    for dim, n in ((2, 64), (3, 32)):
        g = PeriodicGrid(dim, n)
        r = 0.5 - g.h
        vol = g.ball_cells(np.full(dim, 0.31), r).size * g.cell_volume
        exact = unit_ball_volume(dim) * r ** dim
        assert exact * (1 - 4 * g.h / r) <= vol <= exact * (1 + 4 * g.h / r)
        assert vol == pytest.approx(monte_carlo_ball_volume(dim, r), rel=4 * g.h / r)


def test_ball_wraps_and_is_symmetric():
    g = PeriodicGrid(2, 32)
    c = (0.5 * g.h, 0.5 * g.h)
    mask = g.ball_mask(c, 0.2)
    # reflections through the centre cell map the ball onto itself
    refl = np.roll(mask[::-1, :], 1, axis=0)
    assert np.array_equal(mask, refl)
    assert np.array_equal(mask, mask.T)
    assert set(g.ball_cells((0.01, 0.99), 0.1).tolist()) == ball_cells_bruteforce(32, 2, (0.01, 0.99), 0.1)


def test_ball_too_large():
    g = PeriodicGrid(2, 32)
    with pytest.raises(RadiusTooLarge):
        g.ball_cells((0.5, 0.5), 0.51)
    with pytest.raises(RadiusTooLarge):
        g.ball_stencil_sum(np.ones(g.shape), 0.6)


def test_ball_stencil_sum_matches_bruteforce():
    g = PeriodicGrid(2, 32)
    e = np.random.default_rng(2).random(g.shape)
    sums = g.ball_stencil_sum(e, 0.17) * g.cell_volume
    for idx in [(0, 0), (5, 31), (17, 9)]:
        c = [(i + 0.5) * g.h for i in idx]
        assert sums[idx] == pytest.approx(ball_mass_bruteforce(e, c, 0.17), rel=1e-10)


def test_field_dump_roundtrip(tmp_path):
    data = np.random.default_rng(0).standard_normal((16, 16))
    p = write_field(tmp_path / "f.pfmf", data, 0.0625, 0.125)
    raw = p.read_bytes()
    assert raw[:4] == MAGIC
    assert struct.unpack_from("<IIdd", raw, 4) == (2, 16, 0.0625, 0.125)
    assert len(raw) == 4 + 8 + 16 + 8 * 256
    back = read_field(p)
    assert back.dim == 2 and back.resolution == 16 and back.time == 0.125
    np.testing.assert_array_equal(back.data, data)


def test_field_dump_rejects(tmp_path):
    with pytest.raises(ValueError):
        write_field(tmp_path / "x", np.array([np.nan] * 16), 0.1, 0.0)
    with pytest.raises(ValueError):
        write_field(tmp_path / "x", np.zeros((16, 8)), 0.1, 0.0)
    bad = tmp_path / "bad"
    bad.write_bytes(b"XXXX" + bytes(24))
    with pytest.raises(ValueError):
        read_field(bad)
