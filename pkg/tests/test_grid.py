import numpy as np
import pytest

from conftest import band_limited
from helicity_lab import Grid3
from helicity_lab.grid import (
    PeriodicField,
    PreconditionError,
    irfftn,
    pad_spectrum,
    rfftn,
    truncate_spectrum,
)


def test_grid_basics():
    g = Grid3(16)
    assert g.h == 2 * np.pi / 16
    assert g.length == 2 * np.pi
    assert g.cell_volume == g.h ** 3
    assert g.spectral_shape == (16, 16, 9)
    assert g.dealias_kmax == 5


def test_grid_rejects_bad_sizes():
    with pytest.raises(PreconditionError):
        Grid3(6)  # not a power of two
    with pytest.raises(PreconditionError):
        Grid3(4)  # below the floor


def test_wavenumber_tables():
    g = Grid3(8)
    assert g.kx[:, 0, 0].tolist() == [0, 1, 2, 3, -4, -3, -2, -1]
    assert g.kz[0, 0, :].tolist() == [0, 1, 2, 3, 4]
    assert np.array_equal(g.k_sq, g.kx**2 + g.ky**2 + g.kz**2)
    # odd-derivative tables zero the Nyquist plane so derivatives stay real
    kx, ky, kz = g.k_derivative
    assert np.all(kx[4, :, :] == 0)
    assert np.all(kz[:, :, 4] == 0)


def test_parseval_all_ranks():
    g = Grid3(16)
    for rank, seed in (("scalar", 0), ("vector3", 1)):
        f = band_limited(g, 7, seed, rank=rank)
        direct = np.sqrt(np.sum(f.values**2) * g.cell_volume)
        assert abs(direct - f.spectral_l2()) <= 1e-12 * direct
    # tensor rank through raw arrays
    rng = np.random.default_rng(2)
    t = PeriodicField(g, rng.standard_normal((3, 3, 16, 16, 16)))
    direct = np.sqrt(np.sum(t.values**2) * g.cell_volume)
    assert abs(direct - t.spectral_l2()) <= 1e-12 * direct


def test_spectral_cache_round_trip():
    g = Grid3(16)
    f = band_limited(g, 5, 3)
    back = irfftn(f.hat, g.n)
    assert np.sqrt(np.mean((back - f.values) ** 2)) <= 1e-12 * f.values.std()


def test_field_validation():
    g = Grid3(8)
    with pytest.raises(PreconditionError):
        PeriodicField(g, np.zeros((5, 8, 8)))  # bad shape
    bad = np.zeros((8, 8, 8))
    bad[0, 0, 0] = np.nan
    with pytest.raises(PreconditionError):
        PeriodicField(g, bad)


def test_bandwidth():
    g = Grid3(32)
    f = band_limited(g, 6, 4, rank="scalar")
    assert f.bandwidth() == 6
    z = PeriodicField(g, np.zeros((32, 32, 32)))
    assert z.bandwidth() == 0


def test_pad_truncate_round_trip():
    g = Grid3(16)
    f = band_limited(g, 7, 5, rank="scalar")
    fine = pad_spectrum(f.hat, 16, 32)
    back = truncate_spectrum(fine, 32, 16)
    assert np.allclose(back, f.hat, rtol=0, atol=1e-15)
    # padded field interpolates: values at even fine nodes equal coarse ones
    vals_fine = irfftn(fine, 32)
    assert np.allclose(vals_fine[::2, ::2, ::2], f.values, rtol=0, atol=1e-12)


def test_dealias_mask_cube():
    g = Grid3(16)
    kmax = g.dealias_kmax
    inside = (np.abs(g.kx) <= kmax) & (np.abs(g.ky) <= kmax) & (np.abs(g.kz) <= kmax)
    assert np.array_equal(g.dealias_mask, inside)


def test_min_image_radius():
    g = Grid3(8)
    r = g.min_image_radius()
    assert r[0, 0, 0] == 0.0
    assert r[1, 0, 0] == pytest.approx(g.h)
    assert r[7, 0, 0] == pytest.approx(g.h)  # wraps around
    assert r.max() == pytest.approx(np.sqrt(3) * np.pi)


def test_field_arithmetic_and_component():
    g = Grid3(8)
    a = band_limited(g, 3, 6)
    b = band_limited(g, 3, 7)
    s = a + b
    assert np.array_equal(s.values, a.values + b.values)
    d = a - b
    assert np.array_equal(d.values, a.values - b.values)
    c = a.component(1)
    assert c.rank == "scalar"
    assert np.array_equal(c.values, a.values[1])
