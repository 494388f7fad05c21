import numpy as np
import pytest

from conftest import band_limited
from helicity_lab import (
    Grid3,
    abc_flow,
    biot_savart,
    curl,
    divergence,
    fractional_laplacian,
    gradient,
    leray_project,
)
from helicity_lab.grid import PeriodicField, PreconditionError


def full_grid(g, expr):
    """Broadcast a coordinate expression to a dense (n, n, n) sample array."""
    return np.ascontiguousarray(np.broadcast_to(expr, (g.n, g.n, g.n)))


def shifted_diff(values, axis, shift):
    return np.roll(values, -shift, axis=axis)


def fd4_gradient(values, h):
    """4th-order centered first derivative along each axis, periodic."""
    out = []
    for ax in range(3):
        d = (8 * (shifted_diff(values, ax, 1) - shifted_diff(values, ax, -1))
             - (shifted_diff(values, ax, 2) - shifted_diff(values, ax, -2))) / (12 * h)
        out.append(d)
    return np.stack(out)


def test_gradient_single_mode():
    g = Grid3(16)
    x = g.coordinates()[0]
    f = PeriodicField(g, full_grid(g, np.sin(x)))
    gf = gradient(f)
    assert np.allclose(gf.values[0], full_grid(g, np.cos(x)), atol=1e-13)
    assert np.abs(gf.values[1:]).max() <= 1e-13


def test_gradient_constant():
    g = Grid3(8)
    f = PeriodicField(g, np.full((8, 8, 8), 3.7))
    assert np.abs(gradient(f).values).max() == 0.0


def test_gradient_matches_fd4():
    # h^4 truncation of the centered stencil against the spectral derivative
    g = Grid3(64)
    f = band_limited(g, 5, 11, rank="scalar")
    exact = gradient(f).values
    approx = fd4_gradient(f.values, g.h)
    kmax = 5
    expected = np.abs(exact).max() * (kmax * g.h) ** 4  # |k|^5 h^4 / 30 scale
    assert np.abs(exact - approx).max() <= expected


def test_gradient_rejects_tensor():
    g = Grid3(8)
    t = PeriodicField(g, np.zeros((3, 3, 8, 8, 8)))
    with pytest.raises(PreconditionError):
        gradient(t)


def test_curl_abc_eigenfield():
    g = Grid3(16)
    u = abc_flow(g)
    w = curl(u)
    assert np.abs(w.values - u.values).max() <= 1e-13


def test_curl_of_gradient_vanishes():
    g = Grid3(32)
    f = band_limited(g, 9, 12, rank="scalar")
    w = curl(gradient(f))
    assert np.abs(w.values).max() <= 1e-12 * np.abs(gradient(f).values).max()


def test_divergence_of_curl_vanishes():
    g = Grid3(32)
    v = band_limited(g, 9, 13)
    d = divergence(curl(v))
    assert np.abs(d.values).max() <= 1e-12 * np.abs(curl(v).values).max()


def test_divergence_single_mode():
    g = Grid3(16)
    x = g.coordinates()[0]
    vals = np.zeros((3, 16, 16, 16))
    vals[0] = np.sin(x)
    v = PeriodicField(g, vals)
    assert np.allclose(divergence(v).values, full_grid(g, np.cos(x)), atol=1e-13)


def test_divergence_constant():
    g = Grid3(8)
    v = PeriodicField(g, np.ones((3, 8, 8, 8)))
    assert np.abs(divergence(v).values).max() == 0.0


def test_leray_identity_on_solenoidal():
    g = Grid3(16)
    y = g.coordinates()[1]
    vals = np.zeros((3, 16, 16, 16))
    vals[0] = np.sin(y)  # transverse single mode, already solenoidal
    v = PeriodicField(g, vals)
    p = leray_project(v)
    assert np.abs(p.values - v.values).max() <= 1e-14
    assert p.solenoidal


def test_leray_kills_gradients():
    g = Grid3(32)
    f = band_limited(g, 9, 14, rank="scalar")
    gr = gradient(f)
    p = leray_project(gr)
    assert np.abs(p.values).max() <= 1e-12 * np.abs(gr.values).max()


def test_leray_idempotent_and_self_adjoint():
    g = Grid3(16)
    a = band_limited(g, 7, 15)
    b = band_limited(g, 7, 16)
    pa = leray_project(a)
    paa = leray_project(pa)
    assert np.abs(paa.values - pa.values).max() <= 1e-12 * np.abs(pa.values).max()
    vol = g.cell_volume
    lhs = np.sum(pa.values * b.values) * vol
    rhs = np.sum(a.values * leray_project(b).values) * vol
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs))


def test_leray_preserves_mean():
    g = Grid3(8)
    vals = np.ones((3, 8, 8, 8)) * np.array([1.0, -2.0, 0.5])[:, None, None, None]
    v = PeriodicField(g, vals)
    assert np.allclose(leray_project(v).mean(), v.mean(), atol=1e-15)


def test_fractional_laplacian_identity_at_zero():
    g = Grid3(16)
    f = band_limited(g, 5, 17, rank="scalar")
    f0 = fractional_laplacian(f, 0.0)
    assert np.abs(f0.values - f.values).max() <= 1e-14


def test_fractional_laplacian_eigenfunction():
    g = Grid3(16)
    x = g.coordinates()[0]
    f = PeriodicField(g, full_grid(g, np.sin(2 * x)))
    lf = fractional_laplacian(f, 1.0)  # multiplier |k|^2 = 4
    assert np.allclose(lf.values, full_grid(g, 4 * np.sin(2 * x)), atol=1e-12)


def test_fractional_laplacian_matches_second_differences():
    g = Grid3(64)
    f = band_limited(g, 4, 18, rank="scalar")
    lap = fractional_laplacian(f, 1.0).values
    fd = np.zeros_like(lap)
    for ax in range(3):
        fd -= (np.roll(f.values, 1, axis=ax) - 2 * f.values
               + np.roll(f.values, -1, axis=ax)) / g.h**2
    # second-difference truncation is k^4 h^2 / 12 per axis
    bound = 3 * (4**4) * g.h**2 / 12 * np.abs(f.values).max() * 4
    assert np.abs(lap - fd).max() <= bound


def test_fractional_laplacian_composition():
    g = Grid3(16)
    f = band_limited(g, 5, 19, rank="scalar")
    a = fractional_laplacian(fractional_laplacian(f, 0.3), 0.4)
    b = fractional_laplacian(f, 0.7)
    assert np.abs(a.values - b.values).max() <= 1e-11 * np.abs(b.values).max()


def test_fractional_laplacian_strict_mean_mode():
    g = Grid3(8)
    f = PeriodicField(g, np.ones((8, 8, 8)))
    # default convention annihilates the mean for s != 0
    out = fractional_laplacian(f, -0.5)
    assert np.abs(out.values).max() <= 1e-14
    with pytest.raises(PreconditionError):
        fractional_laplacian(f, -0.5, strict=True)


def test_fractional_laplacian_range():
    g = Grid3(8)
    f = band_limited(g, 3, 20, rank="scalar")
    with pytest.raises(PreconditionError):
        fractional_laplacian(f, 2.5)
    with pytest.raises(PreconditionError):
        fractional_laplacian(f, -1.5)


def test_biot_savart_abc():
    g = Grid3(16)
    u = abc_flow(g)
    w = curl(u)  # equals u for the Beltrami eigenfield
    back = biot_savart(w)
    assert np.abs(back.values - u.values).max() <= 1e-12


def test_biot_savart_zero():
    g = Grid3(8)
    w = PeriodicField(g, np.zeros((3, 8, 8, 8)), solenoidal=True)
    assert np.abs(biot_savart(w).values).max() == 0.0


def test_biot_savart_round_trip():
    g = Grid3(32)
    u = band_limited(g, 9, 21, solenoidal=True)
    w = curl(u)
    rebuilt = curl(biot_savart(w))
    err = np.sqrt(np.mean((rebuilt.values - w.values) ** 2))
    assert err <= 1e-11 * np.sqrt(np.mean(w.values**2))


def test_biot_savart_rejects_nonzero_mean():
    g = Grid3(8)
    w = PeriodicField(g, np.ones((3, 8, 8, 8)), solenoidal=True)
    with pytest.raises(PreconditionError):
        biot_savart(w)
