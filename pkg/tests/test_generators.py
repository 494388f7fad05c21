import numpy as np
import pytest

from helicity_lab import (
    Grid3,
    LacunarySpec,
    abc_flow,
    curl,
    divergence,
    energy,
    gradient,
    helicity,
    lacunary_field,
    prescribed_sobolev_field,
    taylor_green,
)
from helicity_lab.grid import PreconditionError, ResolutionError
from helicity_lab.norms import (
    exponent_estimate,
    gagliardo_seminorm_local,
    holder_seminorm,
    spectral_sobolev_seminorm,
)

BOX = (2 * np.pi) ** 3


def rel_div(v):
    d = divergence(v)
    scale = np.abs(gradient(v).values).max()
    return np.abs(d.values).max() / scale


def test_abc_is_beltrami():
    g = Grid3(16)
    u = abc_flow(g)
    assert np.abs(curl(u).values - u.values).max() <= 1e-13
    assert rel_div(u) <= 1e-13


def test_abc_energy_helicity():
    g = Grid3(64)
    u = abc_flow(g)
    # each component integrates sin^2 + cos^2 of independent coordinates
    assert energy(u) == pytest.approx(1.5 * BOX, rel=1e-14)
    assert helicity(u) == pytest.approx(3.0 * BOX, rel=1e-14)
    assert helicity(u) == pytest.approx(2.0 * energy(u), rel=1e-14)


def test_abc_general_coefficients():
    g = Grid3(16)
    u = abc_flow(g, a=1.5, b=0.25, c=-2.0)
    assert np.abs(curl(u).values - u.values).max() <= 1e-12
    want = 0.5 * (1.5**2 + 0.25**2 + 2.0**2) * BOX
    assert energy(u) == pytest.approx(want, rel=1e-13)


def test_taylor_green():
    g = Grid3(32)
    u = taylor_green(g)
    assert np.abs(u.values[2]).max() == 0.0
    assert rel_div(u) <= 1e-13
    # two squared-trig components, each averaging 1/8 over the box
    assert energy(u) == pytest.approx(BOX / 8.0, rel=1e-13)
    assert abs(helicity(u)) <= 1e-12 * energy(u)


def test_lacunary_determinism():
    g = Grid3(32)
    spec = LacunarySpec(exponent=0.5, octaves=3, seed=7)
    a = lacunary_field(spec, g)
    b = lacunary_field(spec, g)
    assert np.array_equal(a.values, b.values)
    c = lacunary_field(LacunarySpec(exponent=0.5, octaves=3, seed=8), g)
    assert not np.array_equal(a.values, c.values)


def test_lacunary_divergence_free():
    g = Grid3(32)
    spec = LacunarySpec(exponent=0.4, octaves=3, seed=11)
    u = lacunary_field(spec, g)
    assert rel_div(u) <= 1e-10


def test_lacunary_octave_cap():
    g = Grid3(32)
    with pytest.raises(ResolutionError):
        lacunary_field(LacunarySpec(exponent=0.4, octaves=4, seed=1), g)  # 16 > 32/3


def test_lacunary_shell_energy_law():
    # shells with a full complement of 8 modes decay in energy by exactly 4^theta
    theta = 0.4
    g = Grid3(64)
    u = lacunary_field(LacunarySpec(exponent=theta, octaves=4, seed=3), g)
    hat = u.hat
    weights = np.broadcast_to(g.parseval_weights, g.spectral_shape)
    radius = np.sqrt(g.k_sq)
    shell_e = []
    for j in range(4):
        mask = (radius >= 2**j) & (radius < 2 ** (j + 1))
        e = np.sum(weights * mask * (hat.real**2 + hat.imag**2))
        shell_e.append(e)
    ratio = shell_e[2] / shell_e[3]
    assert ratio == pytest.approx(4.0**theta, rel=1e-12)


def test_lacunary_single_shell_holder():
    g = Grid3(32)
    f = lacunary_field(
        LacunarySpec(exponent=0.5, octaves=1, seed=5, rank="scalar"), g
    )
    val = holder_seminorm(f, 0.5, cutoff_radius=np.pi / 2)
    assert np.isfinite(val.value) and val.value > 0


def test_lacunary_exponent_round_trip():
    theta = 0.4
    g = Grid3(128)
    f = lacunary_field(
        LacunarySpec(exponent=theta, octaves=5, seed=7, rank="scalar"), g
    )
    est = exponent_estimate(f, p=np.inf)
    assert abs(est.slope - theta) <= 0.1


def test_lacunary_validation():
    with pytest.raises(PreconditionError):
        LacunarySpec(exponent=1.2, octaves=3, seed=1)
    with pytest.raises(PreconditionError):
        LacunarySpec(exponent=0.4, octaves=3, seed=1, rank="matrix")


def test_sobolev_determinism_and_divergence():
    g = Grid3(32)
    a = prescribed_sobolev_field(0.5, 2, g, seed=9, octaves=3)
    b = prescribed_sobolev_field(0.5, 2, g, seed=9, octaves=3)
    assert np.array_equal(a.values, b.values)
    assert rel_div(a) <= 1e-10
    assert np.abs(a.mean()).max() <= 1e-13 * np.abs(a.values).max()


def test_sobolev_shell_uniform_growth():
    # equal per-shell seminorm load: J -> J+1 grows the seminorm by sqrt(5/4)
    g = Grid3(128)
    s4 = spectral_sobolev_seminorm(
        prescribed_sobolev_field(0.9, 2, g, seed=2, octaves=4), 0.9
    ).value
    s5 = spectral_sobolev_seminorm(
        prescribed_sobolev_field(0.9, 2, g, seed=2, octaves=5), 0.9
    ).value
    growth = s5 / s4 - 1.0
    # sqrt(5/4) - 1 = 11.8% up to the in-band |k|^(2*alpha) spread
    assert 0.10 <= growth <= 0.145


def test_sobolev_zero_octaves():
    g = Grid3(32)
    f = prescribed_sobolev_field(0.5, 2, g, seed=1, octaves=0)
    assert np.abs(f.values).max() == 0.0


def test_sobolev_gagliardo_vs_spectral():
    # the two W^{alpha,2} estimators agree up to the usual norm-equivalence slack
    alpha = 0.3
    g = Grid3(128)
    f = prescribed_sobolev_field(alpha, 2, g, seed=4, octaves=5, rank="scalar")
    spectral = spectral_sobolev_seminorm(f, alpha).value
    local = gagliardo_seminorm_local(f, alpha, 2.0, 4 * g.h).value
    ratio = local / spectral
    assert 1.0 / 3.0 <= ratio <= 3.0


def test_sobolev_validation():
    g = Grid3(32)
    with pytest.raises(PreconditionError):
        prescribed_sobolev_field(1.5, 2, g, seed=1)
    with pytest.raises(PreconditionError):
        prescribed_sobolev_field(0.5, 7, g, seed=1)
    with pytest.raises(ResolutionError):
        prescribed_sobolev_field(0.5, 2, g, seed=1, octaves=4)
