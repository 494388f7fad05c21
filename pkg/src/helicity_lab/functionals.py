"""Quadratic functionals of periodic velocity fields.

Energy, helicity in three equivalent computations (direct pairing, split-order
fractional pairing, smoothed pairing), the subfilter helicity flux with its
Hoelder chain bound, pressure recovery, and pointwise identities satisfied by
smooth solenoidal fields.

All pairings are plain h^3-weighted grid sums. For band-limited fields these
agree with the exact integrals whenever the integrand's bandwidth stays below
the grid Nyquist; routines that need headroom state their precondition.
"""

from __future__ import annotations

import math

import numpy as np

from .grid import (
    PeriodicField,
    PreconditionError,
    irfftn,
    pad_spectrum,
    rfftn,
)
from .mollify import Mollifier, _as_mollifier, mollify, reynolds_stress
from .operators import curl, fractional_laplacian, gradient
from . import grid as _grid

__all__ = [
    "pairing",
    "energy",
    "helicity",
    "helicity_dual",
    "helicity_mollified",
    "helicity_flux",
    "helicity_chain",
    "solve_pressure",
    "smooth_identity_residuals",
    "helicity_summary",
]


def pairing(a: PeriodicField, b: PeriodicField) -> float:
    """h^3-weighted grid pairing sum(a . b); ranks must match."""
    if a.rank != b.rank or a.grid.n != b.grid.n:
        raise PreconditionError("pairing requires matching ranks and grids")
    if a.rank == "scalar":
        dens = a.values * b.values
    else:
        axes = tuple(range(a.values.ndim - 3))
        dens = np.einsum(a.values, [*axes, 10, 11, 12],
                         b.values, [*axes, 10, 11, 12], [10, 11, 12])
    return float(dens.sum() * a.grid.cell_volume)


def energy(u: PeriodicField) -> float:
    """Kinetic energy (1/2) integral |u|^2 over the periodic box."""
    if u.rank != "vector3":
        raise PreconditionError("energy expects a vector3 field")
    return 0.5 * pairing(u, u)


def helicity(u: PeriodicField) -> float:
    """integral u . curl u over the box."""
    return pairing(u, curl(u))


def helicity_dual(u: PeriodicField) -> float:
    """Helicity through the split-order pairing.

    Pairs the quarter-derivative of u against the quarter-antiderivative of
    its curl. Agrees with :func:`helicity` to rounding for any velocity with
    a curl (the vorticity has no mean, so the negative-order operator is
    well defined).
    """
    if u.rank != "vector3":
        raise PreconditionError("helicity_dual expects a vector3 field")
    rough = fractional_laplacian(u, 0.25)
    smooth = fractional_laplacian(curl(u), -0.25)
    return pairing(rough, smooth)


def helicity_mollified(u: PeriodicField, delta) -> float:
    """integral u_d . curl(u_d) at smoothing radius delta."""
    u_s = mollify(u, delta)
    return pairing(u_s, curl(u_s))


def helicity_flux(u: PeriodicField, delta) -> float:
    """Rate of subfilter helicity transfer at radius delta.

    Computes -2 integral grad(curl u_d) : R_d where R_d is the subfilter
    stress of the smoothing. For an ideal band-limited evolution this equals
    d/dt of the smoothed helicity.
    """
    if not u.solenoidal:
        raise PreconditionError("helicity_flux expects a solenoidal velocity")
    mol = _as_mollifier(u.grid, delta)
    grad_w = gradient(curl(mollify(u, mol)))
    stress = reynolds_stress(u, mol)
    return -2.0 * pairing(grad_w, stress)


def _holder_pair(p: float, q: float) -> None:
    for e in (p, q):
        if e != math.inf and not 1.0 <= e:
            raise PreconditionError(f"norm order must be in [1, inf], got {e}")
    lhs = (0.0 if p == math.inf else 1.0 / p) + (0.0 if q == math.inf else 1.0 / q)
    if abs(lhs - 1.0) > 1e-12:
        raise PreconditionError(f"orders p={p}, q={q} are not conjugate")


def _magnitude_norm(mag: np.ndarray, p: float, vol: float) -> float:
    if p == math.inf:
        return float(mag.max())
    return float((np.sum(mag**p) * vol) ** (1.0 / p))


def helicity_chain(u: PeriodicField, delta, p: float, q: float) -> dict:
    """Flux together with its two-factor Hoelder bound from the same arrays.

    Returns {"flux", "bound", "grad_curl_norm", "stress_norm"} where
    bound = 2 ||grad curl u_d||_q ||R_d||_p and |flux| <= bound holds exactly
    in grid arithmetic for conjugate orders.
    """
    _holder_pair(p, q)
    if not u.solenoidal:
        raise PreconditionError("helicity_chain expects a solenoidal velocity")
    mol = _as_mollifier(u.grid, delta)
    grad_w = gradient(curl(mollify(u, mol)))
    stress = reynolds_stress(u, mol)
    flux = -2.0 * pairing(grad_w, stress)
    vol = u.grid.cell_volume
    gq = _magnitude_norm(grad_w.magnitude(), q, vol)
    sp = _magnitude_norm(stress.magnitude(), p, vol)
    return {
        "flux": flux,
        "bound": 2.0 * gq * sp,
        "grad_curl_norm": gq,
        "stress_norm": sp,
    }


def solve_pressure(u: PeriodicField) -> PeriodicField:
    """Pressure of the ideal evolution, from the alias-free velocity stress.

    Solves lap p = -div div (u (x) u) with zero mean; the quadratic stress is
    formed on the 3/2 padded grid.
    """
    if u.rank != "vector3":
        raise PreconditionError("solve_pressure expects a vector3 field")
    from .mollify import _outer_product_hat

    g = u.grid
    t_hat = _outer_product_hat(u.hat, u.hat, g.n, symmetric=True)
    kx, ky, kz = g.k_derivative
    kvec = (kx, ky, kz)
    acc = np.zeros(g.spectral_shape, dtype=np.complex128)
    for i in range(3):
        for j in range(3):
            acc += kvec[i] * kvec[j] * t_hat[i, j]
    p_hat = np.divide(-acc, g.k_sq, out=np.zeros_like(acc), where=g.k_sq > 0)
    return PeriodicField.from_spectral(g, p_hat)


def _fine_gradient_dot(uf, hat_j, kfine, mfine):
    """(u . grad) applied to one spectral component, on the fine grid."""
    out = np.zeros_like(uf[0])
    for i in range(3):
        out += uf[i] * irfftn(1j * kfine[i] * hat_j, mfine)
    return out


def smooth_identity_residuals(u: PeriodicField, p: PeriodicField = None) -> dict:
    """Relative L2 residuals of three pointwise identities for solenoidal u.

    advection: div(u (u.w)) = w.(u.grad)u + u.(u.grad)w
    kinetic:   (1/2) div(|u|^2 w) = u.(w.grad)u
    pressure:  div(p w) = w.grad p
    with w = curl u and p the recovered pressure (or a caller-supplied scalar
    field). Each residual is ||lhs - rhs||_2 over the larger of the term
    norms and the norm of the flux field inside the divergence; the floor
    keeps degenerate cases (constant p, both sides ~ 0) from reading as
    order-one failures. Exact to rounding for band-limited u; requires
    bandwidth <= n/4 - 1 so every triple product is resolved on the doubled
    evaluation grid.
    """
    if u.rank != "vector3":
        raise PreconditionError("expects a vector3 field")
    if not u.solenoidal:
        raise PreconditionError("identities hold for solenoidal fields only")
    g = u.grid
    band = u.bandwidth()
    if band > g.n // 4 - 1:
        raise PreconditionError(
            f"bandwidth {band} exceeds n/4 - 1 = {g.n // 4 - 1}; triple "
            "products would alias"
        )
    m = 2 * g.n
    w = curl(u)
    if p is None:
        p = solve_pressure(u)
    else:
        if p.rank != "scalar":
            raise PreconditionError("pressure must be a scalar field")
        if p.grid.n != g.n:
            raise PreconditionError("pressure grid does not match velocity grid")
        if p.bandwidth() + band > m // 2 - 1:
            raise PreconditionError("pressure too rough: p*w would alias")

    u_hat_f = pad_spectrum(u.hat, g.n, m)
    w_hat_f = pad_spectrum(w.hat, g.n, m)
    p_hat_f = pad_spectrum(p.hat, g.n, m)
    uf = irfftn(u_hat_f, m)
    wf = irfftn(w_hat_f, m)
    pf = irfftn(p_hat_f, m)

    kfine = _grid.Grid3(m).k_derivative

    def fine_div(vals):
        vh = rfftn(vals)
        out = np.zeros_like(vals[0])
        for i in range(3):
            out += irfftn(1j * kfine[i] * vh[i], m)
        return out

    def l2(a):
        return float(np.sqrt(np.mean(np.square(a))))

    def rel_residual(lhs, rhs, floor):
        scale = max(l2(lhs), l2(rhs), floor, 1e-300)
        return l2(lhs - rhs) / scale

    # advection identity
    s = np.einsum("cxyz,cxyz->xyz", uf, wf)
    flux_vec = uf * s
    floor1 = l2(flux_vec)
    lhs1 = fine_div(flux_vec)
    del s, flux_vec
    rhs1 = np.zeros_like(lhs1)
    for j in range(3):
        rhs1 += wf[j] * _fine_gradient_dot(uf, u_hat_f[j], kfine, m)
        rhs1 += uf[j] * _fine_gradient_dot(uf, w_hat_f[j], kfine, m)
    res_advection = rel_residual(lhs1, rhs1, floor1)
    del lhs1, rhs1

    # kinetic identity
    speed2 = np.einsum("cxyz,cxyz->xyz", uf, uf)
    flux_vec = 0.5 * speed2 * wf
    floor2 = l2(flux_vec)
    lhs2 = fine_div(flux_vec)
    del speed2, flux_vec
    rhs2 = np.zeros_like(lhs2)
    for j in range(3):
        rhs2 += uf[j] * _fine_gradient_dot(wf, u_hat_f[j], kfine, m)
    res_kinetic = rel_residual(lhs2, rhs2, floor2)
    del lhs2, rhs2

    # pressure identity
    flux_vec = pf * wf
    floor3 = l2(flux_vec)
    lhs3 = fine_div(flux_vec)
    del flux_vec
    rhs3 = _fine_gradient_dot(wf, p_hat_f, kfine, m)
    res_pressure = rel_residual(lhs3, rhs3, floor3)

    return {
        "advection": res_advection,
        "kinetic": res_kinetic,
        "pressure": res_pressure,
    }


def helicity_summary(u: PeriodicField, deltas=(), pq_pairs=()) -> dict:
    """Bundle of the scalar diagnostics used by the reporting pipeline."""
    out = {
        "energy": energy(u),
        "helicity": helicity(u),
        "helicity_dual": helicity_dual(u),
    }
    out["dual_mismatch"] = abs(out["helicity"] - out["helicity_dual"])
    rows = []
    for d in deltas:
        mol = Mollifier(u.grid, d)
        row = {
            "delta": float(d),
            "delta_cells": mol.cells,
            "helicity_mollified": helicity_mollified(u, mol),
        }
        chains = []
        for p, q in pq_pairs:
            c = helicity_chain(u, mol, p, q)
            c["p"] = p
            c["q"] = q
            chains.append(c)
        if chains:
            row["flux"] = chains[0]["flux"]
            row["chains"] = chains
        else:
            row["flux"] = helicity_flux(u, mol)
        rows.append(row)
    if rows:
        out["smoothed"] = rows
    return out
