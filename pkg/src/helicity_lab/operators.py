"""Differential and nonlocal operators acting on periodic fields.

All operators are spectral multipliers. First derivatives zero the Nyquist
plane of the differentiated axis (the sign of that mode is not representable),
so odd operators compose cleanly: curl(gradient(f)) and div(curl(v)) vanish
identically at machine precision.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid3, PeriodicField, PreconditionError

__all__ = [
    "gradient",
    "curl",
    "divergence",
    "leray_project",
    "fractional_laplacian",
    "biot_savart",
]


def _require_rank(f: PeriodicField, rank: str, op: str) -> None:
    if f.rank != rank:
        raise PreconditionError(f"{op} expects a {rank} field, got {f.rank}")


def gradient(f: PeriodicField) -> PeriodicField:
    """Gradient; raises rank by one. (grad v)[i, j] = d_i v_j for vectors."""
    g = f.grid
    kd = g.k_derivative
    if f.rank == "scalar":
        hat = np.stack([1j * kd[i] * f.hat for i in range(3)])
        return PeriodicField.from_spectral(g, hat)
    if f.rank == "vector3":
        hat = np.stack([1j * kd[i] * f.hat for i in range(3)])  # (i, j, kx, ky, kz)
        return PeriodicField.from_spectral(g, hat)
    raise PreconditionError("gradient of tensor3x3 fields is unsupported")


def curl(v: PeriodicField) -> PeriodicField:
    """Curl of a vector field; the result is mean-free and solenoidal."""
    _require_rank(v, "vector3", "curl")
    g = v.grid
    kx, ky, kz = g.k_derivative
    vh = v.hat
    hat = np.stack(
        [
            1j * (ky * vh[2] - kz * vh[1]),
            1j * (kz * vh[0] - kx * vh[2]),
            1j * (kx * vh[1] - ky * vh[0]),
        ]
    )
    return PeriodicField.from_spectral(g, hat, solenoidal=True)


def divergence(f: PeriodicField) -> PeriodicField:
    """Divergence; lowers rank by one. (div T)[j] = d_i T[i, j] for tensors."""
    g = f.grid
    kx, ky, kz = g.k_derivative
    if f.rank == "vector3":
        vh = f.hat
        hat = 1j * (kx * vh[0] + ky * vh[1] + kz * vh[2])
        return PeriodicField.from_spectral(g, hat)
    if f.rank == "tensor3x3":
        th = f.hat
        hat = np.stack(
            [1j * (kx * th[0, j] + ky * th[1, j] + kz * th[2, j]) for j in range(3)]
        )
        return PeriodicField.from_spectral(g, hat)
    raise PreconditionError("divergence expects a vector3 or tensor3x3 field")


def leray_project(v: PeriodicField) -> PeriodicField:
    """Project onto divergence-free fields: u - grad(laplace^-1 div u).

    Idempotent and self-adjoint in the discrete L2 pairing. The mean mode and
    the Nyquist planes pass through unchanged.
    """
    _require_rank(v, "vector3", "leray_project")
    g = v.grid
    kx, ky, kz = g.k_derivative
    k_sq = kx * kx + ky * ky + kz * kz
    inv = np.zeros_like(k_sq)
    np.divide(1.0, k_sq, out=inv, where=k_sq > 0)
    vh = v.hat
    kdotv = (kx * vh[0] + ky * vh[1] + kz * vh[2]) * inv
    hat = np.stack([vh[0] - kx * kdotv, vh[1] - ky * kdotv, vh[2] - kz * kdotv])
    return PeriodicField.from_spectral(g, hat, solenoidal=True)


def fractional_laplacian(
    f: PeriodicField, s: float, *, strict: bool = False
) -> PeriodicField:
    """Apply (-laplace)^s through the spectral multiplier |k|^(2s), s in [-1, 2].

    s = 0 returns the field unchanged (mean preserved). For s != 0 the mean
    mode maps to zero; negative s additionally requires mean-free input when
    strict (the inverse operator is undefined on constants).
    """
    s = float(s)
    if not -1.0 <= s <= 2.0:
        raise PreconditionError(f"fractional exponent must lie in [-1, 2], got {s}")
    if s == 0.0:
        return PeriodicField(f.grid, f.values, solenoidal=f.solenoidal)
    g = f.grid
    k_sq = g.k_sq
    if s < 0 and strict:
        mean_amp = float(np.max(np.abs(np.atleast_1d(f.mean()))))
        scale = float(np.max(f.magnitude()))
        if scale > 0 and mean_amp > 1e-12 * scale:
            raise PreconditionError(
                "negative-order operator requires a mean-free field "
                f"(relative mean {mean_amp / scale:.3e})"
            )
    with np.errstate(divide="ignore"):
        mult = np.where(k_sq > 0, k_sq, 1.0) ** s
    mult[0, 0, 0] = 0.0
    return PeriodicField.from_spectral(g, f.hat * mult, solenoidal=f.solenoidal)


def biot_savart(w: PeriodicField, *, tol: float = 1e-10) -> PeriodicField:
    """Velocity with curl u = w: u = curl (-laplace)^-1 w for admissible w.

    Preconditions: w mean-free and divergence-free to relative tolerance
    `tol`; then curl(biot_savart(w)) reproduces w on all non-Nyquist modes.
    """
    _require_rank(w, "vector3", "biot_savart")
    g = w.grid
    kx, ky, kz = g.k_derivative
    wh = w.hat
    mean_amp = float(np.max(np.abs(wh[:, 0, 0, 0]))) / g.n**3
    field_scale = float(np.max(w.magnitude()))
    if mean_amp > tol * max(field_scale, 1e-300):
        raise PreconditionError(
            f"biot_savart requires a mean-free field (relative mean "
            f"{mean_amp / field_scale:.3e})"
        )
    grad_scale = float(np.sqrt(np.sum(g.k_sq * (wh.real**2 + wh.imag**2))))
    if grad_scale == 0.0:
        return PeriodicField(g, np.zeros_like(w.values), solenoidal=True)
    div_amp = float(
        np.sqrt(np.sum(np.abs(kx * wh[0] + ky * wh[1] + kz * wh[2]) ** 2))
    )
    if div_amp > tol * grad_scale:
        raise PreconditionError(
            f"biot_savart requires a divergence-free field (relative "
            f"divergence {div_amp / grad_scale:.3e})"
        )
    k_sq = kx * kx + ky * ky + kz * kz
    inv = np.zeros_like(k_sq)
    np.divide(1.0, k_sq, out=inv, where=k_sq > 0)
    hat = np.stack(
        [
            1j * (ky * wh[2] - kz * wh[1]) * inv,
            1j * (kz * wh[0] - kx * wh[2]) * inv,
            1j * (kx * wh[1] - ky * wh[0]) * inv,
        ]
    )
    return PeriodicField.from_spectral(g, hat, solenoidal=True)
