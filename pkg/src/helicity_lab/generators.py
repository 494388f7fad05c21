"""Deterministic generators for benchmark and rough test fields.

Random fields draw from counter-based streams keyed by (seed, shell, part),
so every shell's draws are independent of evaluation order and the sampled
bytes are identical across runs, platforms, and thread counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid3, PeriodicField, PreconditionError, ResolutionError
from .operators import leray_project

__all__ = [
    "abc_flow",
    "taylor_green",
    "LacunarySpec",
    "lacunary_field",
    "prescribed_sobolev_field",
]


def abc_flow(grid: Grid3, a: float = 1.0, b: float = 1.0, c: float = 1.0) -> PeriodicField:
    """Beltrami benchmark flow: curl u = u, a steady Euler solution."""
    x, y, z = grid.coordinates()
    n = grid.n
    u = np.empty((3, n, n, n))
    u[0] = a * np.sin(z) + c * np.cos(y)
    u[1] = b * np.sin(x) + a * np.cos(z)
    u[2] = c * np.sin(y) + b * np.cos(x)
    return PeriodicField(grid, u, solenoidal=True)


def taylor_green(grid: Grid3) -> PeriodicField:
    """Mirror-symmetric vortex with exactly zero helicity."""
    x, y, z = grid.coordinates()
    n = grid.n
    u = np.zeros((3, n, n, n))
    u[0] = np.sin(x) * np.cos(y) * np.cos(z)
    u[1] = -np.cos(x) * np.sin(y) * np.cos(z)
    return PeriodicField(grid, u, solenoidal=True)


def _stream(seed: int, shell: int, part: int = 0) -> np.random.Generator:
    if seed < 0 or seed >= 2**63:
        raise PreconditionError("seed must satisfy 0 <= seed < 2**63")
    key = np.array([np.uint64(seed), np.uint64((shell << 8) | part)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _check_octaves(octaves: int, grid: Grid3) -> None:
    if octaves < 0 or int(octaves) != octaves:
        raise PreconditionError(f"octaves must be a non-negative integer, got {octaves}")
    if octaves > 0 and 2**octaves >= grid.n / 3:
        raise ResolutionError(
            f"2**octaves = {2**octaves} does not fit below the dealias band n/3 "
            f"= {grid.n / 3:.1f}"
        )


def _shell_representatives(j: int) -> np.ndarray:
    """Integer wavevectors with 2^j <= |k| < 2^(j+1), one per {k, -k} pair."""
    lo2, hi2 = 4**j, 4 ** (j + 1)
    r = 2 ** (j + 1)
    ax = np.arange(-r, r + 1)
    kx = ax[:, None, None]
    ky = ax[None, :, None]
    kz = ax[None, None, :]
    ksq = kx * kx + ky * ky + kz * kz
    canonical = (kx > 0) | ((kx == 0) & (ky > 0)) | ((kx == 0) & (ky == 0) & (kz > 0))
    sel = (ksq >= lo2) & (ksq < hi2) & canonical
    ix, iy, iz = np.nonzero(sel)
    return np.stack([ax[ix], ax[iy], ax[iz]], axis=1)


def _add_cosines(hat: np.ndarray, grid: Grid3, kvecs: np.ndarray,
                 amps: np.ndarray, phases: np.ndarray) -> None:
    """Accumulate amp * cos(k.x + phase) terms into an rfft-layout spectrum.

    `hat` has shape (..., n, n, n/2+1); `amps` has one row per mode, either
    scalars (shape (modes,)) or component vectors (shape (modes, 3)).
    """
    n = grid.n
    half_coef = 0.5 * n**3
    for kvec, amp, phi in zip(kvecs, amps, phases):
        kx, ky, kz = (int(kvec[0]), int(kvec[1]), int(kvec[2]))
        if kz < 0 or (kz == 0 and (kx < 0 or (kx == 0 and ky < 0))):
            kx, ky, kz, phi = -kx, -ky, -kz, -phi
        c = half_coef * np.exp(1j * phi) * amp
        if kz > 0:
            hat[..., kx % n, ky % n, kz] += c
        else:
            hat[..., kx % n, ky % n, 0] += c
            hat[..., (-kx) % n, (-ky) % n, 0] += np.conj(c)


@dataclass(frozen=True)
class LacunarySpec:
    """Recipe for a lacunary (dyadic-shell) field.

    exponent: smoothness target in (0, 1); shell amplitudes scale as
        2^(-j * exponent), giving shell energies proportional to 4^(-j*exponent).
    octaves: number of dyadic shells j = 0 .. octaves-1 (needs 2^octaves < n/3).
    divergence_free: constrain vector amplitudes orthogonal to each wavevector.
    normalization: overall scale multiplying the sum.
    rank: "scalar" or "vector3".
    """

    exponent: float
    octaves: int
    seed: int
    divergence_free: bool = True
    normalization: float = 1.0
    rank: str = "vector3"

    def __post_init__(self):
        if not 0.0 < self.exponent < 1.0:
            raise PreconditionError(
                f"lacunary exponent must lie in (0, 1), got {self.exponent}"
            )
        if self.rank not in ("scalar", "vector3"):
            raise PreconditionError(f"rank must be scalar or vector3, got {self.rank!r}")


MODES_PER_SHELL = 8


def lacunary_field(spec: LacunarySpec, grid: Grid3) -> PeriodicField:
    """Sum of dyadic shells with at most MODES_PER_SHELL random modes each.

    Each shell j contributes normalization * 2^(-j*exponent) * cos(k.x + phase)
    terms with wavevectors drawn without replacement from 2^j <= |k| < 2^(j+1).
    Per shell, the stream draws mode indices, then phases, then directions;
    this order is part of the reproducibility contract.
    """
    _check_octaves(spec.octaves, grid)
    n = grid.n
    vector = spec.rank == "vector3"
    shape = (3, n, n, n // 2 + 1) if vector else (n, n, n // 2 + 1)
    hat = np.zeros(shape, dtype=np.complex128)
    for j in range(spec.octaves):
        reps = _shell_representatives(j)
        rng = _stream(spec.seed, j)
        count = min(MODES_PER_SHELL, len(reps))
        idx = rng.choice(len(reps), size=count, replace=False)
        kvecs = reps[idx]
        phases = rng.uniform(0.0, 2.0 * np.pi, size=count)
        scale = spec.normalization * 2.0 ** (-j * spec.exponent)
        if not vector:
            amps = np.full(count, scale)
        elif spec.divergence_free:
            khat = kvecs / np.linalg.norm(kvecs, axis=1, keepdims=True)
            helper = np.where(
                np.abs(khat[:, :1]) < 0.9,
                np.array([[1.0, 0.0, 0.0]]),
                np.array([[0.0, 1.0, 0.0]]),
            )
            e1 = np.cross(khat, helper)
            e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
            e2 = np.cross(khat, e1)
            psi = rng.uniform(0.0, 2.0 * np.pi, size=count)
            direction = np.cos(psi)[:, None] * e1 + np.sin(psi)[:, None] * e2
            amps = scale * direction
        else:
            raw = rng.normal(size=(count, 3))
            direction = raw / np.linalg.norm(raw, axis=1, keepdims=True)
            amps = scale * direction
        _add_cosines(hat, grid, kvecs, amps, phases)
    solenoidal = vector and spec.divergence_free
    return PeriodicField.from_spectral(grid, hat, solenoidal=solenoidal)


def _random_phase_shell(grid: Grid3, mask: np.ndarray, rng: np.random.Generator,
                        coef: float) -> np.ndarray:
    """Unit-amplitude random-phase coefficients on the masked modes.

    Fills the rfft layout so the physical field is real: interior z-planes are
    free, the kz = 0 plane is filled on a canonical half and mirrored.
    """
    n = grid.n
    out = np.zeros(grid.spectral_shape, dtype=np.complex128)
    interior = mask.copy()
    interior[:, :, 0] = False
    n_int = int(interior.sum())
    if n_int:
        out[interior] = coef * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=n_int))
    plane = np.nonzero(mask[:, :, 0])
    ix, iy = plane
    if ix.size:
        sx = np.where(ix <= n // 2, ix, ix - n).astype(np.int64)
        sy = np.where(iy <= n // 2, iy, iy - n).astype(np.int64)
        canonical = (sx > 0) | ((sx == 0) & (sy > 0))
        cx, cy = ix[canonical], iy[canonical]
        c = coef * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=cx.size))
        out[cx, cy, 0] = c
        out[(-cx) % n, (-cy) % n, 0] = np.conj(c)
    return out


def prescribed_sobolev_field(
    alpha: float,
    q_target: float,
    grid: Grid3,
    seed: int,
    octaves: int = 4,
    normalization: float = 1.0,
    rank: str = "vector3",
    divergence_free: bool = True,
) -> PeriodicField:
    """Random-phase field whose order-alpha L2 Sobolev seminorm is shell-uniform.

    Every lattice mode in shell 2^j <= |k| < 2^(j+1) carries amplitude
    normalization * 2^(-j*alpha) / sqrt(shell mode count), so each shell
    contributes the same weight to the seminorm and the truncation at
    `octaves` shells is the only cutoff. `q_target` records the integrability
    the field is meant to exercise (1, 2, or inf); the construction itself is
    L2-calibrated and the value only gates validation, mirroring the fact that
    sharp q-dependent synthesis is out of scope.
    """
    if not 0.0 < alpha < 1.0:
        raise PreconditionError(f"alpha must lie in (0, 1), got {alpha}")
    if q_target not in (1, 2, math.inf):
        raise PreconditionError(f"q_target must be 1, 2 or inf, got {q_target}")
    if rank not in ("scalar", "vector3"):
        raise PreconditionError(f"rank must be scalar or vector3, got {rank!r}")
    _check_octaves(octaves, grid)
    n = grid.n
    vector = rank == "vector3"
    radius = np.sqrt(grid.k_sq)
    weights = np.broadcast_to(grid.parseval_weights, grid.spectral_shape)
    comps = 3 if vector else 1
    shape = (comps, n, n, n // 2 + 1)
    hat = np.zeros(shape, dtype=np.complex128)
    half_coef = 0.5 * n**3
    for j in range(octaves):
        mask = (radius >= 2.0**j) & (radius < 2.0 ** (j + 1))
        pair_count = float(np.sum(np.where(mask, weights, 0.0))) / 2.0
        if pair_count == 0.0:
            continue
        amp = normalization * 2.0 ** (-j * alpha) / np.sqrt(pair_count)
        for c in range(comps):
            hat[c] += _random_phase_shell(grid, mask, _stream(seed, j, c), amp * half_coef)
    if not vector:
        return PeriodicField.from_spectral(grid, hat[0])
    out = PeriodicField.from_spectral(grid, hat)
    if divergence_free:
        out = leray_project(out)
    return out
