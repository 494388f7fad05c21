"""Shared builders for the test suite: reproducible band-limited fields."""

import numpy as np

from helicity_lab import Grid3, leray_project
from helicity_lab.grid import PeriodicField, rfftn


def band_limited(grid: Grid3, kmax: int, seed: int, rank="vector3",
                 solenoidal=False) -> PeriodicField:
    """Random real field with hard spectral support |k|_inf <= kmax."""
    rng = np.random.default_rng(seed)
    n = grid.n
    shape = (3, n, n, n) if rank == "vector3" else (n, n, n)
    hat = rfftn(rng.standard_normal(shape))
    keep = (np.abs(grid.kx) <= kmax) & (np.abs(grid.ky) <= kmax) \
        & (np.abs(grid.kz) <= kmax)
    hat *= keep
    f = PeriodicField.from_spectral(grid, hat)
    if solenoidal:
        f = leray_project(f)
    return f


def rel_err(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)
