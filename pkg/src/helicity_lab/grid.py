"""Periodic grid, sampled fields, and the spectral plumbing shared by every module.

The domain is the torus [0, 2*pi)^3 sampled on N^3 points. Real fields are
stored in physical space with axes ordered (x, y, z); transforms use the real
FFT over the last three axes, so spectral arrays have shape (..., N, N, N//2+1).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import fft as _fft

__all__ = [
    "Grid3",
    "PeriodicField",
    "PreconditionError",
    "ResolutionError",
    "BlowUpError",
    "TWO_PI",
]

TWO_PI = 2.0 * np.pi


class PreconditionError(ValueError):
    """An input violates a documented contract (caller error, exit code 1)."""


class ResolutionError(PreconditionError):
    """The grid cannot resolve the requested scale."""


class BlowUpError(RuntimeError):
    """A numerical computation produced non-finite values (exit code 2)."""


def fft_workers() -> int:
    """Worker count for scipy.fft, capped by HELICITY_LAB_THREADS.

    Results are independent of the worker count (each 1D line transform is
    computed identically); the cap only bounds CPU use.
    """
    cap = os.environ.get("HELICITY_LAB_THREADS", "")
    if cap.strip():
        try:
            n = int(cap)
        except ValueError as exc:
            raise PreconditionError(
                f"HELICITY_LAB_THREADS must be an integer, got {cap!r}"
            ) from exc
        if n < 1:
            raise PreconditionError("HELICITY_LAB_THREADS must be >= 1")
        return min(n, os.cpu_count() or 1)
    return 1


def rfftn(values: np.ndarray) -> np.ndarray:
    """Forward real transform over the trailing three axes."""
    axes = tuple(range(values.ndim - 3, values.ndim))
    return _fft.rfftn(values, axes=axes, workers=fft_workers())


def irfftn(hat: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`rfftn` back to an n^3 physical grid."""
    axes = tuple(range(hat.ndim - 3, hat.ndim))
    return _fft.irfftn(hat, s=(n, n, n), axes=axes, workers=fft_workers())


@lru_cache(maxsize=32)
def _grid_tables(n: int):
    """Cached wavenumber tables for an n^3 grid (rfft layout on the z axis)."""
    kfull = np.fft.fftfreq(n, d=1.0 / n)  # 0, 1, ..., n/2-1, -n/2, ..., -1
    kz = np.arange(n // 2 + 1, dtype=np.float64)
    kx = kfull.reshape(n, 1, 1)
    ky = kfull.reshape(1, n, 1)
    kzb = kz.reshape(1, 1, n // 2 + 1)
    k_sq = kx * kx + ky * ky + kzb * kzb
    # Odd-derivative tables: the Nyquist plane carries no sign information, so
    # first derivatives zero it out.
    kodd = kfull.copy()
    kodd[n // 2] = 0.0
    kzodd = kz.copy()
    kzodd[-1] = 0.0
    kd = (
        kodd.reshape(n, 1, 1),
        kodd.reshape(1, n, 1),
        kzodd.reshape(1, 1, n // 2 + 1),
    )
    # Parseval weights: interior z-planes represent a conjugate pair.
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    weights = w.reshape(1, 1, n // 2 + 1)
    # Dealias mask for quadratic products, chosen so that triple products of
    # retained modes are quadrature-exact on the n^3 grid (3*kmax <= n-1).
    kmax = (n - 1) // 3
    mask = (np.abs(kx) <= kmax) & (np.abs(ky) <= kmax) & (np.abs(kzb) <= kmax)
    return kx, ky, kzb, k_sq, kd, weights, mask, kmax


@dataclass(frozen=True)
class Grid3:
    """Uniform N^3 grid on [0, 2*pi)^3; N a power of two, N >= 8."""

    n: int

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 8 or (n & (n - 1)) != 0:
            raise PreconditionError(f"grid size must be a power of two >= 8, got {n!r}")

    @property
    def h(self) -> float:
        return TWO_PI / self.n

    @property
    def length(self) -> float:
        return TWO_PI

    @property
    def cell_volume(self) -> float:
        return self.h**3

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n // 2 + 1)

    def axis(self) -> np.ndarray:
        return np.arange(self.n) * self.h

    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable x, y, z sample coordinates."""
        x = self.axis()
        return x.reshape(-1, 1, 1), x.reshape(1, -1, 1), x.reshape(1, 1, -1)

    # -- wavenumber tables ------------------------------------------------

    @property
    def kx(self) -> np.ndarray:
        return _grid_tables(self.n)[0]

    @property
    def ky(self) -> np.ndarray:
        return _grid_tables(self.n)[1]

    @property
    def kz(self) -> np.ndarray:
        return _grid_tables(self.n)[2]

    @property
    def k_sq(self) -> np.ndarray:
        return _grid_tables(self.n)[3]

    @property
    def k_derivative(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-axis wavenumbers with the Nyquist plane zeroed (odd operators)."""
        return _grid_tables(self.n)[4]

    @property
    def parseval_weights(self) -> np.ndarray:
        return _grid_tables(self.n)[5]

    @property
    def dealias_mask(self) -> np.ndarray:
        return _grid_tables(self.n)[6]

    @property
    def dealias_kmax(self) -> int:
        return _grid_tables(self.n)[7]

    def min_image_radius(self) -> np.ndarray:
        """Distance from each grid point to the origin under periodicity."""
        i = np.arange(self.n)
        d = np.minimum(i, self.n - i) * self.h
        dx = d.reshape(-1, 1, 1)
        dy = d.reshape(1, -1, 1)
        dz = d.reshape(1, 1, -1)
        return np.sqrt(dx * dx + dy * dy + dz * dz)


_RANK_NAMES = {3: "scalar", 4: "vector3", 5: "tensor3x3"}


class PeriodicField:
    """A real field sampled on a :class:`Grid3`, with a lazy spectral cache.

    Fields have value semantics: sample arrays are frozen on construction and
    every operation returns a new field, so a cached transform can never drift
    out of sync with the samples.

    Ranks and shapes: scalar (N,N,N), vector3 (3,N,N,N), tensor3x3 (3,3,N,N,N).
    """

    __slots__ = ("grid", "values", "solenoidal", "_hat")

    def __init__(self, grid: Grid3, values: np.ndarray, *, solenoidal: bool = False):
        values = np.asarray(values, dtype=np.float64)
        n = grid.n
        if values.ndim not in _RANK_NAMES or values.shape[-3:] != (n, n, n):
            raise PreconditionError(
                f"field values must have shape (n,n,n), (3,n,n,n) or (3,3,n,n,n) "
                f"for n={n}, got {values.shape}"
            )
        if values.ndim >= 4 and values.shape[: values.ndim - 3] not in ((3,), (3, 3)):
            raise PreconditionError(f"unsupported component shape {values.shape}")
        if not np.isfinite(values).all():
            raise PreconditionError("field values must be finite")
        if not values.flags.owndata:
            values = values.copy()
        values.setflags(write=False)
        self.grid = grid
        self.values = values
        self.solenoidal = bool(solenoidal)
        self._hat = None

    @classmethod
    def from_spectral(
        cls, grid: Grid3, hat: np.ndarray, *, solenoidal: bool = False
    ) -> "PeriodicField":
        """Build a field from rfft coefficients (assumed Hermitian-consistent)."""
        if hat.shape[-3:] != grid.spectral_shape:
            raise PreconditionError(
                f"spectral shape {hat.shape} does not match grid {grid.spectral_shape}"
            )
        values = irfftn(hat, grid.n)
        out = cls(grid, values, solenoidal=solenoidal)
        out._hat = np.asarray(hat, dtype=np.complex128)
        out._hat.setflags(write=False)
        return out

    @property
    def rank(self) -> str:
        return _RANK_NAMES[self.values.ndim]

    @property
    def hat(self) -> np.ndarray:
        """rfft coefficients over the trailing three axes (cached)."""
        if self._hat is None:
            h = rfftn(self.values)
            h.setflags(write=False)
            self._hat = h
        return self._hat

    def component(self, *index: int) -> "PeriodicField":
        if self.values.ndim == 3:
            raise PreconditionError("scalar fields have no components")
        comp = PeriodicField(self.grid, self.values[index])
        if self._hat is not None:
            comp._hat = self._hat[index]
        return comp

    def magnitude(self) -> np.ndarray:
        """Pointwise Euclidean/Frobenius magnitude as a plain array."""
        if self.values.ndim == 3:
            return np.abs(self.values)
        axes = tuple(range(self.values.ndim - 3))
        return np.sqrt(np.sum(self.values * self.values, axis=axes))

    def mean(self) -> np.ndarray:
        return self.values.mean(axis=(-3, -2, -1))

    def integral(self) -> np.ndarray:
        return self.values.sum(axis=(-3, -2, -1)) * self.grid.cell_volume

    def l2(self) -> float:
        """Discrete L2 norm, sqrt(h^3 * sum |f|^2)."""
        return float(np.sqrt(np.sum(self.values * self.values) * self.grid.cell_volume))

    def spectral_l2(self) -> float:
        """L2 norm evaluated from the coefficient side (Parseval)."""
        c = self.hat / self.grid.n**3
        total = np.sum(self.grid.parseval_weights * (c.real**2 + c.imag**2))
        return float(np.sqrt(TWO_PI**3 * total))

    def bandwidth(self, tol: float = 1e-13) -> int:
        """Largest per-axis |k| carrying relative weight above tol."""
        mag = np.abs(self.hat)
        if mag.ndim > 3:
            mag = mag.max(axis=tuple(range(mag.ndim - 3)))
        peak = mag.max()
        if peak == 0.0:
            return 0
        g = self.grid
        live = mag > tol * peak
        kinf = np.maximum(np.abs(g.kx), np.maximum(np.abs(g.ky), np.abs(g.kz)))
        return int(np.max(np.where(live, kinf, 0.0)))

    # -- value-semantics arithmetic ---------------------------------------

    def _binary(self, other, op) -> "PeriodicField":
        if not isinstance(other, PeriodicField):
            return NotImplemented
        if other.grid.n != self.grid.n or other.values.shape != self.values.shape:
            raise PreconditionError("field shapes do not match")
        return PeriodicField(self.grid, op(self.values, other.values))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return PeriodicField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return PeriodicField(self.grid, -self.values, solenoidal=self.solenoidal)

    def __repr__(self):
        return f"PeriodicField(rank={self.rank}, n={self.grid.n})"


# -- spectral padding and alias-free products ------------------------------


def pad_spectrum(hat: np.ndarray, n: int, m: int) -> np.ndarray:
    """Embed n-grid rfft coefficients into an m-grid layout (m > n).

    Modes with any |k_i| >= n/2 (the ambiguous Nyquist plane) are dropped.
    The result is scaled so physical samples keep their point values.
    """
    if m <= n:
        raise PreconditionError("padded size must exceed source size")
    half = n // 2
    shape = hat.shape[:-3] + (m, m, m // 2 + 1)
    out = np.zeros(shape, dtype=np.complex128)
    lo = slice(0, half)
    hi_src = slice(half + 1, n)
    hi_dst = slice(m - (half - 1), m)
    for sx_src, sx_dst in ((lo, lo), (hi_src, hi_dst)):
        for sy_src, sy_dst in ((lo, lo), (hi_src, hi_dst)):
            out[..., sx_dst, sy_dst, lo] = hat[..., sx_src, sy_src, lo]
    out *= (m / n) ** 3
    return out

def truncate_spectrum(hat: np.ndarray, m: int, n: int) -> np.ndarray:
    """Restrict m-grid rfft coefficients to an n-grid layout (inverse of pad).

    Target Nyquist planes are zeroed, so the result is alias-safe whenever the
    fine representation was exact.
    """
    if n >= m:
        raise PreconditionError("target size must be below source size")
    half = n // 2
    shape = hat.shape[:-3] + (n, n, n // 2 + 1)
    out = np.zeros(shape, dtype=np.complex128)
    lo = slice(0, half)
    hi_src = slice(m - (half - 1), m)
    hi_dst = slice(half + 1, n)
    for sx_src, sx_dst in ((lo, lo), (hi_src, hi_dst)):
        for sy_src, sy_dst in ((lo, lo), (hi_src, hi_dst)):
            out[..., sx_dst, sy_dst, lo] = hat[..., sx_src, sy_src, lo]
    out *= (n / m) ** 3
    return out


def padded_size(n: int) -> int:
    """Fine-grid size for alias-free quadratic products (3/2 rule)."""
    return (3 * n) // 2


def fine_values(hat: np.ndarray, n: int, m: int | None = None) -> np.ndarray:
    """Physical samples of an n-grid spectrum on the 3/2 zero-padded grid."""
    m = padded_size(n) if m is None else m
    return irfftn(pad_spectrum(hat, n, m), m)


def product_spectrum(
    fhat: np.ndarray, ghat: np.ndarray, n: int
) -> np.ndarray:
    """Alias-free rfft coefficients of the pointwise product f*g.

    Both factors are zero-padded to the 3/2 grid, multiplied there, and the
    result is truncated back; retained modes are exact for band-limited input.
    Works componentwise over leading axes (broadcasting applies).
    """
    m = padded_size(n)
    pf = fine_values(fhat, n, m)
    pg = fine_values(ghat, n, m)
    pf = pf * pg
    del pg
    return truncate_spectrum(rfftn(pf), m, n)
