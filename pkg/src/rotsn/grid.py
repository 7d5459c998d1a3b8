"""Uniform square grids on [-L, L)^2 with spectral differentiation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class BoundaryMassWarning(UserWarning):
    """A field carries non-negligible weight near the edge of the box."""


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid2D:
    """Truncated plane [-L, L)^2 sampled on n x n points.

    Arrays live in ``indexing='ij'`` order: ``values[i, j]`` is the sample at
    ``(x[i], x[j])`` with ``x[i] = -L + i*h``.
    """

    n: int
    half_width: float
    spacing: float = field(init=False)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or not _is_power_of_two(int(self.n)):
            raise ValueError(f"n must be a power of two, got {self.n}")
        if self.n < 8:
            raise ValueError(f"n must be at least 8, got {self.n}")
        if not self.half_width > 0 or not np.isfinite(self.half_width):
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "half_width", float(self.half_width))
        object.__setattr__(self, "spacing", 2.0 * self.half_width / self.n)

    # frozen dataclasses hash on fields; cached arrays must not take part
    def __hash__(self):
        return hash((self.n, self.half_width))

    def __eq__(self, other):
        if not isinstance(other, Grid2D):
            return NotImplemented
        return self.n == other.n and self.half_width == other.half_width

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    @cached_property
    def x(self) -> np.ndarray:
        """1-D sample coordinates ``-L + i*h``."""
        return -self.half_width + self.spacing * np.arange(self.n)

    @cached_property
    def freq(self) -> np.ndarray:
        """Angular wavenumbers ``pi*j/L`` in FFT order (Nyquist entry negative)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(self.x, self.x, indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        x1, x2 = self.mesh
        return np.hypot(x1, x2)

    @cached_property
    def radius_sq(self) -> np.ndarray:
        x1, x2 = self.mesh
        return x1**2 + x2**2

    @cached_property
    def _deriv_symbol(self) -> np.ndarray:
        # the Nyquist mode has no odd partner, so its derivative is dropped
        k = 1j * self.freq
        k[self.n // 2] = 0.0
        return k

    @cached_property
    def k_sq(self) -> np.ndarray:
        """Symbol of ``-Laplacian``; matches ``gradient`` so that
        ``<u, -Lap u> = integral |grad u|^2`` holds exactly on the grid."""
        k = np.abs(self._deriv_symbol) ** 2
        return k[:, None] + k[None, :]

    @cached_property
    def outer_band(self) -> np.ndarray:
        """Mask of the outer 10% frame, where ``max(|x1|, |x2|) > 0.9 L``."""
        x1, x2 = self.mesh
        return np.maximum(np.abs(x1), np.abs(x2)) > 0.9 * self.half_width

    def contains(self, point, margin: float = 0.0) -> bool:
        p = np.asarray(point, dtype=float)
        lo, hi = -self.half_width + margin, self.half_width - self.spacing - margin
        return bool(np.all(p >= lo) and np.all(p <= hi))

    # ------------------------------------------------------------------
    def _check(self, values) -> np.ndarray:
        values = np.asarray(values)
        if values.shape != self.shape:
            raise ValueError(f"expected samples of shape {self.shape}, got {values.shape}")
        return values

    def integrate(self, values) -> float:
        """Uniform-grid quadrature ``h^2 * sum(values)``."""
        values = self._check(values)
        return float(np.real(values.sum()) * self.cell_area)

    def gradient(self, values, check_decay: bool = True):
        """Spectral partial derivatives ``(d/dx1, d/dx2)``.

        Real input gives real output.
        """
        values = self._check(values)
        if check_decay:
            self._warn_if_not_decayed(values)
        spec = np.fft.fft2(values)
        d = self._deriv_symbol
        g1 = np.fft.ifft2(spec * d[:, None])
        g2 = np.fft.ifft2(spec * d[None, :])
        if np.isrealobj(values):
            return g1.real, g2.real
        return g1, g2

    def laplacian(self, values) -> np.ndarray:
        values = self._check(values)
        out = np.fft.ifft2(-self.k_sq * np.fft.fft2(values))
        return out.real if np.isrealobj(values) else out

    def gradient_energy(self, values) -> float:
        """``integral |grad u|^2`` evaluated in Fourier space (Parseval)."""
        values = self._check(values)
        spec = np.fft.fft2(values)
        return float(np.sum(self.k_sq * np.abs(spec) ** 2) * self.cell_area / self.n**2)

    def modulus_gradient(self, values, rel_floor: float = 1e-12):
        """Gradient of ``|u|`` computed as ``Re(conj(u) grad u) / |u|``.

        Zero wherever ``|u| <= rel_floor * max|u|``.
        """
        values = self._check(values)
        g1, g2 = self.gradient(values, check_decay=False)
        mod = np.abs(values)
        peak = mod.max() if mod.size else 0.0
        mask = mod > rel_floor * peak
        safe = np.where(mask, mod, 1.0)
        conj = np.conj(values)
        m1 = np.where(mask, np.real(conj * g1) / safe, 0.0)
        m2 = np.where(mask, np.real(conj * g2) / safe, 0.0)
        return m1, m2

    def spectral_mass(self, values) -> float:
        """``integral |u|^2`` computed from the DFT coefficients."""
        values = self._check(values)
        spec = np.fft.fft2(values)
        return float(np.sum(np.abs(spec) ** 2) * self.cell_area / self.n**2)

    def boundary_fraction(self, values) -> float:
        """Fraction of ``integral |u|^2`` carried by the outer 10% frame."""
        dens = np.abs(self._check(values)) ** 2
        total = dens.sum()
        if total == 0:
            return 0.0
        return float(dens[self.outer_band].sum() / total)

    def _warn_if_not_decayed(self, values, rel: float = 1e-12):
        mod = np.abs(values)
        peak = mod.max()
        if peak == 0:
            return
        edge = max(mod[0, :].max(), mod[-1, :].max(), mod[:, 0].max(), mod[:, -1].max())
        if edge > rel * peak:
            warnings.warn(
                f"field is {edge / peak:.2e} of its peak on the boundary; "
                "spectral derivatives assume effective compact support",
                BoundaryMassWarning,
                stacklevel=3,
            )


def make_grid(n: int, half_width: float) -> Grid2D:
    return Grid2D(n, half_width)


def integrate(grid: Grid2D, values) -> float:
    return grid.integrate(values)


def spectral_gradient(grid: Grid2D, values, check_decay: bool = True):
    return grid.gradient(values, check_decay=check_decay)
