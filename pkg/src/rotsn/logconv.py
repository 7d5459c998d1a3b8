"""Free-space logarithmic convolution on a Grid2D.

The kernel is tabulated on the full offset lattice of a zero-padded 2n x 2n
box, so the FFT product is the exact discrete linear (non-periodic)
convolution of the samples. The singular cell at the origin carries the
average of the kernel over one h x h cell, or optionally the lattice-sum
weight that raises the rule to fourth order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy import fft, integrate

from .grid import Grid2D

KINDS = ("log", "log1p", "log1p_inv")


# Sigma'_{m in Z^2} ln|m| g(m) - int ln|x| g(x) dx -> -LATTICE_LOG_CONSTANT * g(0)
# for smooth g of growing width; equals Z'(0)/2 for the Epstein zeta of Z^2.
LATTICE_LOG_CONSTANT = 0.5 * math.log(4.0 * math.pi) - 2.0 * math.lgamma(0.25)


def log_cell_average(h: float) -> float:
    """Mean of ``ln|x|`` over the square ``[-h/2, h/2]^2`` (closed form)."""
    return float(np.log(h / 2.0) + 0.5 * (np.log(2.0) - 3.0 + np.pi / 2.0))


@lru_cache(maxsize=64)
def _log1p_cell_average(h: float) -> float:
    # smooth apart from a cone at the corner; adaptive quadrature on one quadrant
    a = h / 2.0
    val, _ = integrate.dblquad(
        lambda y, x: np.log1p(np.hypot(x, y)), 0.0, a, 0.0, a, epsabs=1e-15, epsrel=1e-13
    )
    return float(val / a**2)


def log_origin_weight(h: float, singular: str = "cell") -> float:
    """Kernel value used for the zero offset of ``ln|x|``.

    ``'cell'`` is the cell average (second order). ``'lattice'`` is
    ``ln h + LATTICE_LOG_CONSTANT``, which cancels the leading lattice-sum
    defect and makes the rule fourth order for smooth densities.
    """
    if singular == "cell":
        return log_cell_average(h)
    if singular == "lattice":
        return float(math.log(h) + LATTICE_LOG_CONSTANT)
    raise ValueError(f"unknown singular-cell rule {singular!r}; expected 'cell' or 'lattice'")


def _kernel_table(kind: str, offsets: np.ndarray, h: float, singular: str = "cell") -> np.ndarray:
    r = np.hypot(offsets[:, None], offsets[None, :])
    with np.errstate(divide="ignore"):
        if kind == "log":
            k = np.log(r)
            k[0, 0] = log_origin_weight(h, singular)
        elif kind == "log1p":
            k = np.log1p(r)
            k[0, 0] = _log1p_cell_average(h)
        elif kind == "log1p_inv":
            k = np.log1p(1.0 / r)
            # ln(1 + 1/r) = ln(1 + r) - ln r, so the cell averages subtract too
            k[0, 0] = _log1p_cell_average(h) - log_origin_weight(h, singular)
        else:
            raise ValueError(f"unknown kernel kind {kind!r}; expected one of {KINDS}")
    return k


@dataclass(frozen=True, eq=False)
class LogKernelPlan:
    """Precomputed kernel spectra for convolutions on ``grid``.

    ``singular`` selects the zero-offset value of the ``ln|x|`` kernel (see
    ``log_origin_weight``); the ``ln(1 + 1/|x|)`` table follows it so that
    ``B0 = B1 - B2`` holds sample by sample.
    """

    grid: Grid2D
    singular: str = "cell"

    def __post_init__(self):
        log_origin_weight(1.0, self.singular)

    @property
    def padded_size(self) -> int:
        return 2 * self.grid.n

    @cached_property
    def offsets(self) -> np.ndarray:
        n, h = self.grid.n, self.grid.spacing
        m = np.arange(2 * n)
        return np.where(m < n, m, m - 2 * n) * h

    def kernel(self, kind: str = "log") -> np.ndarray:
        """Kernel samples on the padded offset lattice (index 0 is offset 0)."""
        return _kernel_table(kind, self.offsets, self.grid.spacing, self.singular)

    @cached_property
    def k0(self) -> float:
        """Cell average of ``ln|x|`` over one grid cell."""
        return log_cell_average(self.grid.spacing)

    @cached_property
    def _spectra(self) -> dict:
        return {}

    def spectrum(self, kind: str) -> np.ndarray:
        cache = self._spectra
        if kind not in cache:
            cache[kind] = fft.rfft2(self.kernel(kind))
        return cache[kind]

    def convolve(self, w, kind: str = "log") -> np.ndarray:
        g = self.grid
        w = np.asarray(w)
        if w.shape != g.shape:
            raise ValueError(f"samples of shape {w.shape} do not match plan grid {g.shape}")
        if np.iscomplexobj(w):
            return self.convolve(w.real, kind) + 1j * self.convolve(w.imag, kind)
        n2 = self.padded_size
        spec = fft.rfft2(w, s=(n2, n2)) * self.spectrum(kind)
        return fft.irfft2(spec, s=(n2, n2))[: g.n, : g.n] * g.cell_area


def make_plan(grid: Grid2D, singular: str = "cell") -> LogKernelPlan:
    return LogKernelPlan(grid, singular)


def _check_plan(plan: LogKernelPlan, grid: Grid2D | None):
    if grid is not None and grid != plan.grid:
        raise ValueError("field grid does not match the kernel plan grid")


def log_potential(plan: LogKernelPlan, w) -> np.ndarray:
    """``Phi_w(x) = int ln|x - y| w(y) dy`` sampled on the plan grid."""
    return plan.convolve(w, "log")


def _form(plan, f, g, kind) -> float:
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != g.shape:
        raise ValueError(f"shape mismatch {f.shape} vs {g.shape}")
    return plan.grid.integrate(f * plan.convolve(g, kind))


def b0(plan: LogKernelPlan, f, g) -> float:
    """``iint ln|x - y| f(x) g(y) dx dy``."""
    return _form(plan, f, g, "log")


def b1(plan: LogKernelPlan, f, g) -> float:
    """``iint ln(1 + |x - y|) f(x) g(y) dx dy``."""
    return _form(plan, f, g, "log1p")


def b2(plan: LogKernelPlan, f, g) -> float:
    """``iint ln(1 + 1/|x - y|) f(x) g(y) dx dy``."""
    return _form(plan, f, g, "log1p_inv")


def star_norm(grid: Grid2D, f) -> float:
    """``(int ln(1 + |x|) |f|^2 dx)^(1/2)``."""
    f = np.asarray(f)
    return float(np.sqrt(grid.integrate(np.log1p(grid.radius) * np.abs(f) ** 2)))


def potential_bound_constant(plan: LogKernelPlan, w, phi=None) -> float:
    """Smallest ``C`` with ``|Phi_w(x)| <= a ln(1 + |x|) + C`` on the grid.

    ``a`` is the total mass of ``w``. This is a runtime magnitude check on the
    computed potential, not a proven constant.
    """
    g = plan.grid
    a = g.integrate(w)
    if phi is None:
        phi = log_potential(plan, w)
    return float(np.max(np.abs(phi) - a * np.log1p(g.radius)))
