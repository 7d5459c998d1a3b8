"""Complex states on a grid, trapping potentials and trial-state families."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .grid import Grid2D
from .groundstate import RadialProfile, sample_scaled


@dataclass(frozen=True, eq=False)
class ComplexField2D:
    """Complex samples of a state ``u`` on ``grid``.

    The sample array is copied and made read-only. ``boundary_fraction`` is
    the share of ``int |u|^2`` held by the outer 10% frame of the box.
    """

    grid: Grid2D
    values: np.ndarray
    boundary_fraction: float = field(init=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.complex128)
        if vals.shape != self.grid.shape:
            raise ValueError(f"expected samples of shape {self.grid.shape}, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite samples")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "boundary_fraction", self.grid.boundary_fraction(vals))

    def with_values(self, values) -> "ComplexField2D":
        return ComplexField2D(self.grid, values)

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def conj(self) -> "ComplexField2D":
        return self.with_values(np.conj(self.values))


def as_field(grid: Grid2D, values) -> ComplexField2D:
    return ComplexField2D(grid, values)


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class PotentialSpec:
    """Trapping potential ``V`` with rotation speed ``omega``.

    Parameters
    ----------
    kind : {'harmonic', 'power', 'tabulated'}
        ``harmonic``: ``V = (lam^2 / 4) |x|^2``. ``power``: ``V = coeff |x|^s``
        with ``s >= 2``. ``tabulated``: radial ``V = func(|x|)`` with a
        user-supplied ``omega_star``.
    """

    kind: str = "harmonic"
    omega: float = 0.0
    lam: float = 2.0
    s: float = 4.0
    coeff: float = 1.0
    func: Callable | None = None
    user_omega_star: float | None = None

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError("omega must be non-negative")
        if self.kind == "harmonic":
            if not self.lam > 0:
                raise ValueError("harmonic strength lam must be positive")
        elif self.kind == "power":
            if self.s < 2 or not self.coeff > 0:
                raise ValueError("power potential needs s >= 2 and coeff > 0")
        elif self.kind == "tabulated":
            if self.func is None or self.user_omega_star is None:
                raise ValueError("tabulated potential needs func and user_omega_star")
        else:
            raise ValueError(f"unknown potential kind {self.kind!r}")

    @property
    def omega_star(self) -> float:
        """Largest rotation speed for which ``V - omega^2 |x|^2 / 4`` still confines."""
        if self.kind == "harmonic":
            return float(self.lam)
        if self.kind == "power":
            return math.inf if self.s > 2 else 2.0 * math.sqrt(self.coeff)
        return float(self.user_omega_star)

    @property
    def supercritical(self) -> bool:
        return self.omega > self.omega_star

    def radial(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.kind == "harmonic":
            out = 0.25 * self.lam**2 * r**2
        elif self.kind == "power":
            out = self.coeff * r**self.s
        else:
            out = np.asarray(self.func(r), dtype=float)
        if np.any(out < 0):
            raise ValueError("potential takes negative values")
        return out

    def v(self, x1, x2) -> np.ndarray:
        return self.radial(np.hypot(x1, x2))

    def v_omega(self, x1, x2) -> np.ndarray:
        """Effective potential ``V(x) - omega^2 |x|^2 / 4``."""
        return self.v(x1, x2) - 0.25 * self.omega**2 * (np.asarray(x1) ** 2 + np.asarray(x2) ** 2)

    def v_omega_radial(self, r) -> np.ndarray:
        return self.radial(r) - 0.25 * self.omega**2 * np.asarray(r) ** 2

    def on_grid(self, grid: Grid2D) -> np.ndarray:
        return self.radial(grid.radius)

    def with_omega(self, omega: float) -> "PotentialSpec":
        return PotentialSpec(self.kind, omega, self.lam, self.s, self.coeff, self.func, self.user_omega_star)


# ---------------------------------------------------------------------------
# observables


def mass(u: ComplexField2D) -> float:
    return u.grid.integrate(np.abs(u.values) ** 2)


def angular_current(u: ComplexField2D) -> np.ndarray:
    """Pointwise ``x_perp . Im(conj(u) grad u)`` with ``x_perp = (-x2, x1)``."""
    g = u.grid
    g1, g2 = g.gradient(u.values, check_decay=False)
    x1, x2 = g.mesh
    conj = np.conj(u.values)
    return -x2 * np.imag(conj * g1) + x1 * np.imag(conj * g2)


def rotation_term(u: ComplexField2D) -> float:
    """``int x_perp . (iu, grad u) dx``; equals ``l * mass`` for a winding-``l`` vortex."""
    return u.grid.integrate(angular_current(u))


def kinetic(u: ComplexField2D) -> float:
    return u.grid.gradient_energy(u.values)


def modulus_gradient_energy(u: ComplexField2D) -> float:
    """``int |grad |u||^2`` with the guarded modulus gradient."""
    m1, m2 = u.grid.modulus_gradient(u.values)
    return u.grid.integrate(m1**2 + m2**2)


def blowup_scale(u: ComplexField2D) -> float:
    """``(int |grad |u||^2)^(-1/2)``."""
    val = modulus_gradient_energy(u)
    if not val > 0:
        raise ValueError("modulus gradient energy vanishes; the blow-up scale is undefined")
    return val ** -0.5


# ---------------------------------------------------------------------------
# trial states


def cutoff(r) -> np.ndarray:
    """Smooth radial bump: 1 for ``r <= 1``, 0 for ``r >= 2``, C-infinity between.

    Built as ``f(2 - r) / (f(2 - r) + f(r - 1))`` with ``f(t) = exp(-1/t)`` for
    ``t > 0`` and 0 otherwise.
    """
    r = np.asarray(r, dtype=float)

    def f(t):
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(-1.0 / t[pos])
        return out

    a = f(2.0 - r)
    b = f(r - 1.0)
    return a / (a + b)


def cutoff_normalization(p: RadialProfile, tau: float) -> float:
    """``C_tau`` from ``1 / C_tau^2 = int Q^2 phi^2(x / tau) / a*`` by radial quadrature.

    Past the plateau only the annulus ``tau < r < 2 tau`` contributes and it
    is integrated adaptively; ``C_tau - 1`` is computed without cancellation.
    """
    lost_inside, _ = integrate.quad(
        lambda r: p(np.array([r]))[0] ** 2 * (1.0 - cutoff(np.array([r / tau]))[0] ** 2) * r,
        tau, 2 * tau, epsabs=0, epsrel=1e-12, limit=200,
    )
    lost_outside, _ = integrate.quad(
        lambda r: p(np.array([r]))[0] ** 2 * r, 2 * tau, np.inf, epsabs=0, epsrel=1e-12, limit=200
    )
    deficit = 2 * np.pi * (lost_inside + lost_outside) / p.a_star
    return float(1.0 / math.sqrt(1.0 - deficit))


def make_trial_cutoff_state(
    p: RadialProfile,
    g: Grid2D,
    a: float,
    tau: float,
    x_tau=(0.0, 0.0),
    omega: float = 0.0,
    *,
    return_constant: bool = False,
):
    """Cut-off, rescaled, phase-twisted copy of ``Q`` with mass ``a``.

    ``C phi(x - x_tau) (tau sqrt(a) / ||Q||) Q(tau (x - x_tau)) exp(i omega S)``
    with ``S(x) = x . x_tau_perp / 2``; ``C`` fixes the grid mass to ``a``.
    """
    if not tau > 0 or not a > 0:
        raise ValueError("tau and a must be positive")
    x_tau = np.asarray(x_tau, dtype=float)
    L = g.half_width
    if np.any(np.abs(x_tau) + 2.0 > L - g.spacing):
        raise ValueError(
            f"cutoff support around {tuple(x_tau)} (radius 2) leaves the box [-{L}, {L})^2"
        )
    x1, x2 = g.mesh
    rr = np.hypot(x1 - x_tau[0], x2 - x_tau[1])
    prof = sample_scaled(p, g, tau, x_tau)
    # sample_scaled already carries the factor tau
    base = cutoff(rr) * math.sqrt(a / p.a_star) * prof
    phase = 0.5 * omega * (x1 * (-x_tau[1]) + x2 * x_tau[0])
    vals = base * np.exp(1j * phase)
    m = g.integrate(np.abs(vals) ** 2)
    c_tau = math.sqrt(a / m)
    u = ComplexField2D(g, c_tau * vals)
    return (u, c_tau) if return_constant else u


def make_scaled_soliton(p: RadialProfile, g: Grid2D, a: float, tau: float) -> ComplexField2D:
    """``u_tau(x) = (tau sqrt(a) / ||Q||) Q(tau x)``, real and centred."""
    if not tau > 0 or not a > 0:
        raise ValueError("tau and a must be positive")
    return ComplexField2D(g, math.sqrt(a / p.a_star) * sample_scaled(p, g, tau))


def soliton_scale(a: float, a_star: float) -> float:
    """Optimal trial scale ``tau = [a a* / (4 (a* - a))]^(1/2)``."""
    if not 0 < a < a_star:
        raise ValueError("need 0 < a < a*")
    return math.sqrt(a * a_star / (4.0 * (a_star - a)))
