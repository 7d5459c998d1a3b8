"""Energy functional, Euler-Lagrange operator and Lagrange multiplier."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .field import ComplexField2D, PotentialSpec, modulus_gradient_energy
from .logconv import LogKernelPlan, log_potential


@dataclass(frozen=True)
class Couplings:
    """Weights on the logarithmic and quartic terms; (0, 0) gives the linear problem."""

    log: float = 1.0
    quartic: float = 1.0


FULL = Couplings()
LINEAR = Couplings(0.0, 0.0)


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    potential: float
    log: float
    quartic: float
    rotation: float
    total: float
    magnetic_kinetic: float
    v_omega_potential: float
    modulus_kinetic: float

    def as_dict(self) -> dict:
        return asdict(self)


def _check_grids(u: ComplexField2D, plan: LogKernelPlan):
    if u.grid != plan.grid:
        raise ValueError("field grid does not match the kernel plan grid")


class _Terms:
    """Per-state intermediate arrays shared by the energy and the EL operator."""

    def __init__(self, u: ComplexField2D, pot: PotentialSpec, plan: LogKernelPlan, couplings: Couplings):
        _check_grids(u, plan)
        g = u.grid
        self.grid = g
        self.u = u.values
        self.rho = np.abs(self.u) ** 2
        self.v = pot.on_grid(g)
        self.omega = pot.omega
        self.c = couplings
        spec = np.fft.fft2(self.u)
        d = g._deriv_symbol
        self.g1 = np.fft.ifft2(spec * d[:, None])
        self.g2 = np.fft.ifft2(spec * d[None, :])
        self.lap = np.fft.ifft2(-g.k_sq * spec)
        x1, x2 = g.mesh
        self.x_perp_grad = -x2 * self.g1 + x1 * self.g2
        self.phi = log_potential(plan, self.rho) if couplings.log != 0 else np.zeros_like(self.rho)

    def energies(self):
        g = self.grid
        kinetic = g.integrate(np.abs(self.g1) ** 2 + np.abs(self.g2) ** 2)
        potential = g.integrate(self.v * self.rho)
        b0 = g.integrate(self.rho * self.phi)
        quart = g.integrate(self.rho**2)
        rot = g.integrate(np.imag(np.conj(self.u) * self.x_perp_grad))
        return kinetic, potential, b0, quart, rot

    def total(self) -> float:
        kinetic, potential, b0, quart, rot = self.energies()
        return kinetic + potential + 0.5 * self.c.log * b0 - 0.5 * self.c.quartic * quart - self.omega * rot

    def h_u(self) -> np.ndarray:
        """``-Lap u + V u + c_log Phi u - c_q |u|^2 u + i omega x_perp . grad u``."""
        return (
            -self.lap
            + self.v * self.u
            + self.c.log * self.phi * self.u
            - self.c.quartic * self.rho * self.u
            + 1j * self.omega * self.x_perp_grad
        )


def energy_change(before: _Terms, after: _Terms, mu: float = 0.0) -> float:
    """``E(after) - E(before) - mu (M(after) - M(before))`` from the state difference.

    With ``mu`` the multiplier this is the energy change at fixed mass to
    first order: renormalising a state to mass ``a`` in floating point leaves
    a relative mass error of order 1e-16, and ``mu`` times that error would
    otherwise swamp the changes of a nearly converged iteration.

    Each quadratic form is expanded as ``q(u1) - q(u0) = Re<d, A(u0 + u1)>``
    with ``d = u1 - u0``; the derivatives of ``d`` come from its own
    transform. The rounding error then scales with ``|d|`` instead of with
    the size of the energy, which keeps small steps measurable once the
    energy has converged to many digits.
    """
    g = before.grid
    u0, u1 = before.u, after.u
    d = u1 - u0
    spec = np.fft.fft2(d)
    sym = g._deriv_symbol
    d1 = np.fft.ifft2(spec * sym[:, None])
    d2 = np.fft.ifft2(spec * sym[None, :])
    kinetic = g.integrate(np.real(np.conj(d1) * (before.g1 + after.g1) + np.conj(d2) * (before.g2 + after.g2)))
    drho = np.real(np.conj(d) * (u0 + u1))
    potential = g.integrate(before.v * drho)
    log_term = 0.5 * g.integrate(drho * (before.phi + after.phi))
    quart = g.integrate(drho * (before.rho + after.rho))
    x1, x2 = g.mesh
    ad = -x2 * d1 + x1 * d2
    # <u, A u> with A = -i x_perp . grad is Hermitian on the grid
    rot = 0.5 * g.integrate(np.imag(np.conj(d) * (before.x_perp_grad + after.x_perp_grad))
                            + np.imag(np.conj(u0 + u1) * ad))
    c = before.c
    dmass = g.integrate(drho)
    return kinetic + potential + c.log * log_term - 0.5 * c.quartic * quart - before.omega * rot - mu * dmass


def energy(u: ComplexField2D, pot: PotentialSpec, plan: LogKernelPlan, couplings: Couplings = FULL) -> float:
    return _Terms(u, pot, plan, couplings).total()


def energy_breakdown(
    u: ComplexField2D, pot: PotentialSpec, plan: LogKernelPlan, couplings: Couplings = FULL
) -> EnergyBreakdown:
    """All terms of ``E_a(u)`` plus the magnetic and effective-potential forms.

    ``rotation`` is ``-omega int x_perp . (iu, grad u)``; ``magnetic_kinetic``
    is ``int |(grad - iA) u|^2`` with ``A = (omega / 2) x_perp`` evaluated
    directly from its definition.
    """
    t = _Terms(u, pot, plan, couplings)
    kinetic, potential, b0, quart, rot = t.energies()
    log_term = 0.5 * couplings.log * b0
    quartic = -0.5 * couplings.quartic * quart
    rotation = -pot.omega * rot
    g = u.grid
    x1, x2 = g.mesh
    a1 = -0.5 * pot.omega * x2
    a2 = 0.5 * pot.omega * x1
    mag = g.integrate(np.abs(t.g1 - 1j * a1 * t.u) ** 2 + np.abs(t.g2 - 1j * a2 * t.u) ** 2)
    v_om = g.integrate(pot.v_omega(x1, x2) * t.rho)
    return EnergyBreakdown(
        kinetic=kinetic,
        potential=potential,
        log=log_term,
        quartic=quartic,
        rotation=rotation,
        total=kinetic + potential + log_term + quartic + rotation,
        magnetic_kinetic=mag,
        v_omega_potential=v_om,
        modulus_kinetic=modulus_gradient_energy(u),
    )


def el_operator(u: ComplexField2D, pot: PotentialSpec, plan: LogKernelPlan, couplings: Couplings = FULL) -> np.ndarray:
    """Samples of ``H u``; a constrained critical point satisfies ``H u = mu u``."""
    return _Terms(u, pot, plan, couplings).h_u()


def _norm(grid, v) -> float:
    return float(np.sqrt(grid.integrate(np.abs(v) ** 2)))


def el_residual(
    u: ComplexField2D, mu: float, pot: PotentialSpec, plan: LogKernelPlan, couplings: Couplings = FULL
) -> float:
    """``||H u - mu u||_2 / ||u||_2``."""
    nu = _norm(u.grid, u.values)
    if nu == 0:
        raise ValueError("residual of the zero field is undefined")
    hu = el_operator(u, pot, plan, couplings)
    return _norm(u.grid, hu - mu * u.values) / nu


def rayleigh_multiplier(u: ComplexField2D, pot: PotentialSpec, plan: LogKernelPlan, couplings: Couplings = FULL) -> float:
    """``Re <u, H u> / ||u||^2``."""
    a = u.grid.integrate(np.abs(u.values) ** 2)
    if a == 0:
        raise ValueError("multiplier of the zero field is undefined")
    hu = el_operator(u, pot, plan, couplings)
    return u.grid.integrate(np.real(np.conj(u.values) * hu)) / a


def multiplier_from_identity(e_val: float, u: ComplexField2D, plan: LogKernelPlan, couplings: Couplings = FULL) -> float:
    """``mu = [e + B0(|u|^2, |u|^2) / 2 - int |u|^4 / 2] / a`` for ``a = ||u||^2``.

    This is ``<u, H u> / a`` rewritten through the energy.
    """
    _check_grids(u, plan)
    g = u.grid
    rho = np.abs(u.values) ** 2
    a = g.integrate(rho)
    if not a > 0:
        raise ValueError("multiplier identity needs a field of positive mass")
    b0 = g.integrate(rho * log_potential(plan, rho)) if couplings.log != 0 else 0.0
    quart = g.integrate(rho**2)
    return (e_val + 0.5 * couplings.log * b0 - 0.5 * couplings.quartic * quart) / a
