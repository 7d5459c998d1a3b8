"""Radial ground state of ``-Lap Q + Q - Q^3 = 0`` in the plane.

``Q`` is found by shooting on ``Q(0)`` with bisection. Double-precision
shooting stays trustworthy only out to r ~ 18, so the table is continued past
a matching radius by the decaying solution ``c K0(r)`` of the linearised
equation, which is what ``Q`` reduces to once ``Q^3`` is negligible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicHermiteSpline

from .grid import Grid2D

PROFILE_STEP = 1e-3
_R0 = 1e-3  # first radius; the series start covers [0, _R0]
_MATCH_LEVEL = 1e-4  # switch to the K0 tail once Q drops below this


class ShootingError(RuntimeError):
    pass


class UnderResolvedError(ValueError):
    """Grid spacing too coarse for the requested scaled profile."""


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Tabulated ground state on a uniform radial mesh.

    Attributes
    ----------
    r, q, dq : ndarray
        Radii from 0 to ``r_max``, ``Q(r)`` and ``Q'(r)``.
    q0 : float
        Shooting value ``Q(0)``.
    tail_coeff : float
        ``c`` in ``Q(r) = c K0(r)`` beyond ``r_match``.
    """

    r: np.ndarray
    q: np.ndarray
    dq: np.ndarray
    q0: float
    tail_coeff: float
    r_match: float
    a_star: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "a_star", critical_mass(self))

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    @cached_property
    def _spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.r, self.q, self.dq, extrapolate=False)

    def __call__(self, r) -> np.ndarray:
        """Evaluate ``Q`` at arbitrary radii (tail formula past ``r_max``)."""
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inside = r <= self.r_max
        out[inside] = self._spline(r[inside])
        out[~inside] = self.tail_coeff * special.k0(r[~inside])
        return out

    def derivative(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inside = r <= self.r_max
        out[inside] = self._spline(r[inside], 1)
        out[~inside] = -self.tail_coeff * special.k1(r[~inside])
        return out

    def identity_residuals(self) -> dict:
        """Relative defects of ``|grad Q|^2 = Q^2 = Q^4 / 2`` (integrated)."""
        mass = self.a_star
        kinetic = _radial_integral(self.r, self.dq**2, self._tail(lambda r: special.k1(r) ** 2))
        quartic = _radial_integral(self.r, self.q**4, None)
        return {
            "kinetic": abs(kinetic - mass) / mass,
            "quartic": abs(0.5 * quartic - mass) / mass,
        }

    def ode_residual(self) -> float:
        """Max-norm residual of ``Q'' + Q'/r - Q + Q^3`` on the mesh interior.

        ``Q''`` is taken from a sixth-order central difference of ``Q'``.
        """
        h = self.r[1] - self.r[0]
        dq = self.dq
        c = np.array([-1, 9, -45, 0, 45, -9, 1]) / (60.0 * h)
        d2 = np.convolve(dq, c[::-1], mode="valid")
        r = self.r[3:-3]
        res = d2 + dq[3:-3] / r - self.q[3:-3] + self.q[3:-3] ** 3
        return float(np.max(np.abs(res)))

    def _tail(self, fn):
        c2 = self.tail_coeff**2

        def tail(r_start):
            val, _ = integrate.quad(lambda s: c2 * fn(s) * s, r_start, np.inf, epsabs=0, epsrel=1e-10)
            return val

        return tail


def _radial_integral(r, f, tail) -> float:
    """``2 pi int f(r) r dr`` by Simpson on the mesh plus an optional tail."""
    val = integrate.simpson(f * r, x=r)
    if tail is not None:
        val += tail(r[-1])
    return float(2.0 * np.pi * val)


def _series_start(q0: float, r0: float):
    c2 = (q0 - q0**3) / 4.0
    c4 = (1.0 - 3.0 * q0**2) * c2 / 16.0
    return [q0 + c2 * r0**2 + c4 * r0**4, 2.0 * c2 * r0 + 4.0 * c4 * r0**3]


def _rhs(r, y):
    q, dq = y
    return [dq, -dq / r + q - q**3]


def _crosses(r, y):
    return y[0]


_crosses.terminal = True
_crosses.direction = -1


def _turns(r, y):
    return y[1]


_turns.terminal = True
_turns.direction = 1


def _shoot(q0: float, r_end: float, max_step: float, dense: bool = False):
    """Integrate from the origin. Returns (+1 overshoot | -1 undershoot | 0, radius, solution)."""
    sol = integrate.solve_ivp(
        _rhs,
        (_R0, r_end),
        _series_start(q0, _R0),
        method="DOP853",
        rtol=1e-13,
        atol=1e-22,
        max_step=max_step,
        events=[_crosses, _turns],
        dense_output=dense,
    )
    if sol.t_events[0].size:
        return 1, float(sol.t_events[0][0]), sol
    if sol.t_events[1].size:
        return -1, float(sol.t_events[1][0]), sol
    return 0, r_end, sol


def solve_radial_ground_state(
    tol: float = 1e-10,
    r_max: float = 24.0,
    *,
    bracket=(2.0, 3.0),
    max_step: float = 0.1,
    max_iter: int = 200,
    step: float = PROFILE_STEP,
) -> RadialProfile:
    """Shoot for the positive radial ground state and tabulate it.

    Parameters
    ----------
    tol : float
        Bound on the max-norm ODE residual of the tabulated profile; also the
        stopping width of the bisection bracket on ``Q(0)`` (bisection always
        continues to the resolution limit of the integrator when that is
        reached first).
    r_max : float
        Last tabulated radius, at least 20.
    max_step : float
        Largest integrator step.
    """
    if not 0 < tol <= 1e-8:
        raise ValueError("tol must lie in (0, 1e-8]")
    if r_max < 20:
        raise ValueError("r_max must be at least 20")
    r_end = 40.0
    lo, hi = map(float, bracket)
    s_lo, _, _ = _shoot(lo, r_end, max_step)
    s_hi, _, _ = _shoot(hi, r_end, max_step)
    if not (s_lo < 0 and s_hi > 0):
        raise ShootingError(f"bracket {bracket} does not straddle the ground state")

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        s, _, _ = _shoot(mid, r_end, max_step)
        if s == 0:
            raise ShootingError("shot neither crossed nor turned; increase r_end")
        if s > 0:
            hi = mid
        else:
            lo = mid
    else:
        if hi - lo > tol:
            raise ShootingError("bisection did not converge within max_iter")

    # The bracketing shots differ from Q by opposite multiples of the growing
    # mode ~ I0(r). Writing each as c K0 + d I0 at the matching radius and
    # taking the combination with d = 0 cancels that error to second order.
    fine = min(max_step, 0.005)
    _, r_turn, sol_lo = _shoot(lo, r_end, fine, dense=True)
    _, r_cross, sol_hi = _shoot(hi, r_end, fine, dense=True)
    r_valid = min(r_turn, r_cross) - 2.0

    mesh = np.arange(int(round(r_max / step)) + 1) * step
    probe = mesh[(mesh >= _R0) & (mesh <= r_valid)]
    below = np.nonzero(sol_lo.sol(probe)[0] < _MATCH_LEVEL)[0]
    if below.size == 0:
        raise ShootingError("profile did not decay to the matching level before shots diverged")
    r_match = float(probe[below[0]])

    def split(sol):
        q_m, dq_m = sol.sol(r_match)
        basis = np.array([[special.k0(r_match), special.i0(r_match)],
                          [-special.k1(r_match), special.i1(r_match)]])
        return np.linalg.solve(basis, [q_m, dq_m])

    c_lo, d_lo = split(sol_lo)
    c_hi, d_hi = split(sol_hi)
    if d_hi == d_lo:
        w_lo, w_hi = 0.5, 0.5
    else:
        w_lo, w_hi = d_hi / (d_hi - d_lo), -d_lo / (d_hi - d_lo)
    c = w_lo * c_lo + w_hi * c_hi
    q0 = w_lo * lo + w_hi * hi

    q = np.empty_like(mesh)
    dq = np.empty_like(mesh)
    head = mesh <= r_match
    body = head & (mesh >= _R0)
    y = w_lo * sol_lo.sol(mesh[body]) + w_hi * sol_hi.sol(mesh[body])
    q[body], dq[body] = y[0], y[1]
    near = mesh < _R0
    start = np.array([_series_start(q0, rr) for rr in mesh[near]]).reshape(-1, 2)
    q[near], dq[near] = start[:, 0], start[:, 1]
    dq[0] = 0.0
    tail = ~head
    q[tail] = c * special.k0(mesh[tail])
    dq[tail] = -c * special.k1(mesh[tail])

    profile = RadialProfile(r=mesh, q=q, dq=dq, q0=q0, tail_coeff=float(c), r_match=r_match)
    resid = profile.ode_residual()
    if resid > tol:
        raise ShootingError(
            f"tabulated profile has ODE residual {resid:.2e} > tol={tol:.1e}; "
            "reduce max_step or loosen tol"
        )
    return profile


def critical_mass(p: RadialProfile) -> float:
    """``a* = ||Q||_2^2`` from the table plus the analytic K0 tail."""
    return radial_moment(p, 0)


def radial_moment(p: RadialProfile, k: int) -> float:
    """``2 pi int Q(r)^2 r^(k+1) dr`` for ``k`` in {0, 2, 4}."""
    if k not in (0, 2, 4):
        raise ValueError(f"unsupported moment order {k}; expected 0, 2 or 4")
    c2 = p.tail_coeff**2

    def tail(r0):
        val, _ = integrate.quad(lambda s: c2 * special.k0(s) ** 2 * s ** (k + 1), r0, np.inf, epsabs=0, epsrel=1e-10)
        return val

    return _radial_integral(p.r, p.q**2 * p.r**k, tail)


def radial_potential_moment(p: RadialProfile, v_radial, scale: float = 1.0) -> float:
    """``int V(|x|/scale) Q(x)^2 dx`` for a radial potential ``v_radial(r)``."""
    return _radial_integral(p.r, v_radial(p.r / scale) * p.q**2, None)


def radial_log_energy(p: RadialProfile) -> float:
    """``iint ln|x-y| Q^2(x) Q^2(y) dx dy`` by radial quadrature.

    The circular mean of ``ln|x-y|`` over ``|y| = s`` is ``ln max(|x|, s)``,
    which reduces the double integral to
    ``8 pi^2 int rho(r) r ln(r) M(r) dr`` with ``M(r) = int_0^r rho(s) s ds``.
    """
    return radial_log_energy_density(p.r, p.q**2)


def radial_log_energy_density(r, rho) -> float:
    """Same reduction for any tabulated radial density ``rho(r)``."""
    m = integrate.cumulative_simpson(rho * r, x=r, initial=0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(r > 0, rho * r * np.log(r) * m, 0.0)
    return float(8.0 * np.pi**2 * integrate.simpson(integrand, x=r))


def sample_scaled(p: RadialProfile, grid: Grid2D, m: float = 1.0, center=(0.0, 0.0), max_cell: float = 0.5):
    """Samples of ``m Q(m |x - center|)`` on ``grid``, zero past ``m r_max``.

    Raises ``UnderResolvedError`` when one grid cell spans more than
    ``max_cell`` in the profile's own length unit (``m * h > max_cell``).
    """
    if not m > 0:
        raise ValueError("scale m must be positive")
    center = np.asarray(center, dtype=float)
    if not grid.contains(center):
        raise ValueError(f"center {tuple(center)} lies outside the grid")
    if m * grid.spacing > max_cell:
        raise UnderResolvedError(
            f"m*h = {m * grid.spacing:.3g} exceeds {max_cell}; refine the grid"
        )
    x1, x2 = grid.mesh
    s = m * np.hypot(x1 - center[0], x2 - center[1])
    out = np.zeros_like(s)
    inside = s <= p.r_max
    out[inside] = m * p(s[inside])
    return out


def gn_quotient(grid: Grid2D, u) -> float:
    """``2 ||grad u||^2 ||u||^2 / ||u||_4^4`` for a real field (``>= a*``)."""
    u = np.asarray(u)
    kin = grid.gradient_energy(u)
    mass = grid.integrate(np.abs(u) ** 2)
    quart = grid.integrate(np.abs(u) ** 4)
    return 2.0 * kin * mass / quart


def minimize_gn_quotient(grid: Grid2D, u0=None, tol: float = 1e-12, max_iter: int = 2000) -> tuple[float, np.ndarray]:
    """Minimise the Gagliardo-Nirenberg quotient over real grid fields.

    Preconditioned steepest descent on ``log J`` with a backtracking line
    search. Mass and amplitude are free; the quotient is invariant under
    them, so the field is rescaled to unit peak after each step.
    """
    if u0 is None:
        u0 = np.exp(-grid.radius_sq / 2.0)
    u = np.array(u0, dtype=float)
    precond = 1.0 / (1.0 + grid.k_sq)

    def log_j(v):
        return np.log(gn_quotient(grid, v))

    def grad(v):
        kin = grid.gradient_energy(v)
        mass = grid.integrate(v**2)
        quart = grid.integrate(v**4)
        return 2 * (-grid.laplacian(v)) / kin + 2 * v / mass - 4 * v**3 / quart

    f = log_j(u)
    step = 1.0
    for _ in range(max_iter):
        g = grad(u)
        d = -np.fft.ifft2(precond * np.fft.fft2(g)).real
        slope = grid.integrate(g * d)
        if slope >= 0:
            break
        while step >= 1e-12:
            trial = u + step * d
            trial /= np.abs(trial).max()
            ft = log_j(trial)
            if ft <= f + 1e-4 * step * slope:
                break
            step *= 0.5
        else:
            break
        done = f - ft <= tol * abs(f) + 1e-15
        u, f = trial, ft
        if done:
            break
        step = min(step * 2.0, 8.0)
    return float(np.exp(f)), u
