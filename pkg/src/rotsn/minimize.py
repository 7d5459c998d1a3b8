"""Constrained minimisation of the energy on the mass sphere ``||u||^2 = a``.

The scheme is a projected gradient flow: a step along the tangential descent
direction followed by renormalisation to mass ``a``. Two choices go beyond a
plain explicit step:

* the gradient is preconditioned by ``(sigma - Lap)^-1`` with ``sigma`` the
  current kinetic energy per unit mass, which keeps the admissible step
  independent of the grid spacing;
* optionally the direction is a Polak-Ribiere conjugate of the previous one
  (restarted whenever it is not a descent direction).

Every accepted step lowers the energy; a rejected step halves ``dt``. Step
acceptance uses the energy change computed from the difference of the two
states, corrected to fixed mass with the current multiplier (see
``energy_change``), so the test stays meaningful after the total energy has
settled to rounding level. The reported energy history is the
starting energy plus the accumulated accepted changes.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .energy import FULL, Couplings, _Terms, energy_change, multiplier_from_identity
from .field import ComplexField2D, PotentialSpec, blowup_scale, make_scaled_soliton, soliton_scale
from .grid import Grid2D
from .groundstate import RadialProfile
from .logconv import LogKernelPlan

INITIALIZERS = ("gaussian", "scaled_soliton", "file", "random_phase")


@dataclass(frozen=True)
class MinimizeConfig:
    """Solver settings.

    ``init`` selects the starting state: ``gaussian`` (width ``init_width``),
    ``scaled_soliton`` (scale ``init_tau``, default the optimal trial scale),
    ``file`` (PSN1 file ``init_file``) or ``random_phase`` (a Gaussian of
    width ``init_width`` times ``exp(i * amplitude * smooth noise)``).
    """

    dt: float = 0.5
    dt_min: float = 1e-8
    dt_max: float = 4.0
    residual_tol: float = 1e-6
    max_iters: int = 20000
    init: str = "gaussian"
    init_width: float = 1.0
    init_tau: float | None = None
    init_file: str | None = None
    perturbation: float = 0.5
    backtrack: float = 0.5
    growth: float = 1.1
    stagnation_window: int = 500
    conjugate: bool = True
    preconditioner: str = "combined"
    history_stride: int = 10
    collapse_energy: float = -1e6
    seed: int = 0
    couplings: Couplings = FULL

    def __post_init__(self):
        if not 0 < self.dt_min <= self.dt <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt <= dt_max")
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be positive")
        if self.init not in INITIALIZERS:
            raise ValueError(f"unknown initializer {self.init!r}; expected one of {INITIALIZERS}")
        if not 0 < self.backtrack < 1 or self.growth < 1:
            raise ValueError("need 0 < backtrack < 1 and growth >= 1")

    def with_(self, **kw) -> "MinimizeConfig":
        return replace(self, **kw)


@dataclass
class MinimizeReport:
    a: float
    omega: float
    e_a: float
    mu_a: float
    iters: int
    residual: float
    epsilon_a: float
    x_a: tuple
    boundary_mass_fraction: float
    status: str
    energy_history: list = field(default_factory=list)
    runtime: float = 0.0

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def as_dict(self) -> dict:
        d = asdict(self)
        d["x_a"] = list(self.x_a)
        d["converged"] = self.converged
        return d


# ---------------------------------------------------------------------------
# grids


def predicted_blowup_scale(a: float, a_star: float) -> float:
    """``(2 / a*) ((a* - a) / a*)^(1/2)``, the leading-order blow-up length."""
    return 2.0 / a_star * math.sqrt(max(a_star - a, 0.0) / a_star)


def comoving_grid(a: float, a_star: float, n: int = 256, decay_lengths: float = 30.0, max_half_width: float = 16.0) -> Grid2D:
    """Grid whose half-width tracks the minimiser's decay length near ``a*``.

    Close to ``a*`` the minimiser looks like ``Q(|x| / l) / l`` with
    ``l = sqrt(a*) eps_a``. The box spans ``decay_lengths`` such lengths, so
    the number of points per decay length is fixed and the profile stays
    resolved however small ``eps_a`` gets. The half-width is capped at
    ``max_half_width``.
    """
    ell = math.sqrt(a_star) * predicted_blowup_scale(a, a_star)
    half = max_half_width if ell == 0 else min(max_half_width, decay_lengths * ell)
    return Grid2D(n, half)


# ---------------------------------------------------------------------------
# initial states


def _normalize(g: Grid2D, vals, a: float):
    m = g.integrate(np.abs(vals) ** 2)
    if not m > 0:
        raise ValueError("initial state has zero mass")
    return vals * math.sqrt(a / m)


def smooth_noise(g: Grid2D, rng: np.random.Generator, corr: float = 1.0) -> np.ndarray:
    """Real Gaussian random field with correlation length ``corr``, unit max."""
    white = rng.standard_normal(g.shape)
    k2 = g.freq[:, None] ** 2 + g.freq[None, :] ** 2
    f = np.fft.ifft2(np.fft.fft2(white) * np.exp(-0.5 * corr**2 * k2)).real
    return f / np.abs(f).max()


def init_state(cfg: MinimizeConfig, p: RadialProfile | None, g: Grid2D, a: float) -> ComplexField2D:
    """Mass-``a`` starting field named by ``cfg.init``."""
    if not a > 0:
        raise ValueError("mass a must be positive")
    if cfg.init in ("gaussian", "random_phase"):
        vals = np.exp(-g.radius_sq / (2.0 * cfg.init_width**2)).astype(complex)
        if cfg.init == "random_phase":
            rng = np.random.default_rng(cfg.seed)
            vals = vals * np.exp(1j * cfg.perturbation * math.pi * smooth_noise(g, rng, cfg.init_width))
        return ComplexField2D(g, _normalize(g, vals, a))
    if cfg.init == "scaled_soliton":
        if p is None:
            raise ValueError("scaled_soliton initializer needs a radial profile")
        tau = cfg.init_tau if cfg.init_tau is not None else soliton_scale(a, p.a_star)
        u = make_scaled_soliton(p, g, a, tau)
        return ComplexField2D(g, _normalize(g, u.values, a))
    if cfg.init == "file":
        from .io import load_field

        if cfg.init_file is None:
            raise ValueError("file initializer needs init_file")
        u, _ = load_field(cfg.init_file)
        if u.grid != g:
            raise ValueError(
                f"field file grid (n={u.grid.n}, L={u.grid.half_width}) does not match "
                f"the solver grid (n={g.n}, L={g.half_width})"
            )
        return ComplexField2D(g, _normalize(g, u.values, a))
    raise ValueError(f"unknown initializer {cfg.init!r}")


def rescale_to_grid(u: ComplexField2D, g: Grid2D, a: float) -> ComplexField2D:
    """Carry samples to a grid with the same ``n`` and a different half-width.

    Sample ``i`` keeps its index, so the state is dilated by
    ``g.half_width / u.grid.half_width``; it is then renormalised to mass ``a``.
    """
    if u.grid.n != g.n:
        raise ValueError("rescaling needs equal sample counts")
    return ComplexField2D(g, _normalize(g, u.values, a))


# ---------------------------------------------------------------------------
# diagnostics


def refined_argmax(g: Grid2D, values, rel_tol: float = 1e-12) -> tuple[float, float]:
    """Location of the maximum of ``|u|`` to sub-cell accuracy.

    The first sample in row-major order within ``rel_tol`` of the maximum is
    refined by a least-squares quadratic fit over its 3 x 3 neighbourhood;
    the refined point is kept within one cell of that sample.
    """
    mod = np.abs(np.asarray(values))
    peak = mod.max()
    idx = int(np.flatnonzero(mod >= peak * (1.0 - rel_tol))[0])
    i, j = divmod(idx, g.n)
    h = g.spacing
    x0, y0 = g.x[i], g.x[j]
    if not (0 < i < g.n - 1 and 0 < j < g.n - 1):
        return float(x0), float(y0)
    di, dj = np.meshgrid([-1, 0, 1], [-1, 0, 1], indexing="ij")
    di, dj = di.ravel(), dj.ravel()
    A = np.column_stack([np.ones(9), di, dj, di**2, di * dj, dj**2])
    c = np.linalg.lstsq(A, mod[i - 1 : i + 2, j - 1 : j + 2].ravel(), rcond=None)[0]
    hess = np.array([[2 * c[3], c[4]], [c[4], 2 * c[5]]])
    try:
        shift = np.linalg.solve(hess, -c[1:3])
    except np.linalg.LinAlgError:
        shift = np.zeros(2)
    if np.linalg.det(hess) <= 0 or hess[0, 0] >= 0 or not np.all(np.isfinite(shift)):
        shift = np.zeros(2)
    shift = np.clip(shift, -1.0, 1.0)
    return float(x0 + shift[0] * h), float(y0 + shift[1] * h)


def align_phase(u: ComplexField2D) -> ComplexField2D:
    """Fix the global phase so that ``int |u| u`` is real and positive."""
    z = complex(np.sum(np.abs(u.values) * u.values))
    if z == 0:
        return u
    return u.with_values(u.values * (abs(z) / z))


# ---------------------------------------------------------------------------
# solver


def _residual(terms: _Terms, a: float, e_val: float, u: ComplexField2D, plan) -> tuple[float, float, np.ndarray]:
    g = terms.grid
    mu = multiplier_from_identity(e_val, u, plan, terms.c)
    hu = terms.h_u()
    r = hu - mu * terms.u
    return mu, math.sqrt(g.integrate(np.abs(r) ** 2) / a), r


def minimize(
    cfg: MinimizeConfig,
    pot: PotentialSpec,
    a: float,
    plan: LogKernelPlan,
    *,
    profile: RadialProfile | None = None,
    u0: ComplexField2D | None = None,
    a_star: float | None = None,
) -> tuple[ComplexField2D, MinimizeReport]:
    """Minimise ``E_a`` over ``||u||^2 = a`` on the plan grid.

    Parameters
    ----------
    u0 : ComplexField2D, optional
        Starting state; overrides ``cfg.init`` (it is renormalised to ``a``).
    profile : RadialProfile, optional
        Needed by the ``scaled_soliton`` initializer.

    Returns the lowest-energy field reached and a report whose ``status`` is
    ``converged``, ``max_iters``, ``stagnated``, ``stalled`` or ``collapse``.
    """
    t_start = time.perf_counter()
    g = plan.grid
    if a_star is None and profile is not None:
        a_star = profile.a_star
    if a_star is not None and a >= a_star:
        warnings.warn(f"a = {a} is not below a* = {a_star}; expecting collapse", RuntimeWarning, stacklevel=2)
    if pot.supercritical:
        warnings.warn(f"omega = {pot.omega} exceeds omega* = {pot.omega_star}", RuntimeWarning, stacklevel=2)

    if u0 is None:
        u = init_state(cfg, profile, g, a)
    else:
        if u0.grid != g:
            raise ValueError("initial field grid does not match the plan grid")
        u = ComplexField2D(g, _normalize(g, u0.values, a))

    couplings = cfg.couplings

    def evaluate(field_):
        t = _Terms(field_, pot, plan, couplings)
        return t, t.total()

    v_grid = pot.on_grid(g)

    def precondition(r_):
        # (s + V)^-1/2 s (s - Lap)^-1 (s + V)^-1/2 with s the kinetic energy per mass
        s = max(g.gradient_energy(terms.u) / a, 1.0)
        if cfg.preconditioner == "kinetic":
            return np.fft.ifft2(np.fft.fft2(r_) / (s + g.k_sq))
        w = np.sqrt(s / (s + v_grid))
        return w * np.fft.ifft2(np.fft.fft2(w * r_) / (s + g.k_sq))

    terms, e_val = evaluate(u)
    mu, res, r = _residual(terms, a, e_val, u, plan)
    history = [e_val]
    dt = cfg.dt
    best_res = res
    since_best = 0
    d_prev = z_prev = r_prev = None
    status = "max_iters"
    it = 0
    for it in range(1, cfg.max_iters + 1):
        if res <= cfg.residual_tol:
            status = "converged"
            it -= 1
            break
        vals = terms.u
        z = precondition(r)
        z -= (g.integrate(np.real(np.conj(vals) * z)) / a) * vals
        d = -z
        if cfg.conjugate and d_prev is not None:
            den = g.integrate(np.real(np.conj(z_prev) * r_prev))
            beta = max(0.0, g.integrate(np.real(np.conj(z - z_prev) * r)) / den) if den > 0 else 0.0
            d_t = d_prev - (g.integrate(np.real(np.conj(vals) * d_prev)) / a) * vals
            cand = d + beta * d_t
            if g.integrate(np.real(np.conj(cand) * r)) < 0:
                d = cand
        accepted = False
        while dt >= cfg.dt_min:
            trial_vals = vals + dt * d
            trial = ComplexField2D(g, _normalize(g, trial_vals, a))
            t_trial = _Terms(trial, pot, plan, couplings)
            change = energy_change(terms, t_trial, mu)
            if change <= 0:
                e_trial = e_val + change
                accepted = True
                break
            dt *= cfg.backtrack
            d_prev = None
        if not accepted:
            status = "stalled"
            break
        d_prev, z_prev, r_prev = d, z, r
        u, terms, e_val = trial, t_trial, e_trial
        dt = min(dt * cfg.growth, cfg.dt_max)
        if it % cfg.history_stride == 0:
            history.append(e_val)
        if e_val < cfg.collapse_energy:
            status = "collapse"
            break
        mu, res, r = _residual(terms, a, e_val, u, plan)
        if res < 0.9 * best_res:
            best_res, since_best = res, 0
        else:
            since_best += 1
            if since_best >= cfg.stagnation_window:
                status = "stagnated"
                break
    if history[-1] != e_val:
        history.append(e_val)

    if status == "collapse":
        eps = float("nan")
    else:
        try:
            eps = blowup_scale(u)
        except ValueError:
            eps = float("nan")
    report = MinimizeReport(
        a=float(a),
        omega=float(pot.omega),
        e_a=float(e_val),
        mu_a=float(mu),
        iters=int(it),
        residual=float(res),
        epsilon_a=float(eps),
        x_a=refined_argmax(g, u.values),
        boundary_mass_fraction=float(u.boundary_fraction),
        status=status,
        energy_history=[float(x) for x in history],
        runtime=time.perf_counter() - t_start,
    )
    return u, report
