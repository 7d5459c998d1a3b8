"""Behaviour of minimisers as the mass approaches the critical value.

Blow-up diagnostics of a single minimiser, mass sweeps with continuation,
fits of the energy and length-scale laws, the closed-form trial upper bound
and the divergence probes on the cut-off trial family.
"""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .energy import energy, multiplier_from_identity
from .field import (
    ComplexField2D,
    PotentialSpec,
    blowup_scale,
    make_scaled_soliton,
    make_trial_cutoff_state,
)
from .grid import Grid2D
from .groundstate import RadialProfile, radial_log_energy, radial_moment, radial_potential_moment
from .logconv import LogKernelPlan, make_plan
from .minimize import (
    MinimizeConfig,
    comoving_grid,
    minimize,
    predicted_blowup_scale,
    refined_argmax,
    rescale_to_grid,
)


@dataclass
class BlowupReport:
    """Rescaled view of a minimiser around its maximum point.

    Distances compare the aligned profile ``w_a`` with
    ``Q_ref(y) = Q(|y| / sqrt(a*)) / sqrt(a*)`` on the rescaled frame.
    ``extrapolated`` marks runs without rotation, which lie outside the
    rotating setting the concentration law is stated for.
    """

    a: float
    epsilon_a: float
    x_a: tuple
    theta_a: float
    l2_distance: float
    linf_distance: float
    l2_reference: float
    linf_reference: float
    mu_eps2: float
    v_omega_at_xa: float
    decay_ok: bool
    orthogonality: float
    modulus_gradient_w: float
    extrapolated: bool

    @property
    def l2_relative(self) -> float:
        return self.l2_distance / self.l2_reference

    @property
    def linf_relative(self) -> float:
        return self.linf_distance / self.linf_reference


@dataclass
class SweepRecord:
    a: float
    e_a: float
    epsilon_a: float
    mu_a: float
    x_a: tuple
    l2_distance: float
    runtime: float
    converged: bool
    mu_eps2: float = float("nan")
    v_omega_xa: float = float("nan")
    linf_distance: float = float("nan")
    residual: float = float("nan")
    iters: int = 0
    half_width: float = float("nan")
    status: str = ""

    def as_dict(self) -> dict:
        d = asdict(self)
        d["x_a"] = list(self.x_a)
        return d


SWEEP_COLUMNS = [
    "a", "e_a", "epsilon_a", "mu_a", "mu_eps2", "x_a_1", "x_a_2", "l2_distance", "v_omega_xa", "converged",
]


def sweep_rows(records) -> list:
    return [
        [r.a, r.e_a, r.epsilon_a, r.mu_a, r.mu_eps2, r.x_a[0], r.x_a[1], r.l2_distance, r.v_omega_xa, bool(r.converged)]
        for r in records
    ]


def records_from_rows(header, rows) -> list:
    idx = {name: i for i, name in enumerate(header)}
    missing = [c for c in SWEEP_COLUMNS if c not in idx]
    if missing:
        raise ValueError(f"sweep table lacks columns {missing}")
    out = []
    for row in rows:
        def f(name):
            return float(row[idx[name]])

        out.append(
            SweepRecord(
                a=f("a"), e_a=f("e_a"), epsilon_a=f("epsilon_a"), mu_a=f("mu_a"),
                x_a=(f("x_a_1"), f("x_a_2")), l2_distance=f("l2_distance"), runtime=0.0,
                converged=row[idx["converged"]].strip().lower() in ("true", "1"),
                mu_eps2=f("mu_eps2"), v_omega_xa=f("v_omega_xa"),
            )
        )
    return sorted(out, key=lambda r: r.a)


# ---------------------------------------------------------------------------
# band-limited resampling


def _interp_matrix(g: Grid2D, pts) -> np.ndarray:
    """Rows evaluate the trigonometric interpolant of ``g`` samples at ``pts``.

    The Nyquist mode is taken as a cosine, which keeps real data real.
    """
    pts = np.asarray(pts, dtype=float)
    k = g.freq
    phase = np.outer(pts + g.half_width, k)
    m = np.exp(1j * phase)
    nyq = g.n // 2
    m[:, nyq] = np.cos(phase[:, nyq])
    return m / g.n


def resample(u_vals, g: Grid2D, x1_pts, x2_pts) -> np.ndarray:
    """Values of the band-limited interpolant on the tensor grid ``x1_pts x x2_pts``."""
    spec = np.fft.fft2(u_vals)
    return _interp_matrix(g, x1_pts) @ spec @ _interp_matrix(g, x2_pts).T


def reference_profile(p: RadialProfile, frame: Grid2D) -> np.ndarray:
    """``Q(|y| / sqrt(a*)) / sqrt(a*)`` on ``frame``."""
    s = math.sqrt(p.a_star)
    return p(frame.radius / s) / s


# ---------------------------------------------------------------------------
# diagnostics


def blowup_diagnostics(
    u: ComplexField2D,
    a: float,
    p: RadialProfile,
    pot: PotentialSpec,
    *,
    mu: float | None = None,
    plan: LogKernelPlan | None = None,
    kappa: float = 1.0,
    orthogonality_tol: float = 1e-8,
) -> BlowupReport:
    """Blow-up scale, maximum point, aligned rescaled profile and its distances.

    ``w(y) = eps u(eps y + x_a) exp(-i eps omega y . x_a_perp / 2) exp(i theta)``
    is sampled on a frame with the source ``n`` and half-width
    ``kappa L / eps``; ``theta`` minimises ``||w - Q_ref||_2`` in closed form.
    ``mu`` defaults to the multiplier identity evaluated with ``plan``.
    """
    g = u.grid
    eps = blowup_scale(u)
    x_a = refined_argmax(g, u.values)
    half = kappa * g.half_width / eps
    frame = Grid2D(g.n, half)
    pts1 = x_a[0] + eps * frame.x
    pts2 = x_a[1] + eps * frame.x
    # the interpolant is periodic, so a frame that overhangs the last sample by
    # less than one cell still reads the decayed edge of the field
    lo, hi = -g.half_width - g.spacing, g.half_width
    if min(pts1.min(), pts2.min()) < lo or max(pts1.max(), pts2.max()) > hi:
        raise ValueError(
            "rescaled frame leaves the source domain; enlarge L or lower kappa for this a"
        )
    w = eps * resample(u.values, g, pts1, pts2)
    y1, y2 = frame.mesh
    w = w * np.exp(-0.5j * eps * pot.omega * (y1 * (-x_a[1]) + y2 * x_a[0]))
    q_ref = reference_profile(p, frame)
    overlap = frame.integrate(q_ref * w.real) + 1j * frame.integrate(q_ref * w.imag)
    angle = float(np.angle(overlap))
    # an already aligned field has angle 0 up to rounding; report 0, not 2 pi
    theta = 0.0 if abs(angle) < 1e-12 else (-angle) % (2 * np.pi)
    w = w * np.exp(1j * theta)
    ortho = abs(frame.integrate(q_ref * w.imag))
    norm_q = math.sqrt(frame.integrate(q_ref**2))
    norm_w = math.sqrt(frame.integrate(np.abs(w) ** 2))
    if ortho > orthogonality_tol * norm_q * norm_w:
        raise AssertionError(f"aligned profile not orthogonal to Q_ref: {ortho:.3e}")
    diff = w - q_ref
    l2 = math.sqrt(frame.integrate(np.abs(diff) ** 2))
    linf = float(np.abs(diff).max())
    m1, m2 = frame.modulus_gradient(w)
    grad_w = frame.integrate(m1**2 + m2**2)

    if mu is None:
        if plan is None:
            mu = float("nan")
        else:
            mu = multiplier_from_identity(energy(u, pot, plan), u, plan)

    decay_ok = decay_envelope_ok(frame, w, p.a_star)
    return BlowupReport(
        a=float(a),
        epsilon_a=float(eps),
        x_a=tuple(x_a),
        theta_a=float(theta),
        l2_distance=l2,
        linf_distance=linf,
        l2_reference=norm_q,
        linf_reference=float(q_ref.max()),
        mu_eps2=float(mu * eps**2),
        v_omega_at_xa=float(pot.v_omega(np.array(x_a[0]), np.array(x_a[1]))),
        decay_ok=bool(decay_ok),
        orthogonality=float(ortho),
        modulus_gradient_w=float(grad_w),
        extrapolated=pot.omega == 0,
    )


def decay_envelope_ok(frame: Grid2D, w, a_star: float) -> bool:
    """``|w(y)| <= C exp(-|y| / (3 sqrt(a*)))`` on ``R <= |y| <= 2R``, ``R = 5 sqrt(a*)``.

    ``C`` is fitted on the first ring of samples at radius ``R``. A frame
    narrower than ``2R`` is checked up to its half-width.
    """
    s = math.sqrt(a_star)
    R = 5.0 * s
    r = frame.radius
    if R + frame.spacing > frame.half_width:
        raise ValueError(f"frame half-width {frame.half_width:.3g} does not reach R = {R:.3g}")
    mod = np.abs(w)
    ring = (r >= R) & (r < R + frame.spacing)
    c = float(np.max(mod[ring] * np.exp(r[ring] / (3 * s))))
    band = (r >= R) & (r <= min(2 * R, frame.half_width))
    return bool(np.all(mod[band] <= c * np.exp(-r[band] / (3 * s)) * (1 + 1e-12)))


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepSettings:
    n: int = 256
    half_width: float = 16.0
    comoving: bool = True
    decay_lengths: float = 30.0
    singular: str = "lattice"
    continuation: bool = True
    jobs: int = 1
    kappa: float = 1.0


def sweep_grid(a: float, a_star: float, s: SweepSettings) -> Grid2D:
    if s.comoving:
        return comoving_grid(a, a_star, s.n, s.decay_lengths, s.half_width)
    return Grid2D(s.n, s.half_width)


def _dilate(u: ComplexField2D, g: Grid2D, factor: float, a: float) -> ComplexField2D:
    """``u(x / factor)`` resampled on ``g`` and renormalised to mass ``a``."""
    vals = resample(u.values, u.grid, g.x / factor, g.x / factor)
    vals = vals * math.sqrt(a / g.integrate(np.abs(vals) ** 2))
    return ComplexField2D(g, vals)


def _run_point(args):
    a, pot, cfg, p, s, u0 = args
    g = sweep_grid(a, p.a_star, s)
    plan = make_plan(g, s.singular)
    t0 = time.perf_counter()
    u, rep = minimize(cfg, pot, a, plan, profile=p, u0=u0)
    rec = SweepRecord(
        a=float(a), e_a=rep.e_a, epsilon_a=rep.epsilon_a, mu_a=rep.mu_a, x_a=tuple(rep.x_a),
        l2_distance=float("nan"), runtime=0.0, converged=rep.converged, residual=rep.residual,
        iters=rep.iters, half_width=g.half_width, status=rep.status,
    )
    if rep.converged:
        try:
            b = blowup_diagnostics(u, a, p, pot, mu=rep.mu_a, kappa=s.kappa)
            rec.l2_distance = b.l2_distance
            rec.linf_distance = b.linf_distance
            rec.mu_eps2 = b.mu_eps2
            rec.v_omega_xa = b.v_omega_at_xa
        except ValueError as exc:
            warnings.warn(f"blow-up diagnostics failed at a={a}: {exc}", RuntimeWarning, stacklevel=2)
    rec.runtime = time.perf_counter() - t0
    return rec, u


def sweep(
    a_values,
    pot: PotentialSpec,
    cfg: MinimizeConfig,
    p: RadialProfile,
    settings: SweepSettings = SweepSettings(),
    *,
    return_fields: bool = False,
):
    """Minimise at each mass in ``a_values`` and return records sorted by ``a``.

    With ``settings.continuation`` each run starts from the previous
    minimiser dilated by the ratio of predicted blow-up lengths (on co-moving
    grids this is a pure change of box size). Without continuation the points
    are independent and run on ``settings.jobs`` worker processes.
    """
    a_sorted = sorted(float(a) for a in a_values)
    if not a_sorted:
        return ([], []) if return_fields else []
    results = []
    if settings.continuation:
        prev = None
        for a in a_sorted:
            u0 = None
            if prev is not None and prev[1].converged:
                u_prev, a_prev = prev[0], prev[1].a
                g = sweep_grid(a, p.a_star, settings)
                if settings.comoving and g.n == u_prev.grid.n:
                    u0 = rescale_to_grid(u_prev, g, a)
                else:
                    ratio = predicted_blowup_scale(a, p.a_star) / predicted_blowup_scale(a_prev, p.a_star)
                    u0 = _dilate(u_prev, g, ratio, a)
            rec, u = _run_point((a, pot, cfg, p, settings, u0))
            results.append((rec, u))
            prev = (u, rec)
    else:
        jobs = [(a, pot, cfg, p, settings, None) for a in a_sorted]
        if settings.jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=settings.jobs) as ex:
                results = list(ex.map(_run_point, jobs))
        else:
            results = [_run_point(j) for j in jobs]
    records = [r for r, _ in results]
    if return_fields:
        return records, [u for _, u in results]
    return records


# ---------------------------------------------------------------------------
# fits


def energy_constant(p: RadialProfile, b0_qq: float | None = None) -> float:
    """``a*^2 / 4 - (a*^2 / 2) ln a* + B0(Q^2, Q^2) / 2``."""
    A = p.a_star
    if b0_qq is None:
        b0_qq = radial_log_energy(p)
    return A * A / 4.0 - A * A / 2.0 * math.log(A) + 0.5 * b0_qq


def energy_remainder(a: float, e_a: float, a_star: float) -> float:
    """``e(a) - (a^2 / 4) ln[4 (a* - a)]``."""
    return e_a - a * a / 4.0 * math.log(4.0 * (a_star - a))


def fit_energy_asymptotics(records, a_star: float) -> tuple[float, float]:
    """Mean of the energy remainder over the last half of the records and its drift.

    Uses converged records with ``a >= 0.9 a*``; the drift is the last
    remainder minus the first.
    """
    use = sorted((r for r in records if r.converged and r.a >= 0.9 * a_star and r.a < a_star), key=lambda r: r.a)
    if len(use) < 3:
        raise ValueError(f"need at least 3 converged records with a >= 0.9 a*, got {len(use)}")
    c = np.array([energy_remainder(r.a, r.e_a, a_star) for r in use])
    tail = c[len(c) // 2 :]
    return float(tail.mean()), float(c[-1] - c[0])


def fit_epsilon_scaling(records, a_star: float) -> float:
    """Least-squares slope through the origin of ``eps_a`` against ``((a* - a) / a*)^(1/2)``."""
    use = [r for r in records if r.converged and r.a < a_star]
    if len(use) < 3:
        raise ValueError(f"need at least 3 converged records below a*, got {len(use)}")
    a = np.array([r.a for r in use])
    if np.ptp(a) == 0:
        raise ValueError("degenerate regressor: all records share the same a")
    x = np.sqrt((a_star - a) / a_star)
    eps = np.array([r.epsilon_a for r in use])
    return float(np.dot(x, eps) / np.dot(x, x))


# ---------------------------------------------------------------------------
# trial states


def trial_upper_bound(
    a: float,
    tau: float,
    p: RadialProfile,
    pot: PotentialSpec,
    plan: LogKernelPlan | None = None,
    *,
    rel_tol: float = 1e-2,
    b0_qq: float | None = None,
    return_grid_value: bool = False,
):
    """Closed-form energy of the scaled soliton ``u_tau``, an upper bound for ``e(a)``.

    ``a (a* - a) tau^2 / a* + a omega^2 m2 / (4 a* tau^2)
    + (a / a*) int V_omega(x / tau) Q^2 + (a / a*)^2 B0(Q^2, Q^2) / 2
    - (a^2 / 2) ln tau`` with ``m2 = int |x|^2 Q^2``. With ``plan`` the
    gridded trial state is evaluated as well and the two must agree to
    ``rel_tol``.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    A = p.a_star
    if b0_qq is None:
        b0_qq = radial_log_energy(p)
    m2 = radial_moment(p, 2)
    v_term = radial_potential_moment(p, pot.v_omega_radial, scale=tau)
    closed = (
        a * (A - a) * tau**2 / A
        + a * pot.omega**2 * m2 / (4.0 * A * tau**2)
        + a / A * v_term
        + 0.5 * (a / A) ** 2 * b0_qq
        - a * a / 2.0 * math.log(tau)
    )
    if plan is None:
        return closed
    u = make_scaled_soliton(p, plan.grid, a, tau)
    gridded = energy(u, pot, plan)
    gap = abs(gridded - closed) / abs(closed)
    if gap > rel_tol:
        raise AssertionError(f"gridded trial energy {gridded:.10g} differs from closed form {closed:.10g} by {gap:.2e}")
    return (closed, gridded) if return_grid_value else closed


def nonexistence_probe(
    a: float,
    pot: PotentialSpec,
    tau_values,
    p: RadialProfile,
    plan: LogKernelPlan,
    g: Grid2D | None = None,
    x_tau=None,
) -> list:
    """Energies of the cut-off trial family at each ``tau``.

    ``x_tau`` defaults to the origin (a minimum of ``V_omega`` for radial
    traps) when ``omega < omega*``, and to ``(tau sqrt(2 tau), tau sqrt(2 tau))``
    when ``omega > omega*``. Values of ``tau`` whose trial support does not fit
    in the box give ``nan`` with a warning.
    """
    g = plan.grid if g is None else g
    if g != plan.grid:
        raise ValueError("probe grid does not match the kernel plan grid")
    taus = [float(t) for t in tau_values]
    if any(t2 <= t1 for t1, t2 in zip(taus, taus[1:])):
        raise ValueError("tau_values must be increasing")
    out = []
    for tau in taus:
        if x_tau is not None:
            centre = np.asarray(x_tau, dtype=float)
        elif pot.supercritical:
            c = tau * math.sqrt(2 * tau)
            centre = np.array([c, c])
        else:
            centre = np.zeros(2)
        try:
            w = make_trial_cutoff_state(p, g, a, tau, centre, pot.omega)
        except ValueError as exc:
            warnings.warn(f"tau={tau} unusable: {exc}", RuntimeWarning, stacklevel=2)
            out.append((tau, float("nan")))
            continue
        out.append((tau, energy(w, pot, plan)))
    return out


def probe_log_slope(probe) -> float:
    """Least-squares slope of the probe energies against ``ln tau``."""
    pts = [(t, e) for t, e in probe if np.isfinite(e)]
    if len(pts) < 2:
        raise ValueError("need two finite probe energies")
    x = np.log([t for t, _ in pts])
    y = np.array([e for _, e in pts])
    return float(np.polyfit(x, y, 1)[0])
