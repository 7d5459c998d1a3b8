import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotsn import asymptotics as asym
from rotsn.energy import energy, energy_breakdown
from rotsn.field import ComplexField2D, PotentialSpec, make_trial_cutoff_state
from rotsn.grid import Grid2D
from rotsn.logconv import make_plan
from rotsn.minimize import MinimizeConfig, minimize

POT = PotentialSpec("harmonic", omega=1.0, lam=2.0)


def q_ref_field(p, g, c=(0.0, 0.0), s=1.0, phase=0.0):
    x1, x2 = g.mesh
    r = np.hypot(x1 - c[0], x2 - c[1]) / s
    sa = math.sqrt(p.a_star)
    return ComplexField2D(g, p(r / sa) / sa / s * np.exp(1j * phase))


@pytest.fixture(scope="module")
def wide():
    return Grid2D(256, 40.0)


def test_self_alignment(profile, wide):
    rep = asym.blowup_diagnostics(q_ref_field(profile, wide), profile.a_star, profile, POT, kappa=0.9)
    assert rep.l2_distance < 1e-6 and rep.theta_a == 0.0
    assert np.hypot(*rep.x_a) < wide.spacing
    assert rep.epsilon_a == pytest.approx(1.0, rel=1e-8)
    assert rep.decay_ok and abs(rep.modulus_gradient_w - 1.0) < 1e-2
    assert rep.l2_relative < 1e-6 and rep.linf_relative < 1e-6
    assert not rep.extrapolated


def test_phase_recovery(profile, wide):
    rep = asym.blowup_diagnostics(q_ref_field(profile, wide, phase=1.3), profile.a_star, profile, POT, kappa=0.9)
    assert rep.theta_a == pytest.approx(2 * np.pi - 1.3, abs=1e-12)
    assert rep.l2_distance < 1e-6


def test_alignment_is_optimal_and_orthogonal(profile, wide):
    rng = np.random.default_rng(2)
    u = q_ref_field(profile, wide, phase=0.4)
    x1, x2 = wide.mesh
    u = u.with_values(u.values * (1 + 0.05 * np.exp(-(x1**2 + x2**2) / 20) * (rng.standard_normal() + 1j)))
    rep = asym.blowup_diagnostics(u, profile.a_star, profile, POT, kappa=0.9)
    frame = Grid2D(256, 0.9 * 40.0 / rep.epsilon_a)
    q = asym.reference_profile(profile, frame)
    w = rep.epsilon_a * asym.resample(u.values, wide, rep.x_a[0] + rep.epsilon_a * frame.x,
                                      rep.x_a[1] + rep.epsilon_a * frame.x)
    w = w * np.exp(-0.5j * rep.epsilon_a * POT.omega * (-frame.mesh[0] * rep.x_a[1] + frame.mesh[1] * rep.x_a[0]))
    dist = [math.sqrt(frame.integrate(np.abs(np.exp(1j * t) * w - q) ** 2)) for t in np.linspace(0, 2 * np.pi, 100)]
    assert min(dist) >= rep.l2_distance - 1e-12
    assert rep.orthogonality <= 1e-8 * rep.l2_reference * math.sqrt(frame.integrate(np.abs(w) ** 2))


@settings(max_examples=8, deadline=None)
@given(st.integers(min_value=-20, max_value=20), st.integers(min_value=-20, max_value=20),
       st.floats(min_value=0.6, max_value=1.1))
def test_rescaling_consistency(profile, i, j, s):
    g = Grid2D(256, 40.0)
    c = (i * g.spacing, j * g.spacing)
    rep = asym.blowup_diagnostics(q_ref_field(profile, g, c, s), profile.a_star, profile, POT.with_omega(0.0),
                                  kappa=0.7)
    assert abs(rep.x_a[0] - c[0]) <= g.spacing and abs(rep.x_a[1] - c[1]) <= g.spacing
    assert rep.l2_distance <= 1e-3
    assert rep.epsilon_a == pytest.approx(s, rel=1e-6)
    assert rep.extrapolated


def test_frame_overflow_is_reported(profile):
    g = Grid2D(128, 20.0)
    u = q_ref_field(profile, g, (8.0, 0.0))
    with pytest.raises(ValueError, match="source domain"):
        asym.blowup_diagnostics(u, profile.a_star, profile, POT, kappa=1.0)


def _synthetic(a_star, const, fracs):
    recs = []
    for f in fracs:
        a = f * a_star
        e = a * a / 4 * math.log(4 * (a_star - a)) + const
        eps = 2 / a_star * math.sqrt((a_star - a) / a_star)
        recs.append(asym.SweepRecord(a, e, eps, -1.0, (0.0, 0.0), 0.0, 0.0, True))
    return recs


def test_energy_fit_inverts_exact_law():
    recs = _synthetic(11.7, -128.5, np.linspace(0.9, 0.99, 10))
    const, drift = asym.fit_energy_asymptotics(recs, 11.7)
    assert abs(const + 128.5) < 1e-12 * 128.5 and abs(drift) < 1e-12
    with pytest.raises(ValueError):
        asym.fit_energy_asymptotics(recs[:2], 11.7)
    unconverged = [asym.SweepRecord(r.a, r.e_a, r.epsilon_a, r.mu_a, r.x_a, 0.0, 0.0, False) for r in recs]
    with pytest.raises(ValueError):
        asym.fit_energy_asymptotics(unconverged, 11.7)


def test_epsilon_fit_recovers_exact_slope():
    recs = _synthetic(11.7, 0.0, np.linspace(0.9, 0.99, 10))
    assert asym.fit_epsilon_scaling(recs, 11.7) == pytest.approx(2 / 11.7, rel=1e-12)
    same = [recs[0]] * 3
    with pytest.raises(ValueError, match="degenerate"):
        asym.fit_epsilon_scaling(same, 11.7)


def test_energy_constant_value(profile):
    assert asym.energy_constant(profile) == pytest.approx(-128.4733371569202, rel=1e-10)


def test_trial_bound_two_routes_agree(profile):
    g = Grid2D(256, 8.0)
    a = 0.95 * profile.a_star
    closed, gridded = asym.trial_upper_bound(a, 4.0, profile, POT, make_plan(g, "lattice"),
                                             return_grid_value=True)
    assert abs(closed - gridded) / abs(closed) <= 1e-2
    with pytest.raises(ValueError):
        asym.trial_upper_bound(a, 0.0, profile, POT)


def test_trial_bound_matches_optimal_expansion(profile):
    # at the optimal tau the bound is (a^2/4) ln[4(a*-a)] + C + o(1)
    A = profile.a_star
    a = 0.99 * A
    tau = math.sqrt(a * A / (4 * (A - a)))
    bound = asym.trial_upper_bound(a, tau, profile, POT)
    expansion = a * a / 4 * math.log(4 * (A - a)) + asym.energy_constant(profile)
    assert abs(bound - expansion) <= 0.1 * abs(expansion)
    assert bound - expansion == pytest.approx(
        a * a / 4 - A * A / 4 - (a * a / 4) * math.log(a * A) + A * A / 2 * math.log(A)
        + 0.5 * ((a / A) ** 2 - 1) * 11.353043935650604
        + a / (4 * A * tau**2) * 13.894861636400343 + a / A * 0.75 * 13.894861636400343 / tau**2,
        rel=1e-9,
    )


@pytest.fixture(scope="module")
def probe_plan():
    return make_plan(Grid2D(256, 2.5), "lattice")


def test_probe_single_tau_matches_direct_energy(profile, probe_plan):
    pot = POT.with_omega(0.0)
    a = 1.05 * profile.a_star
    (tau, e), = asym.nonexistence_probe(a, pot, [1.0], profile, probe_plan)
    u = make_trial_cutoff_state(profile, probe_plan.grid, a, 1.0)
    assert e == energy_breakdown(u, pot, probe_plan).total


def test_probe_bounded_below_below_threshold(profile, probe_plan):
    res = asym.nonexistence_probe(0.5 * profile.a_star, POT.with_omega(0.0), [2, 4, 8, 16], profile, probe_plan)
    energies = [e for _, e in res]
    assert min(energies) == energies[0] and np.all(np.isfinite(energies))


def test_probe_reports_unusable_tau(profile, probe_plan):
    pot = POT.with_omega(2.5)
    with pytest.warns(RuntimeWarning, match="unusable"):
        res = asym.nonexistence_probe(3.0, pot, [0.25, 1.0], profile, probe_plan)
    assert np.isfinite(res[0][1]) and math.isnan(res[1][1])
    with pytest.raises(ValueError):
        asym.nonexistence_probe(3.0, pot, [2.0, 1.0], profile, probe_plan)
    with pytest.raises(ValueError):
        asym.probe_log_slope([(1.0, float("nan"))])


def test_sweep_plumbing(profile, tmp_path):
    settings_ = asym.SweepSettings(n=128, half_width=12.0)
    assert asym.sweep([], POT, MinimizeConfig(), profile, settings_) == []
    a = 0.5 * profile.a_star
    (rec,) = asym.sweep([a], POT, MinimizeConfig(), profile, settings_)
    g = asym.sweep_grid(a, profile.a_star, settings_)
    _, rep = minimize(MinimizeConfig(), POT, a, make_plan(g, "lattice"), profile=profile)
    assert rec.e_a == rep.e_a and rec.converged and rec.epsilon_a == rep.epsilon_a
    assert rec.mu_eps2 == pytest.approx(rep.mu_a * rep.epsilon_a**2)
    rows = asym.sweep_rows([rec])
    back = asym.records_from_rows(asym.SWEEP_COLUMNS, [[str(v) for v in rows[0]]])
    assert back[0].a == rec.a and back[0].converged
    with pytest.raises(ValueError):
        asym.records_from_rows(["a"], [])


def test_probe_energy_follows_trial_expansion(profile, probe_plan):
    # E(w_tau) = alpha - a (a - a*) tau^2 / a* - (a^2 / 2) ln tau + O(tau^-2)
    a = 1.05 * profile.a_star
    taus = [2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0]
    res = asym.nonexistence_probe(a, POT.with_omega(0.0), taus, profile, probe_plan)
    t = np.array(taus)
    design = np.column_stack([np.ones_like(t), t**2, np.log(t), t**-2])
    coef = np.linalg.lstsq(design, np.array([e for _, e in res]), rcond=None)[0]
    assert coef[1] == pytest.approx(-a * (a - profile.a_star) / profile.a_star, rel=0.02)
    assert coef[2] == pytest.approx(-a * a / 2, rel=0.05)


def test_trial_bound_remainder_drifts_like_solver_energy(profile):
    # the upper bound at the optimal tau shifts by about -25 between 0.90 a* and 0.99 a*
    A = profile.a_star
    c = []
    for f in (0.90, 0.99):
        a = f * A
        c.append(asym.energy_remainder(a, asym.trial_upper_bound(a, math.sqrt(a * A / (4 * (A - a))), profile, POT), A))
    assert c[1] - c[0] == pytest.approx(-24.86, abs=0.05)
