import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotsn.energy import energy_breakdown
from rotsn.field import (
    ComplexField2D,
    PotentialSpec,
    as_field,
    blowup_scale,
    cutoff,
    cutoff_normalization,
    kinetic,
    make_scaled_soliton,
    make_trial_cutoff_state,
    mass,
    modulus_gradient_energy,
    rotation_term,
    soliton_scale,
)
from rotsn.grid import Grid2D
from rotsn.logconv import make_plan
from rotsn.minimize import smooth_noise

from conftest import gaussian


def test_field_is_immutable_copy():
    g = Grid2D(16, 2.0)
    raw = np.ones(g.shape)
    u = ComplexField2D(g, raw)
    raw[0, 0] = 5.0
    assert u.values[0, 0] == 1.0 and u.values.dtype == np.complex128
    with pytest.raises(ValueError):
        u.values[0, 0] = 2.0
    with pytest.raises(ValueError):
        ComplexField2D(g, np.full(g.shape, np.nan))
    with pytest.raises(ValueError):
        as_field(g, np.ones((4, 4)))
    assert np.allclose((u * 2j).values, 2j) and np.allclose(u.conj().values, 1.0)


def test_potential_critical_speeds():
    assert PotentialSpec("harmonic", lam=3.0).omega_star == 3.0
    assert PotentialSpec("power", s=4.0).omega_star == math.inf
    assert PotentialSpec("power", s=2.0, coeff=0.25).omega_star == 1.0
    assert PotentialSpec("harmonic", omega=2.5, lam=2.0).supercritical
    assert not PotentialSpec("harmonic", omega=1.0).supercritical
    with pytest.raises(ValueError):
        PotentialSpec("harmonic", omega=-1.0)
    with pytest.raises(ValueError):
        PotentialSpec("wedge")
    with pytest.raises(ValueError):
        PotentialSpec("tabulated", func=lambda r: -r, user_omega_star=1.0).radial(np.ones(2))
    pot = PotentialSpec("harmonic", omega=1.0, lam=2.0)
    assert pot.v_omega(np.array(2.0), np.array(0.0)) == pytest.approx(4.0 - 1.0)
    assert pot.with_omega(0.5).omega == 0.5


def test_gaussian_observables():
    g = Grid2D(128, 10.0)
    u = ComplexField2D(g, gaussian(g))
    assert mass(u) == pytest.approx(np.pi, rel=1e-13)
    assert kinetic(u) == pytest.approx(np.pi, rel=1e-12)
    assert modulus_gradient_energy(u) == pytest.approx(np.pi, rel=1e-12)
    assert blowup_scale(u) == pytest.approx(np.pi**-0.5, rel=1e-12)
    assert abs(rotation_term(u)) < 1e-14
    with pytest.raises(ValueError):
        blowup_scale(ComplexField2D(g, np.ones(g.shape)))


def test_vortex_carries_unit_angular_momentum_per_mass():
    g = Grid2D(128, 10.0)
    x1, x2 = g.mesh
    u = ComplexField2D(g, (x1 + 1j * x2) * gaussian(g))
    assert rotation_term(u) / mass(u) == pytest.approx(1.0, abs=1e-12)


def test_cutoff_shape():
    r = np.linspace(0, 3, 301)
    c = cutoff(r)
    assert np.all(c[r <= 1] == 1.0) and np.all(c[r >= 2] == 0.0)
    assert np.all(np.diff(c) <= 0) and np.all((c >= 0) & (c <= 1))
    assert cutoff(np.array([1.5]))[0] == pytest.approx(0.5)


@pytest.mark.parametrize("tau", [1.0, 2.0, 4.0])
def test_trial_state_mass_and_constant(profile, tau):
    g = Grid2D(256, 4.0)
    a = 0.8 * profile.a_star
    u, c = make_trial_cutoff_state(profile, g, a, tau, return_constant=True)
    assert mass(u) == pytest.approx(a, rel=1e-13)
    assert c == pytest.approx(cutoff_normalization(profile, tau), rel=1e-6)


def test_trial_state_phase_and_bounds(profile):
    g = Grid2D(256, 6.0)
    u = make_trial_cutoff_state(profile, g, 5.0, 4.0, (1.0, 1.0), omega=1.0)
    x1, x2 = g.mesh
    phase = np.exp(0.5j * (-x1 + x2))
    assert np.allclose(u.values * np.conj(phase), np.abs(u.values), atol=1e-12)
    with pytest.raises(ValueError):
        make_trial_cutoff_state(profile, g, 5.0, 4.0, (4.5, 0.0))
    with pytest.raises(ValueError):
        make_trial_cutoff_state(profile, g, -1.0, 4.0)


def test_scaled_soliton(profile):
    g = Grid2D(256, 16.0)
    a = 0.5 * profile.a_star
    u = make_scaled_soliton(profile, g, a, 1.5)
    assert mass(u) == pytest.approx(a, rel=1e-8)
    assert modulus_gradient_energy(u) == pytest.approx(a * 1.5**2, rel=1e-6)
    assert soliton_scale(0.99 * profile.a_star, profile.a_star) == pytest.approx(
        math.sqrt(0.99 * profile.a_star**2 / (4 * 0.01 * profile.a_star))
    )
    with pytest.raises(ValueError):
        soliton_scale(profile.a_star, profile.a_star)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.sampled_from([0.5, 1.0, 1.9]))
def test_diamagnetic_inequality(seed, omega):
    g = Grid2D(64, 8.0)
    rng = np.random.default_rng(seed)
    env = gaussian(g, 1.5)
    u = ComplexField2D(g, env * (smooth_noise(g, rng) + 1j * smooth_noise(g, rng) + 0.5))
    br = energy_breakdown(u, PotentialSpec(omega=omega), make_plan(g))
    assert br.magnetic_kinetic >= br.modulus_kinetic - 1e-8 * mass(u)
