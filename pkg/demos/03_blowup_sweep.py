"""Approaching the critical mass: energy law, blow-up rate and profile.

Runs a continuation sweep over a in [0.90, 0.99] a* on co-moving grids and
compares the results with the limiting laws:

    e(a) - (a^2/4) ln[4(a* - a)]  ->  a*^2/4 - (a*^2/2) ln a* + B0(Q^2, Q^2)/2
    eps_a / ((a* - a)/a*)^(1/2)    ->  2/a*
    mu_a eps_a^2                   ->  -1/a*

Pass a number of points as the first argument for a quicker run.
"""

import sys

import numpy as np

from rotsn import asymptotics as asym
from rotsn.field import PotentialSpec
from rotsn.groundstate import solve_radial_ground_state
from rotsn.minimize import MinimizeConfig


def main(points=10):
    p = solve_radial_ground_state()
    A = p.a_star
    pot = PotentialSpec("harmonic", omega=1.0, lam=2.0)
    fr = np.linspace(0.90, 0.99, points)
    recs = asym.sweep(fr * A, pot, MinimizeConfig(init="scaled_soliton"), p)
    print(" a/a*    e(a)          c(a)         eps/eps_pred  mu eps^2 a*   ||w - Q_ref||")
    for r in recs:
        eps_pred = 2 / A * np.sqrt((A - r.a) / A)
        print(f" {r.a / A:.3f}  {r.e_a:12.6f}  {asym.energy_remainder(r.a, r.e_a, A):11.5f}"
              f"  {r.epsilon_a / eps_pred:12.4f}  {r.mu_eps2 * A:10.4f}  {r.l2_distance:.2e}")
    const, drift = asym.fit_energy_asymptotics(recs, A)
    print(f"remainder (last half) {const:.4f}, limit {asym.energy_constant(p):.4f}, drift {drift:.3f}")
    print(f"eps slope {asym.fit_epsilon_scaling(recs, A):.5f}, limit {2 / A:.5f}")
    # the remainder still moves because its o(1) part is of size (a* - a) ln a
    print("the closed-form trial bound drifts by the same amount:")
    for f in (0.90, 0.99):
        a = f * A
        b = asym.trial_upper_bound(a, np.sqrt(a * A / (4 * (A - a))), p, pot)
        print(f"  {f:.2f} a*: c = {asym.energy_remainder(a, b, A):.4f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 10)
