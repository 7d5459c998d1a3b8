"""A constrained minimiser well below the critical mass.

Harmonic trap V = |x|^2 (lam = 2) rotating at omega = 1, mass a = a*/2.
The run reports the energy split, the multiplier and how far the energy sits
below the scaled-soliton upper bound.
"""

from rotsn.asymptotics import trial_upper_bound
from rotsn.energy import energy_breakdown
from rotsn.field import PotentialSpec, soliton_scale
from rotsn.grid import Grid2D
from rotsn.groundstate import solve_radial_ground_state
from rotsn.logconv import make_plan
from rotsn.minimize import MinimizeConfig, minimize


def main():
    p = solve_radial_ground_state()
    pot = PotentialSpec("harmonic", omega=1.0, lam=2.0)
    a = 0.5 * p.a_star
    plan = make_plan(Grid2D(256, 16.0), "lattice")
    u, rep = minimize(MinimizeConfig(), pot, a, plan, profile=p)
    print(f"{rep.status} in {rep.iters} iterations ({rep.runtime:.1f} s), residual {rep.residual:.1e}")
    print(f"e(a) = {rep.e_a:.10f}, mu = {rep.mu_a:.10f}, eps_a = {rep.epsilon_a:.5f}")
    for k, v in energy_breakdown(u, pot, plan).as_dict().items():
        print(f"  {k:18s} {v: .10f}")
    bound = trial_upper_bound(a, soliton_scale(a, p.a_star), p, pot)
    print(f"trial upper bound {bound:.6f}; gap {bound - rep.e_a:.6f}")


if __name__ == "__main__":
    main()
