"""No minimiser above the threshold: energies along the cut-off trial family.

For a = 1.05 a* (no rotation) E(w_tau) falls without bound as tau grows;
for a = a*/2 it rises. A fit of alpha + beta tau^2 + gamma ln tau
+ delta / tau^2 separates the two divergent pieces, beta = -a(a - a*)/a*
and gamma = -a^2/2. A fast-rotating trap (omega > omega*) is probed with
the family pushed off-centre.
"""

import numpy as np

from rotsn import asymptotics as asym
from rotsn.field import PotentialSpec
from rotsn.grid import Grid2D
from rotsn.groundstate import solve_radial_ground_state
from rotsn.logconv import make_plan


def main():
    p = solve_radial_ground_state()
    A = p.a_star
    plan = make_plan(Grid2D(256, 2.5), "lattice")
    still = PotentialSpec("harmonic", omega=0.0, lam=2.0)
    taus = [2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0]
    for frac in (1.05, 0.5):
        a = frac * A
        res = asym.nonexistence_probe(a, still, taus, p, plan)
        print(f"a = {frac} a*: " + ", ".join(f"{e:.2f}" for _, e in res))
        if frac > 1:
            t = np.array(taus)
            m = np.column_stack([np.ones_like(t), t**2, np.log(t), t**-2])
            coef = np.linalg.lstsq(m, [e for _, e in res], rcond=None)[0]
            print(f"  beta {coef[1]:.4f} (expected {-a * (a - A) / A:.4f}), "
                  f"gamma {coef[2]:.3f} (expected {-a * a / 2:.3f})")

    fast = PotentialSpec("harmonic", omega=2.5, lam=2.0)
    wide = make_plan(Grid2D(512, 12.0), "lattice")
    res = asym.nonexistence_probe(3.0, fast, [0.5, 1.0, 1.5, 2.0], p, wide)
    print("omega = 2.5 > omega* = 2, a = 3: " + ", ".join(f"{e:.2f}" for _, e in res))


if __name__ == "__main__":
    main()
