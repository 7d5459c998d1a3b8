"""The ground profile Q and the critical mass a* = ||Q||^2.

Solves the radial equation by shooting, checks the two integral identities
|grad Q|^2 = Q^2 = Q^4 / 2, and recovers a* a second way by minimising the
Gagliardo-Nirenberg quotient on a 2-D grid.
"""

import time

from rotsn.grid import Grid2D
from rotsn.groundstate import minimize_gn_quotient, radial_log_energy, solve_radial_ground_state


def main():
    t0 = time.perf_counter()
    p = solve_radial_ground_state()
    print(f"Q(0) = {p.q0:.15f}   a* = {p.a_star:.12f}   ({time.perf_counter() - t0:.2f} s)")
    for name, val in p.identity_residuals().items():
        print(f"  {name:8s} identity defect {val:.2e}")
    print(f"  ODE residual {p.ode_residual():.2e}, tail Q ~ {p.tail_coeff:.6f} K0(r)")
    print(f"  self-interaction iint ln|x-y| Q^2 Q^2 = {radial_log_energy(p):.10f}")

    g = Grid2D(256, 16.0)
    a_grid, _ = minimize_gn_quotient(g)
    print(f"2-D quotient minimum on n=256, L=16: {a_grid:.12f} (rel diff {abs(a_grid / p.a_star - 1):.1e})")


if __name__ == "__main__":
    main()
