"""Band-by-band evolution and the flow into the stationary state.

Each diagonal band of the density matrix evolves on its own.  The exact
stationary solver and long-time integration agree to round-off.
"""

import numpy as np

from nclsim import EvolutionSettings, evolve_bands, evolve_matrix, profile_for_pair, reassemble, stationary_matrix
from nclsim.fock import coherent_density_matrix


def main():
    n_max, r = 24, 1.4
    profile = profile_for_pair(1, 3, n_max)
    rho0 = coherent_density_matrix(r, n_max)

    stat = stationary_matrix(profile, rho0)
    print("accumulating elements (n, k):", sorted(stat.support.accumulators))

    for t_end in (1.0, 10.0, 200.0):
        s = EvolutionSettings(t_end=t_end)
        bands = evolve_bands(profile, rho0, s)
        rho_b = reassemble(bands).final
        rho_m = evolve_matrix(profile, rho0, s).final
        print(f"t={t_end:6.1f}  |bands - matrix|={np.max(np.abs(rho_b - rho_m)):.1e}"
              f"  |ODE - stationary|={np.max(np.abs(rho_m - stat.rho)):.1e}")

    print(f"stationary purity {stat.purity:.6f}; rho_11={stat.rho[1, 1].real:.4f} rho_33={stat.rho[3, 3].real:.4f} |rho_13|={abs(stat.rho[1, 3]):.4f}")


if __name__ == "__main__":
    main()
