"""Generating a single Fock state by removing everything except one number level.

A zero of f at n1 stops the loss there; every higher level drains into n1 and
everything below drains to vacuum.  The fidelity with |n1> is the probability
that the input coherent state had at least n1 quanta.
"""

import math

import numpy as np

from nclsim import EvolutionSettings, Fock, evaluate, evolve_matrix, profile_for_fock
from nclsim.fock import coherent_density_matrix


def main():
    n1 = 3
    print(f"target |{n1}>")
    print(f"{'r':>5} {'fidelity':>10} {'1-F':>10}")
    for r in (1.0, 2.0, 3.0, 4.0):
        rep = evaluate(Fock(n1), r)
        print(f"{r:5.1f} {rep.fidelity:10.6f} {1 - rep.fidelity:10.2e}")

    # the approach to the stationary state, seen in the populations
    r, n_max = 2.5, 30
    profile = profile_for_fock(n1, n_max)
    times = (0.01, 0.1, 1.0)
    traj = evolve_matrix(profile, coherent_density_matrix(r, n_max), EvolutionSettings(t_end=10.0, snapshot_times=times))
    print(f"\npopulations of |0..5> for r={r}")
    for t, rho in zip(traj.times, traj.states):
        pops = np.real(np.diag(rho))[:6]
        print(f"t={t:6.2f} " + " ".join(f"{p:.4f}" for p in pops))
    print(f"closed-form stationary p({n1}) = {1 - sum(math.exp(-r * r) * r ** (2 * k) / math.factorial(k) for k in range(n1)):.4f}")


if __name__ == "__main__":
    main()
