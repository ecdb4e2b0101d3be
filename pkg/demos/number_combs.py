"""Comb states: keeping every N-th number level from n0 upwards.

The stationary state is close to the pure comb obtained by filtering a
coherent state, and gets purer as the amplitude grows.
"""

import numpy as np

from nclsim import Comb, evaluate
from nclsim.designer import target_n_max
from nclsim.metrics import comb_alpha_prime, comb_purity_approx, comb_state_vector


def main():
    print(f"{'N':>2} {'n0':>2} {'r':>4} {'purity':>9} {'approx':>9} {'fidelity':>9}")
    for N, n0 in ((2, 0), (2, 1), (3, 1)):
        for r in (2.0, 3.0, 4.0):
            rep = evaluate(Comb(N, n0), r)
            print(f"{N:2d} {n0:2d} {r:4.1f} {rep.purity:9.6f} {comb_purity_approx(N, r):9.6f} {rep.fidelity:9.6f}")

    N, n0, r = 3, 1, 3.0
    n_max = target_n_max(Comb(N, n0), r)
    ap = comb_alpha_prime(N, r)
    a = comb_state_vector(N, n0, ap, n_max, "number")
    b = comb_state_vector(N, n0, ap, n_max, "circle")
    print(f"\ncomb({N},{n0}) with alpha'={ap:.4f}: filter and circle constructions overlap to 1 - {1 - abs(np.vdot(a, b)) ** 2:.1e}")
    print("largest amplitudes:", ", ".join(f"|{k}>:{abs(a[k]):.3f}" for k in np.argsort(-np.abs(a))[:4]))
    print(f"mean photon number of the comb: {np.sum(np.arange(n_max + 1) * np.abs(a) ** 2):.3f} (input {r * r:.1f})")


if __name__ == "__main__":
    main()
