"""Coherent superpositions of two number states, and the best input amplitude.

The profile has zeros of F at 0, n and m, with the segment between n and m
repeated once so that the coherence between |n> and |m> is carried along
intact.  The amplitude optimiser finds the input that maximises that coherence.
"""

import math

from nclsim import Pair, evaluate, optimize_amplitude
from nclsim.metrics import coherence_closed_form, pair_gaussian_approximation


def main():
    res = optimize_amplitude(Pair(0, 2), (0.2, 3.0))
    rep = evaluate(Pair(0, 2), res.r_opt)
    print(f"pair(0,2): r_opt={res.r_opt:.6f} coherence={res.objective:.6f} purity={rep.purity:.6f} fidelity={rep.fidelity:.6f}")
    exact = math.sqrt(0.5 * (2 - math.sqrt(3) + math.sqrt(7)))
    print(f"  stationarity of the closed form gives r={exact:.6f}, c={coherence_closed_form(Pair(0, 2), exact):.6f}")

    print("\nlarger pairs at |alpha|^2 = m - 1/2 against the Gaussian estimate")
    for n, m in ((4, 9), (8, 15), (12, 21)):
        r = math.sqrt(m - 0.5)
        c = coherence_closed_form(Pair(n, m), r)
        g = pair_gaussian_approximation(n, m)
        print(f"  ({n:2d},{m:2d}) exact={c:.5f} gaussian={g.coherence:.5f} zeta={g.zeta:.4f}")

    print("\nthe input phase sets the output relative phase")
    for phi in (0.0, math.pi / 2, math.pi):
        rep = evaluate(Pair(1, 3, phi), 1.6)
        print(f"  phi={phi:.3f}  fidelity={rep.fidelity:.5f}")


if __name__ == "__main__":
    main()
