"""Golden-section maximisation of a scalar function on a bracket."""

from __future__ import annotations

import math

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(f, lo: float, hi: float, tol: float = 1e-6, max_iter: int = 200):
    """Maximise a unimodal ``f`` on ``[lo, hi]`` until the bracket is narrower than ``tol``.

    Returns ``(x_best, f_best, probes)`` where ``probes`` lists every
    ``(x, f(x))`` evaluated, in evaluation order.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    probes = []

    def g(x):
        v = f(x)
        probes.append((x, v))
        return v

    a, b = lo, hi
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = g(x1), g(x2)
    for _ in range(max_iter):
        if b - a < tol:
            break
        # ties move toward the smaller x
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = g(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = g(x2)
    x_best, f_best = max(probes, key=lambda p: (p[1], -p[0]))
    return x_best, f_best, probes
