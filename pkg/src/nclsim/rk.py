"""Dormand-Prince 5(4) integrator that steps exactly onto requested output times."""

from __future__ import annotations

import numpy as np

# Butcher tableau, Dormand & Prince (1980)
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
E = B5 - B4
_STAGES = [[(j, a) for j, a in enumerate(row) if a != 0.0] for row in A]
_ERR = [(j, e) for j, e in enumerate(E) if e != 0.0]

def _combine(ks, coeffs, h, out):
    j, c = coeffs[0]
    np.multiply(ks[j], h * c, out=out)
    for j, c in coeffs[1:]:
        out += (h * c) * ks[j]
    return out


SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
MAX_STEPS = 5_000_000


class StiffnessError(RuntimeError):
    """Step size collapsed; ``index`` is the component with the largest error."""

    def __init__(self, message, t=None, index=None):
        super().__init__(message)
        self.t = t
        self.index = index


def dopri5(rhs, y0, times, rtol=1e-8, atol=1e-12, max_step=np.inf, h0=None, max_steps=MAX_STEPS):
    """Integrate ``dy/dt = rhs(y)`` and return the states at ``times``.

    ``times`` must be sorted and start at the initial time.  Steps are clipped
    so that every output time is hit exactly; no interpolation is used.  The
    error norm is the maximum over components of
    ``|err| / (atol + rtol * max(|y|, |y_new|))``.

    Returns ``(states, stats)`` where ``states[i]`` corresponds to ``times[i]``.
    Raises ``StiffnessError`` when the step size underflows or more than
    ``max_steps`` steps are attempted.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("need at least one output time")
    if np.any(np.diff(times) <= 0):
        raise ValueError("output times must be strictly increasing")
    y = np.array(y0, copy=True)
    shape = y.shape
    t = float(times[0])
    out = [y.copy()]
    stats = {"steps": 0, "rejected": 0, "evals": 1}
    if times.size == 1:
        return out, stats

    k1 = rhs(y)
    span = times[-1] - times[0]
    if h0 is None:
        scale = atol + rtol * np.abs(y)
        d0 = np.max(np.abs(y) / scale) if y.size else 0.0
        d1 = np.max(np.abs(k1) / scale) if y.size else 0.0
        h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6 * max(span, 1.0)
    else:
        h = h0
    h = min(h, max_step, span)
    ks = [None] * 7

    for t_next in times[1:]:
        while t < t_next:
            if stats["steps"] + stats["rejected"] >= max_steps:
                raise StiffnessError(f"step budget of {max_steps} exhausted at t={t:.6g}", t=t)
            h_try = min(h, max_step)
            last = t + h_try >= t_next - 4 * np.finfo(float).eps * abs(t_next)
            h_step = t_next - t if last else h_try
            ks[0] = k1
            for s in range(1, 7):
                acc = _combine(ks, _STAGES[s], h_step, np.empty_like(y))
                acc += y
                ks[s] = rhs(acc)
            stats["evals"] += 6
            y_new = acc  # stage 7 argument is the 5th-order solution (FSAL)
            err = _combine(ks, _ERR, h_step, np.empty_like(y))
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            ratio = np.abs(err) / scale
            err_norm = float(np.max(ratio)) if ratio.size else 0.0
            fac = MAX_FACTOR if err_norm == 0 else SAFETY * err_norm ** -0.2
            fac = min(MAX_FACTOR, max(MIN_FACTOR, fac))

            if err_norm <= 1.0:
                t = t_next if last else t + h_step
                y = y_new
                k1 = ks[6]
                stats["steps"] += 1
                h = h_step * fac
                if last and fac >= 1.0:
                    h = max(h, h_try)
            else:
                stats["rejected"] += 1
                h = h_step * fac
                if h < 1e-13 * max(1.0, abs(t)):
                    idx = np.unravel_index(int(np.argmax(ratio)), shape)
                    raise StiffnessError(
                        f"step size underflow at t={t:.6g} (component {idx})",
                        t=t,
                        index=idx,
                    )
        out.append(y.copy())
    return out, stats
