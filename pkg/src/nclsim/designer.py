"""Loss profiles for target state families and amplitude optimisation."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fock import (
    Comb,
    Fock,
    LossProfile,
    Pair,
    TailRule,
    coherent_density_matrix,
    default_n_max,
)
from .metrics import fidelity
from .search import golden_max
from .stationary import StationaryReport, stationary_matrix

GRID_POINTS = 64
MULTIMODAL_LEVEL = 0.999


def profile_for_fock(n1: int, n_max: int) -> LossProfile:
    """``f = 1`` everywhere except a single zero at ``n1``."""
    if not 1 <= n1 <= n_max:
        raise ValueError("need 1 <= n1 <= n_max")
    f = [1.0] * (n_max + 1)
    f[n1] = 0.0
    return LossProfile(tuple(f), TailRule.HOLD)


def profile_for_pair(n: int, m: int, n_max: int) -> LossProfile:
    """``F = 1`` except zeros at ``n`` and ``m``; keeps ``F(k) = F(k + m - n)`` for ``k = n..m-1``."""
    if not 0 <= n < m:
        raise ValueError("need 0 <= n < m")
    d = m - n
    if m + d > n_max:
        raise ValueError(f"n_max={n_max} too small, need at least {m + d}")
    F = [1.0] * (n_max + 1)
    F[0] = F[n] = F[m] = 0.0
    profile = LossProfile.from_F(F, TailRule.PERIODIC, 1)

    zeros = set(np.flatnonzero(profile.zero_mask(n_max + 1)).tolist())
    if zeros != {0, n, m}:
        raise ValueError(f"window constraint forces extra zeros {sorted(zeros - {0, n, m})}")
    Fv = profile.F(n_max + 1)
    for k in range(n, m):
        if not math.isclose(Fv[k], Fv[k + d], rel_tol=1e-15, abs_tol=0.0):
            raise ValueError(f"coherence window broken at k={k}")
    return profile


def profile_for_comb(N: int, n0: int, n_max: int) -> LossProfile:
    """Periodic ``F`` with zeros on ``n0 + jN`` (and at 0)."""
    if N < 2 or not 0 <= n0 < N:
        raise ValueError("need N >= 2 and 0 <= n0 < N")
    if n_max < n0 + 2 * N:
        raise ValueError("n_max must cover at least two periods past n0")
    F = [0.0 if (n == 0 or n % N == n0) else 1.0 for n in range(n_max + 1)]
    return LossProfile.from_F(F, TailRule.PERIODIC, N)


def profile_for_target(target, n_max: int) -> LossProfile:
    if isinstance(target, Fock):
        return profile_for_fock(target.n1, n_max)
    if isinstance(target, Pair):
        return profile_for_pair(target.n, target.m, n_max)
    if isinstance(target, Comb):
        return profile_for_comb(target.N, target.n0, n_max)
    raise TypeError(f"unknown target {target!r}")


def design_provenance(target) -> dict:
    """What a designed profile guarantees, for embedding next to it in outputs."""
    if isinstance(target, Fock):
        return {
            "target": f"fock:{target.n1}",
            "zeros_of_f": [target.n1],
            "conditions": ["f(n) = 1 off the zero"],
        }
    if isinstance(target, Pair):
        return {
            "target": f"pair:{target.n},{target.m}",
            "zeros_of_F": sorted({0, target.n, target.m}),
            "conditions": [f"F(k) = F(k+{target.m - target.n}) for k = {target.n}..{target.m - 1}",
                           "F = 1 off the zeros"],
        }
    if isinstance(target, Comb):
        return {
            "target": f"comb:{target.N},{target.n0}",
            "zeros_of_F": f"0 and {target.n0} + {target.N} j",
            "conditions": [f"F(n + {target.N}) = F(n) for n >= 1", "F = 1 off the zeros"],
        }
    raise TypeError(f"unknown target {target!r}")


def input_phase(target) -> float:
    """Phase of the input amplitude that aligns the output coherence with the target."""
    if isinstance(target, Pair):
        return target.phi / (target.m - target.n)
    return 0.0


def target_n_max(target, r: float) -> int:
    return max(default_n_max(r), target.reach)


def target_coherence(report: StationaryReport, target) -> float:
    rho = report.rho
    if isinstance(target, Fock):
        i, j = 0, target.n1
    elif isinstance(target, Pair):
        i, j = target.n, target.m
    else:
        i, j = target.n0, target.n0 + target.N
    return float(2.0 * abs(rho[i, j]))


def evaluate(target, r: float, n_max: int | None = None, profile: LossProfile | None = None) -> StationaryReport:
    """Stationary report for a coherent input of modulus ``r`` and the target's profile."""
    if n_max is None:
        n_max = target_n_max(target, r)
    if profile is None:
        profile = profile_for_target(target, n_max)
    alpha = r * np.exp(1j * input_phase(target))
    rho0 = coherent_density_matrix(alpha, n_max)
    report = stationary_matrix(profile, rho0)
    report.fidelity = fidelity(report.rho, target, r=r)
    return report


OBJECTIVES = ("coherence", "fidelity", "purity")


def _objective_value(report: StationaryReport, target, objective: str) -> float:
    if objective == "coherence":
        return target_coherence(report, target)
    if objective == "fidelity":
        return report.fidelity
    if objective == "purity":
        return report.purity
    raise ValueError(f"unknown objective {objective!r}")


@dataclass
class OptimizationResult:
    r_opt: float
    objective: float
    trace: list
    method_meta: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def boundary(self) -> bool:
        return bool(self.method_meta.get("boundary"))


def optimize_amplitude(
    target,
    bracket: tuple[float, float],
    objective: str = "coherence",
    tol: float = 1e-6,
    grid_points: int = GRID_POINTS,
) -> OptimizationResult:
    """Grid scan followed by golden-section refinement around the best grid point.

    The Fock cutoff is fixed from the upper end of the bracket so every probe
    uses the same truncation.
    """
    lo, hi = map(float, bracket)
    if not 0 <= lo < hi:
        raise ValueError("bracket must satisfy 0 <= r_lo < r_hi")
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    n_max = target_n_max(target, hi)
    profile = profile_for_target(target, n_max)

    def f(r):
        return _objective_value(evaluate(target, r, n_max, profile), target, objective)

    grid = np.linspace(lo, hi, grid_points)
    values = np.array([f(r) for r in grid])
    trace = list(zip(grid.tolist(), values.tolist()))
    i = int(np.argmax(values))  # first maximum, so ties go to smaller r
    best = values[i]

    notes = []
    peaks = [
        j
        for j in range(grid_points)
        if (j == 0 or values[j] > values[j - 1])
        and (j == grid_points - 1 or values[j] >= values[j + 1])
        and values[j] >= MULTIMODAL_LEVEL * best
    ]
    multimodal = len(peaks) > 1
    if multimodal:
        notes.append(f"objective has {len(peaks)} near-optimal grid maxima; returning the global grid best region")

    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, grid_points - 1)]
    _, _, probes = golden_max(f, a, b, tol=tol)
    trace.extend(probes)
    r_opt, obj = max(trace, key=lambda p: (p[1], -p[0]))
    boundary = bool(r_opt - lo < tol or hi - r_opt < tol)
    if boundary:
        notes.append("optimum lies on the bracket boundary")
    meta = {
        "bracket": [lo, hi],
        "grid_points": grid_points,
        "iterations": len(probes),
        "n_max": n_max,
        "objective": objective,
        "boundary": boundary,
        "multimodal": multimodal,
    }
    return OptimizationResult(r_opt, obj, trace, meta, notes)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("NCL_THREADS", "1")))
    except ValueError:
        return 1


def sweep_amplitude(target, r_values, n_max: int | None = None, workers: int | None = None) -> list[dict]:
    """One stationary solve per amplitude; rows come back in input order."""
    r_values = [float(r) for r in r_values]
    if not r_values:
        raise ValueError("r_values is empty")
    if min(r_values) < 0:
        raise ValueError("amplitudes must be non-negative")
    if n_max is None:
        n_max = target_n_max(target, max(r_values))
    profile = profile_for_target(target, n_max)

    def row(r):
        rep = evaluate(target, r, n_max, profile)
        elements = {
            f"{n},{n + k}": complex(rep.rho[n, n + k]) for n, k in rep.support.accumulators
        }
        return {
            "r": r,
            "coherence": target_coherence(rep, target),
            "fidelity": rep.fidelity,
            "purity": rep.purity,
            "rho_elements": elements,
        }

    workers = workers or _workers()
    if workers == 1:
        return [row(r) for r in r_values]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(row, r_values))
