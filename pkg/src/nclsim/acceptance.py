"""End-to-end acceptance checks shared by the test suite and ``nclsim selftest``.

Each ``criterion_*`` function returns a :class:`CriterionResult`.  The
expensive ODE runs used by several criteria are computed once and cached.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .designer import evaluate, optimize_amplitude, profile_for_target, target_n_max
from .elimination import kerr_expansion, verify_reduction
from .evolution import EvolutionSettings, evolve_matrix, min_positive_phi
from .fock import Comb, Fock, Pair, TruncationWarning, coherent_density_matrix, coherent_weight, parse_target
from .metrics import (
    comb_purity_approx,
    comb_state_vector,
    maximize_gaussian_coherence,
    purity_condition_residual,
)
from .stationary import stationary_matrix

ODE_TARGETS = ("fock:3", "pair:0,2", "pair:4,9", "comb:2,0", "comb:3,1")
ODE_AMPLITUDES = (1.0, 2.0, 3.0)
ODE_N_MAX_CAP = 60
ELIMINATION_RATIOS = (10.0, 50.0)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float = 0.0
    values: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.number:2d} {self.name}: {self.detail} ({self.elapsed:.2f} s)"


@dataclass
class OdeRun:
    target: str
    r: float
    n_max: int
    t_end: float
    max_diff: float
    outside_support: float
    min_xi: float
    trace_error: np.ndarray
    times: np.ndarray
    herm_error: float
    elapsed: float


@lru_cache(maxsize=None)
def ode_runs() -> tuple[OdeRun, ...]:
    """Stationary solver against long-time ODE integration for every profile/amplitude pair."""
    runs = []
    for spec in ODE_TARGETS:
        target = parse_target(spec)
        for r in ODE_AMPLITUDES:
            t0 = time.perf_counter()
            n_max = min(ODE_N_MAX_CAP, target_n_max(target, r))
            profile = profile_for_target(target, n_max)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", TruncationWarning)
                rho0 = coherent_density_matrix(r, n_max)
                report = stationary_matrix(profile, rho0)
            t_end = 50.0 / min_positive_phi(profile, n_max + 1)
            traj = evolve_matrix(profile, rho0, EvolutionSettings(gamma=1.0, t_end=t_end))
            final = traj.final
            outside = np.where(report.support.mask(), 0.0, np.abs(final))
            runs.append(
                OdeRun(
                    target=spec,
                    r=r,
                    n_max=n_max,
                    t_end=t_end,
                    max_diff=float(np.max(np.abs(final - report.rho))),
                    outside_support=float(outside.max()),
                    min_xi=float(np.min(traj.min_xi)),
                    trace_error=np.asarray(traj.trace_error),
                    times=np.asarray(traj.times),
                    herm_error=float(np.max(traj.herm_error)),
                    elapsed=time.perf_counter() - t0,
                )
            )
    return tuple(runs)


@lru_cache(maxsize=None)
def elimination_runs() -> dict:
    """Full-versus-reduced comparison for the two coupling ratios, with timings."""
    out = {}
    for ratio in ELIMINATION_RATIOS:
        t0 = time.perf_counter()
        expansion = kerr_expansion(1.0, ratio, kept_dim=12, lossy_dim=4, op="a_nhat")
        rho0 = coherent_density_matrix(1.0, 11, warn=False)
        settings = EvolutionSettings(gamma=1.0, t_end=3.0 * ratio, snapshot_times=tuple(np.linspace(0, 3 * ratio, 61)[1:-1]))
        report = verify_reduction(expansion, rho0, settings)
        out[ratio] = (report, time.perf_counter() - t0)
    return out


def _timed(fn):
    def wrapper():
        t0 = time.perf_counter()
        res = fn()
        res.elapsed = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def criterion_1() -> CriterionResult:
    t0 = time.perf_counter()
    res = optimize_amplitude(Pair(0, 2), (0.5, 2.5))
    rep = evaluate(Pair(0, 2), res.r_opt)
    elapsed = time.perf_counter() - t0
    rho00 = rep.rho[0, 0].real
    rho02 = abs(rep.rho[0, 2])
    ok = (
        abs(res.r_opt - 1.207) <= 0.01
        and abs(res.objective - 0.88) <= 0.005
        and abs(rho02 - 0.44) <= 0.005
        and abs(rho00 - 0.60) <= 0.03
        and elapsed < 1.0
    )
    detail = (
        f"r_opt={res.r_opt:.6f} c02={res.objective:.6f} |rho02|={rho02:.6f} "
        f"rho00={rho00:.6f} (reference 0.60) solve={elapsed:.3f}s"
    )
    return CriterionResult(1, "pair(0,2) optimum", ok, detail,
                           values={"r_opt": res.r_opt, "coherence": res.objective, "rho00": rho00, "rho02": rho02})


@_timed
def criterion_2() -> CriterionResult:
    worst = 0.0
    for n1 in (1, 3, 5):
        for r in (0.5, 1.0, 2.0, 3.0):
            fid = evaluate(Fock(n1), r).fidelity
            expected = 1.0 - float(np.sum(coherent_weight(np.arange(n1), r) ** 2))
            worst = max(worst, abs(fid - expected))
    f3 = evaluate(Fock(3), 3.0).fidelity
    grid = np.linspace(0.1, 4.0, 40)
    monotone = True
    for n1 in (1, 3, 5):
        fids = np.array([evaluate(Fock(n1), r, n_max=target_n_max(Fock(n1), 4.0)).fidelity for r in grid])
        monotone &= bool(np.all(np.diff(fids) > 0))
    ok = worst <= 1e-12 and abs((1.0 - f3) - 6.232e-3) <= 1e-6 and monotone
    detail = f"max|F - closed form|={worst:.2e} 1-F(n1=3,r=3)={1 - f3:.6e} monotone={monotone}"
    return CriterionResult(2, "Fock generation", ok, detail, values={"one_minus_f3": 1 - f3})


@_timed
def criterion_3() -> CriterionResult:
    runs = ode_runs()
    worst = max(run.max_diff for run in runs)
    total = sum(run.elapsed for run in runs)
    n_ok = all(run.n_max <= ODE_N_MAX_CAP for run in runs)
    ok = worst <= 1e-6 and total < 30.0 and n_ok
    detail = f"{len(runs)} runs, max|analytic - ODE|={worst:.2e}, ODE time {total:.1f}s"
    return CriterionResult(3, "analytic vs ODE", ok, detail, values={"max_diff": worst, "runtime": total})


@_timed
def criterion_4() -> CriterionResult:
    rows = []
    ok = True
    for N, tol in ((2, 0.005), (3, 0.01)):
        for n0 in range(N):
            rep = evaluate(Comb(N, n0), 3.0)
            approx = comb_purity_approx(N, 3.0)
            ok &= abs(rep.purity - approx) <= tol
            rows.append(f"N={N},n0={n0}: {rep.purity:.6f} vs {approx:.6f}")
    return CriterionResult(4, "comb purity", ok, "; ".join(rows))


@_timed
def criterion_5() -> CriterionResult:
    worst = 1.0
    for N, n0 in ((2, 0), (2, 1), (3, 1)):
        a = comb_state_vector(N, n0, 3.0, 80, "number")
        b = comb_state_vector(N, n0, 3.0, 80, "circle")
        worst = min(worst, abs(np.vdot(a, b)) ** 2)
    ok = worst >= 1 - 1e-10
    return CriterionResult(5, "comb state identity", ok, f"min overlap 1 - {1 - worst:.2e}")


@_timed
def criterion_6() -> CriterionResult:
    zeta, cmax = maximize_gaussian_coherence()
    ratio = 8.0 * zeta * zeta
    ok = abs(cmax - 0.843) <= 0.002
    detail = (
        f"max coherence {cmax:.6f} at zeta*={zeta:.6f}; implied dn^2/|alpha|^2={ratio:.3f} "
        f"(quoted 6.4, discrepancy logged)"
    )
    return CriterionResult(6, "Gaussian pair maximum", ok, detail,
                           values={"zeta": zeta, "cmax": cmax, "ratio": ratio})


@_timed
def criterion_7() -> CriterionResult:
    worst = min(run.min_xi for run in ode_runs())
    return CriterionResult(7, "band positivity", worst >= -1e-10, f"min xi = {worst:.2e}")


@_timed
def criterion_8() -> CriterionResult:
    worst = max(run.outside_support for run in ode_runs())
    return CriterionResult(8, "stationary support", worst < 1e-10, f"max |rho| off support = {worst:.2e}")


@_timed
def criterion_9() -> CriterionResult:
    p02 = evaluate(Pair(0, 2), 1.2070005).purity
    highest = 0.0
    for spec in ODE_TARGETS:
        target = parse_target(spec)
        for r in (1.0, 2.0, 3.0, 4.0):
            highest = max(highest, evaluate(target, r).purity)
    ok = abs(p02 - 0.90) <= 0.01 and highest < 1 - 1e-6
    detail = f"purity pair(0,2)@r_opt={p02:.6f}; max purity over profiles, r<=4: 1 - {1 - highest:.2e}"
    return CriterionResult(9, "stationary mixedness", ok, detail, values={"purity02": p02})


@_timed
def criterion_10() -> CriterionResult:
    rows = []
    ok = True
    # n0 = 0 keeps the vacuum zero on the comb, so all segments match
    for N, n0 in ((2, 0), (3, 0)):
        target = Comb(N, n0)
        vals = []
        for r2 in (16.0, 32.0, 64.0):
            r = math.sqrt(r2)
            n_max = target_n_max(target, r)
            profile = profile_for_target(target, n_max)
            rho0 = coherent_density_matrix(r, n_max, warn=False)
            vals.append(purity_condition_residual(rho0, profile))
        ratios = [vals[i] / vals[i + 1] for i in range(len(vals) - 1)]
        ok &= all(abs(q - 2.0) <= 0.4 for q in ratios)
        rows.append(f"comb:{N},{n0} ratios " + ", ".join(f"{q:.3f}" for q in ratios))
    return CriterionResult(10, "purity-condition scaling", ok, "; ".join(rows))


@_timed
def criterion_11() -> CriterionResult:
    runs = elimination_runs()
    (r10, _), (r50, t50) = runs[10.0], runs[50.0]
    ok = r50.max_distance <= 0.05 and r50.max_distance < r10.max_distance and t50 < 60.0
    detail = (
        f"max trace distance {r10.max_distance:.2e} (ratio 10), {r50.max_distance:.2e} (ratio 50); "
        f"ratio-50 run {t50:.1f}s"
    )
    return CriterionResult(11, "adiabatic elimination", ok, detail,
                           values={"d10": r10.max_distance, "d50": r50.max_distance, "runtime": t50})


@_timed
def criterion_12() -> CriterionResult:
    worst_trace = 0.0
    worst_herm = 0.0
    for run in ode_runs():
        worst_trace = max(worst_trace, float(np.max(run.trace_error / (1e-8 * (1 + run.times)))))
        worst_herm = max(worst_herm, run.herm_error)
    for ratio, (rep, _) in elimination_runs().items():
        gt = ratio * rep.times  # lossy-mode damping sets the time scale
        for err in (rep.full_trace_error, rep.reduced_trace_error):
            worst_trace = max(worst_trace, float(np.max(err / (1e-8 * (1 + gt)))))
        worst_herm = max(worst_herm, float(rep.full_herm_error.max()), float(rep.reduced_herm_error.max()))
    ok = worst_trace <= 1.0 and worst_herm <= 1e-10
    detail = f"worst trace error / bound = {worst_trace:.2e}, worst Hermiticity error = {worst_herm:.2e}"
    return CriterionResult(12, "conservation", ok, detail)


CRITERIA = (
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
    criterion_11,
    criterion_12,
)


def run_all(skip=()) -> list[CriterionResult]:
    return [fn() for i, fn in enumerate(CRITERIA, start=1) if i not in skip]
