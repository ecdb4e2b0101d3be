"""Time evolution of the nonlinear-coherent-loss master equation.

In the Fock basis the generator couples ``rho[n, m]`` only to
``rho[n+1, m+1]``, so every diagonal band ``k = m - n`` is an independent
linear system.  ``evolve_band`` integrates one band and ``evolve_matrix``
integrates all of them at once.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fock import DiagonalBand, LossProfile, as_density_matrix, bands_from_matrix
from .rk import MAX_STEPS, StiffnessError, dopri5

STATIONARY_RTOL = 1e-12
# real-axis stability limit of Dormand-Prince 5(4) is about 3.3
STABILITY_LIMIT = 3.0


@dataclass(frozen=True)
class EvolutionSettings:
    gamma: float = 1.0
    t_end: float = 1.0
    rel_tol: float = 1e-9
    abs_tol: float = 1e-13
    max_step: float = math.inf
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.t_end >= 0:
            raise ValueError("t_end must be non-negative")
        for tol in (self.rel_tol, self.abs_tol):
            if not 0 < tol <= 1e-2:
                raise ValueError("tolerances must lie in (0, 1e-2]")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        snaps = tuple(float(t) for t in self.snapshot_times)
        if list(snaps) != sorted(snaps):
            raise ValueError("snapshot_times must be sorted")
        if snaps and (snaps[0] < 0 or snaps[-1] > self.t_end):
            raise ValueError("snapshot_times must lie in [0, t_end]")
        object.__setattr__(self, "snapshot_times", snaps)

    def output_times(self) -> np.ndarray:
        """Snapshot times plus both endpoints, strictly increasing."""
        ts = sorted({0.0, float(self.t_end), *self.snapshot_times})
        return np.array(ts)


@dataclass
class Trajectory:
    """Snapshots of a band (``mode='band'``) or a whole matrix (``mode='matrix'``).

    Per-snapshot diagnostics: ``trace_error`` is the drift of the trace (only
    defined for matrices and band 0, NaN otherwise), ``min_xi`` the smallest
    real band value, ``herm_error`` the largest Hermiticity violation (NaN
    for bands).
    """

    times: np.ndarray
    states: np.ndarray
    mode: str
    trace_error: np.ndarray
    min_xi: np.ndarray
    herm_error: np.ndarray
    offset: int | None = None
    scale: complex | None = None
    alpha_phase: float = 0.0
    stats: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _check_dim(profile: LossProfile, dim: int):
    if dim < 1:
        raise ValueError("empty state")
    return profile.F(dim)


def phi_values(profile: LossProfile, k: int, dim: int) -> np.ndarray:
    """Band decay rates ``F(n)**2 + F(n+k)**2`` for ``n = 0..dim-k-1`` (gamma = 1)."""
    F = _check_dim(profile, dim)
    F2 = F * F
    return F2[: dim - k] + F2[k:]


def min_positive_phi(profile: LossProfile, dim: int) -> float:
    """Slowest non-zero decay rate over every band of a ``dim``-level matrix."""
    F2 = _check_dim(profile, dim) ** 2
    phi = F2[:, None] + F2[None, :]
    pos = phi[phi > 0]
    return float(pos.min()) if pos.size else math.inf


def _step_cap(settings: EvolutionSettings, max_phi: float, n_worst=None) -> float:
    """Explicit-stability step limit; refuses runs that would exceed the step budget."""
    cap = settings.max_step
    if max_phi > 0:
        cap = min(cap, STABILITY_LIMIT / (settings.gamma * max_phi))
    if settings.t_end / cap > MAX_STEPS:
        raise StiffnessError(
            f"stiffness failure at n={n_worst}: decay rate {settings.gamma * max_phi:.3g} needs more than "
            f"{MAX_STEPS} explicit steps to reach t={settings.t_end:g}",
            index=(n_worst,),
        )
    return cap


def evolve_band(profile: LossProfile, band: DiagonalBand, settings: EvolutionSettings) -> Trajectory:
    """Integrate one band ``xi_k(n)``; values beyond the cutoff are held at zero."""
    k = band.offset
    dim = band.dim
    L = band.values.size
    F = _check_dim(profile, dim)
    g = settings.gamma
    up = 2.0 * g * F[1:L] * F[k + 1 : k + L]
    decay = g * (F[:L] ** 2 + F[k : k + L] ** 2)

    def rhs(xi):
        out = -decay * xi
        out[:-1] += up * xi[1:]
        return out

    times = settings.output_times()
    y0 = band.values.astype(complex)
    try:
        states, stats = dopri5(
            rhs,
            y0,
            times,
            rtol=settings.rel_tol,
            atol=settings.abs_tol,
            max_step=_step_cap(settings, float(decay.max()) / g, int(np.argmax(decay))),
        )
    except StiffnessError as exc:
        n = exc.index[0] if exc.index else None
        raise StiffnessError(f"band k={k}: stiffness failure at n={n} ({exc})", exc.t, n) from None
    states = np.array(states)
    if k == 0:
        tr = states.sum(axis=1)
        trace_error = np.abs(tr - tr[0]) * abs(band.scale)
    else:
        trace_error = np.full(len(times), np.nan)
    return Trajectory(
        times=times,
        states=states,
        mode="band",
        trace_error=trace_error,
        min_xi=states.real.min(axis=1),
        herm_error=np.full(len(times), np.nan),
        offset=k,
        scale=band.scale,
        stats=stats,
    )


def generator(profile: LossProfile, dim: int, gamma: float = 1.0):
    """Return ``rhs(rho)`` for the matrix master equation at ``dim`` levels."""
    F = _check_dim(profile, dim)
    F2 = F * F
    decay = gamma * (F2[:, None] + F2[None, :])
    feed = 2.0 * gamma * np.outer(F[1:], F[1:])

    def rhs(rho):
        out = -decay * rho
        out[:-1, :-1] += feed * rho[1:, 1:]
        return out

    rhs.max_rate = float(decay.max())
    return rhs


def band_view(rho: np.ndarray, alpha_phase: float) -> np.ndarray:
    """Matrix of ``xi`` values: ``rho[n, m] * exp(i (m - n) phase)`` for ``m >= n``."""
    dim = rho.shape[-1]
    idx = np.arange(dim)
    phase = np.exp(1j * (idx[None, :] - idx[:, None]) * alpha_phase)
    return rho * phase


def _matrix_diagnostics(states: np.ndarray, alpha_phase: float):
    dim = states.shape[-1]
    upper = np.triu(np.ones((dim, dim), dtype=bool))
    tr = np.trace(states, axis1=1, axis2=2)
    trace_error = np.abs(tr - tr[0])
    xi = band_view(states, alpha_phase).real
    min_xi = np.where(upper, xi, np.inf).reshape(len(states), -1).min(axis=1)
    herm = np.abs(states - np.conj(np.swapaxes(states, 1, 2))).reshape(len(states), -1).max(axis=1)
    return trace_error, min_xi, herm


def evolve_matrix(
    profile: LossProfile,
    rho0,
    settings: EvolutionSettings,
    alpha_phase: float = 0.0,
) -> Trajectory:
    """Integrate the full density matrix.

    ``alpha_phase`` only affects the ``min_xi`` diagnostic: band ``k`` is
    measured relative to ``exp(-i k alpha_phase)``, which makes every value
    non-negative for a coherent input of that phase.
    """
    rho0 = as_density_matrix(rho0)
    dim = rho0.shape[0]
    rhs = generator(profile, dim, settings.gamma)
    times = settings.output_times()
    try:
        states, stats = dopri5(
            rhs,
            rho0,
            times,
            rtol=settings.rel_tol,
            atol=settings.abs_tol,
            max_step=_step_cap(settings, rhs.max_rate / settings.gamma, int(np.argmax(profile.F(dim)))),
        )
    except StiffnessError as exc:
        n = exc.index[0] if exc.index else None
        raise StiffnessError(f"stiffness failure at n={n} ({exc})", exc.t, n) from None
    states = np.array(states)
    trace_error, min_xi, herm = _matrix_diagnostics(states, alpha_phase)
    return Trajectory(
        times=times,
        states=states,
        mode="matrix",
        trace_error=trace_error,
        min_xi=min_xi,
        herm_error=herm,
        alpha_phase=alpha_phase,
        stats=stats,
    )


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("NCL_THREADS", "1")))
    except ValueError:
        return 1


def evolve_bands(
    profile: LossProfile,
    rho0,
    settings: EvolutionSettings,
    alpha_phase: float = 0.0,
    workers: int | None = None,
) -> list[Trajectory]:
    """Evolve every band of ``rho0`` separately; results are ordered by ``k``."""
    bands = bands_from_matrix(rho0, alpha_phase)
    workers = workers or _workers()
    if workers == 1:
        out = [evolve_band(profile, b, settings) for b in bands]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(lambda b: evolve_band(profile, b, settings), bands))
    for tr in out:
        tr.alpha_phase = alpha_phase
    return out


def reassemble(band_trajectories) -> Trajectory:
    """Stack band trajectories back into a matrix trajectory."""
    band_trajectories = sorted(band_trajectories, key=lambda tr: tr.offset)
    times = band_trajectories[0].times
    dim = band_trajectories[0].states.shape[1]
    states = np.zeros((len(times), dim, dim), dtype=complex)
    idx = np.arange(dim)
    for tr in band_trajectories:
        k = tr.offset
        n = idx[: dim - k]
        vals = tr.scale * tr.states
        states[:, n, n + k] = vals
        if k:
            states[:, n + k, n] = np.conj(vals)
    phase = band_trajectories[0].alpha_phase
    trace_error, min_xi, herm = _matrix_diagnostics(states, phase)
    return Trajectory(times, states, "matrix", trace_error, min_xi, herm, alpha_phase=phase)


def blocking_index(profile: LossProfile, n1: int, k: int, dim: int) -> int:
    """First rung above ``n1`` where band ``k`` stops carrying flow.

    Returns ``dim - k`` (one past the last stored rung) when no zero of ``F``
    interrupts the band before the cutoff.
    """
    zero = profile.zero_mask(dim)
    for n in range(n1 + 1, dim - k):
        if zero[n] or zero[n + k]:
            return n
    return dim - k


def segment_weights(profile: LossProfile, k: int, n1: int, n2: int) -> np.ndarray:
    """Products ``T_k(n1+1) ... T_k(m)`` for ``m = n1..n2-1``."""
    F = profile.F(n2 + k)
    a = F[n1 + 1 : n2]
    b = F[n1 + 1 + k : n2 + k]
    den = a * a + b * b
    T = np.divide(2.0 * a * b, den, out=np.zeros_like(den), where=den > 0)
    if T.size > 64:
        with np.errstate(divide="ignore"):
            logs = np.concatenate([[0.0], np.cumsum(np.log(T))])
        return np.exp(logs)
    return np.concatenate([[1.0], np.cumprod(T)])


def segment_invariant(band_trajectory: Trajectory, profile: LossProfile, n1: int, n2: int | None = None):
    """Transmittance-weighted sum over the segment ``n1..n2-1`` at each snapshot.

    ``n1`` must be an accumulator of the band (``F(n1) = F(n1+k) = 0``); ``n2``
    defaults to the next blocking index.  The sum stays constant while no
    flux enters through ``n2``.
    """
    if band_trajectory.mode != "band":
        raise ValueError("segment_invariant needs a band trajectory")
    k = band_trajectory.offset
    dim = k + band_trajectory.states.shape[1]
    if not (profile.is_zero(n1) and profile.is_zero(n1 + k)):
        raise ValueError(f"n1={n1} is not an accumulator of band k={k}")
    if n2 is None:
        n2 = blocking_index(profile, n1, k, dim)
    w = segment_weights(profile, k, n1, n2)
    return (band_trajectory.states[:, n1:n2] @ w).real


def max_rate_of_change(profile: LossProfile, rho, gamma: float = 1.0) -> float:
    rho = np.asarray(rho)
    return float(np.max(np.abs(generator(profile, rho.shape[0], gamma)(rho))))


def is_stationary(profile: LossProfile, rho, gamma: float = 1.0) -> bool:
    """Scale-free stopping rule: ``max |d rho/dt| < 1e-12 * gamma``."""
    return max_rate_of_change(profile, rho, gamma) < STATIONARY_RTOL * gamma


def evolve_until_stationary(
    profile: LossProfile,
    rho0,
    settings: EvolutionSettings,
    max_time: float = 1e4,
    alpha_phase: float = 0.0,
) -> Trajectory:
    """Integrate in chunks of ``settings.t_end`` (doubling) until stationary.

    Returns a two-snapshot trajectory (start and final state).
    """
    rho = as_density_matrix(rho0)
    t = 0.0
    chunk = settings.t_end if settings.t_end > 0 else 1.0 / settings.gamma
    while not is_stationary(profile, rho, settings.gamma):
        if t >= max_time:
            raise StiffnessError(f"not stationary after t={t:g}", t=t)
        step = EvolutionSettings(
            settings.gamma, chunk, settings.rel_tol, settings.abs_tol, settings.max_step
        )
        rho = evolve_matrix(profile, rho, step, alpha_phase).final
        t += chunk
        chunk *= 2
    states = np.array([as_density_matrix(rho0), rho])
    trace_error, min_xi, herm = _matrix_diagnostics(states, alpha_phase)
    return Trajectory(np.array([0.0, t]), states, "matrix", trace_error, min_xi, herm, alpha_phase=alpha_phase)
