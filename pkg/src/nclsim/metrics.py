"""State-quality measures and the large-amplitude closed forms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import Comb, Fock, LossProfile, Pair, as_density_matrix, coherent_vector, coherent_weight
from .search import golden_max


class UnequalZeroSpacing(ValueError):
    """The zeros of ``F`` are not equidistant, so no initial state can end pure."""


def purity(rho) -> float:
    rho = np.asarray(rho)
    return float(np.sum(np.abs(rho) ** 2))


def coherence(rho, n: int, m: int) -> float:
    """``2 |rho[n, m]|``."""
    if not 0 <= n < m < np.shape(rho)[0]:
        raise ValueError("need 0 <= n < m <= n_max")
    return float(2.0 * abs(rho[n, m]))


def comb_alpha_prime(N: int, r: float) -> float:
    """Reduced amplitude with ``|alpha'|**2 = r**2 - (N-1)/2`` (clipped at 0)."""
    return math.sqrt(max(r * r - 0.5 * (N - 1), 0.0))


def comb_state_vector(N: int, n0: int, alpha_prime, n_max: int, construction: str = "number") -> np.ndarray:
    """Normalised comb state on photon numbers ``n0, n0+N, ...``.

    ``construction='number'`` filters the Fock amplitudes of ``|alpha'>``;
    ``'circle'`` sums ``N`` coherent states placed evenly on a circle.
    """
    if N < 1 or not 0 <= n0 < N:
        raise ValueError("need N >= 1 and 0 <= n0 < N")
    if construction not in ("number", "circle"):
        raise ValueError(f"unknown construction {construction!r}")
    if alpha_prime == 0:
        # limit of the normalised state as alpha' -> 0
        psi = np.zeros(n_max + 1, dtype=complex)
        psi[n0] = 1.0
        return psi
    if construction == "number":
        psi = coherent_vector(alpha_prime, n_max)
        psi[np.arange(n_max + 1) % N != n0] = 0.0
    elif construction == "circle":
        psi = np.zeros(n_max + 1, dtype=complex)
        for k in range(N):
            w = np.exp(2j * np.pi * k / N)
            psi += np.exp(-2j * np.pi * k * n0 / N) * coherent_vector(alpha_prime * w, n_max)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("comb state vanishes inside the cutoff")
    return psi / norm


def target_vector(target, dim: int, r: float | None = None) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    if isinstance(target, Fock):
        psi[target.n1] = 1.0
    elif isinstance(target, Pair):
        psi[target.n] = 1.0
        psi[target.m] = np.exp(1j * target.phi)
        psi /= math.sqrt(2.0)
    elif isinstance(target, Comb):
        ap = target.alpha_prime
        if ap is None:
            if r is None:
                raise ValueError("comb target needs alpha_prime or the input amplitude r")
            ap = comb_alpha_prime(target.N, r)
        psi = comb_state_vector(target.N, target.n0, ap, dim - 1)
    else:
        raise TypeError(f"unknown target {target!r}")
    return psi


def fidelity(rho, target, r: float | None = None) -> float:
    """``<psi|rho|psi>`` for the target's pure state."""
    rho = np.asarray(rho)
    psi = target_vector(target, rho.shape[0], r)
    return float(np.real(np.vdot(psi, rho @ psi)))


def coherence_closed_form(target: Pair, r: float) -> float:
    """Stationary pair coherence when every transmittance in the window is one."""
    n, m = target.n, target.m
    d = m - n
    k = np.arange(n, m)
    return float(2.0 * np.sum(coherent_weight(k, r) * coherent_weight(k + d, r)))


def gaussian_weight(k, r: float):
    """Normal approximation to ``q_k(r)**2`` for large ``r``."""
    k = np.asarray(k, dtype=float)
    return np.exp(-((k - r * r) ** 2) / (2 * r * r)) / (math.sqrt(2 * math.pi) * r)


def gaussian_pair_coherence(zeta) -> float:
    return 2.0 * math.erf(zeta) * math.exp(-zeta * zeta)


@dataclass(frozen=True)
class PairApproximation:
    zeta: float
    alpha_opt_sq: float
    coherence: float
    rho_mm: float
    rho_nn: float
    rho_nm_abs: float
    rho_00: float


def pair_gaussian_approximation(n: int, m: int) -> PairApproximation:
    """Large-amplitude estimates for the optimal ``|n> + |m>`` preparation."""
    if not (0 <= n < m and m >= 2):
        raise ValueError("need 0 <= n < m and m >= 2")
    a2 = m - 0.5
    zeta = (m - n) / (2.0 * math.sqrt(2.0) * math.sqrt(a2))
    e2 = math.erf(2 * zeta)
    return PairApproximation(
        zeta=zeta,
        alpha_opt_sq=a2,
        coherence=gaussian_pair_coherence(zeta),
        rho_mm=0.5,
        rho_nn=0.5 * e2,
        rho_nm_abs=math.erf(zeta) * math.exp(-zeta * zeta),
        rho_00=0.5 * (1.0 - e2),
    )


def maximize_gaussian_coherence(lo: float = 0.0, hi: float = 3.0, tol: float = 1e-10):
    """Return ``(zeta_star, c_max)`` for ``2 erf(zeta) exp(-zeta**2)``."""
    z, c, _ = golden_max(gaussian_pair_coherence, lo, hi, tol=tol)
    return z, c


def comb_purity_approx(N: int, r: float) -> float:
    if N < 1 or r <= 0:
        raise ValueError("need N >= 1 and r > 0")
    return 1.0 - (N * N - 1) / (24.0 * r * r)


def comb_purity_sum(N: int, n0: int, r: float, n_max: int) -> float:
    """Purity of the combed state from the Poisson weights, ignoring ``rho_00``."""
    q = coherent_weight(np.arange(n_max + N + 1), r)
    idx = np.arange(n0, n_max + 1, N)
    # S[k1, k2] = sum_n q_{n+k1} q_{n+k2}
    shifted = np.array([q[idx + k] for k in range(N)])
    S = shifted @ shifted.T
    return float(np.sum(S * S))


# -- purity conditions for combs ---------------------------------------------


def zero_segments(profile: LossProfile, dim: int) -> list[tuple[int, int]]:
    """Complete segments ``(start, length)`` between successive zeros of ``F`` below ``dim``."""
    zeros = np.flatnonzero(profile.zero_mask(dim))
    return [(int(a), int(b - a)) for a, b in zip(zeros[:-1], zeros[1:])]


def segment_ratio_defect(rho0, n1: int, n2: int, k: int) -> float:
    """``(rho[n1+k]/rho[n2+k]) / (rho[n1]/rho[n2])`` on the diagonal of ``rho0``."""
    d = np.real(np.diag(rho0))
    return float((d[n1 + k] / d[n2 + k]) / (d[n1] / d[n2]))


def purity_condition_residual(rho0, profile: LossProfile) -> float:
    """Scale-free violation of the collinearity condition for a pure comb output.

    For successive zero-segments ``[n1, n1+L)`` and ``[n2, n2+L)`` the
    diagonal of ``rho0`` must satisfy ``rho[n1+k]/rho[n2+k] = rho[n1]/rho[n2]``.
    Each offset contributes ``|x_k - x_0| / sqrt(x_k x_0)`` (``x`` the two
    ratios), and contributions are averaged with weights
    ``sqrt(rho[n1+k] rho[n2+k])``.  Zero iff the condition holds wherever the
    populations are non-zero.

    Raises ``UnequalZeroSpacing`` when the complete segments differ in length.
    """
    rho0 = as_density_matrix(rho0)
    dim = rho0.shape[0]
    segs = zero_segments(profile, dim)
    if len(segs) < 2:
        raise ValueError("need at least two complete zero-segments below the cutoff")
    lengths = {L for _, L in segs}
    if len(lengths) > 1:
        raise UnequalZeroSpacing(f"zero spacings {sorted(lengths)} differ")
    L = lengths.pop()
    d = np.real(np.diag(rho0))
    total = 0.0
    weight = 0.0
    for (n1, _), (n2, _) in zip(segs[:-1], segs[1:]):
        for k in range(L):
            a, b = d[n1 + k], d[n2 + k]
            a0, b0 = d[n1], d[n2]
            w = math.sqrt(max(a * b, 0.0))
            if w == 0.0 or a0 <= 0.0 or b0 <= 0.0:
                continue
            log_gap = (math.log(a) - math.log(b)) - (math.log(a0) - math.log(b0))
            total += w * 2.0 * abs(math.sinh(0.5 * log_gap))
            weight += w
    if weight == 0.0:
        raise ValueError("no populated segment pairs")
    return total / weight
