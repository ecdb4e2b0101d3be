"""Adiabatic elimination of a fast-decaying collective mode.

One kept mode (Fock cutoff ``kept_dim``) couples to a lossy mode ``b``
(cutoff ``lossy_dim``) damped at rate ``gamma``.  The coupling Hamiltonian is
expanded in powers of ``b``; the operator ``F_ops[(0, n)]`` is the kept-mode
factor that accompanies the creation of ``n`` quanta in ``b``, so the full
Hamiltonian is ``sum F_ops[(m, n)] (x) (b^dagger)^n b^m``.  When ``b`` relaxes
quickly, the kept mode sees the Hamiltonian ``F_ops[(0, 0)]`` plus dissipators
with Lindblad operators ``F_ops[(0, n)]``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .evolution import EvolutionSettings
from .fock import LossProfile, TailRule, TruncationWarning
from .rk import dopri5

LOSSY_TOP_WARN = 1e-2


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def number(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


NAMED_OPS = {
    "a": lambda d: annihilation(d),
    "a_nhat": lambda d: annihilation(d) @ number(d),
    "nhat_a": lambda d: number(d) @ annihilation(d),
    "identity": lambda d: np.eye(d, dtype=complex),
}


@dataclass
class ModeExpansion:
    """Kept-mode operators ``F_{mn}`` of the coupling Hamiltonian.

    Missing adjoint partners are filled in; pairs present in both orders must
    already satisfy ``F_{mn} = F_{nm}^dagger``.
    """

    kept_dim: int
    lossy_dim: int
    gamma: float
    F_ops: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kept_dim < 1 or self.lossy_dim < 2:
            raise ValueError("need kept_dim >= 1 and lossy_dim >= 2")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        ops = {}
        for (m, n), op in self.F_ops.items():
            op = np.asarray(op, dtype=complex)
            if op.shape != (self.kept_dim, self.kept_dim):
                raise ValueError(f"F_{m}{n} has shape {op.shape}")
            ops[(int(m), int(n))] = op
        for (m, n), op in list(ops.items()):
            partner = ops.get((n, m))
            if partner is None:
                ops[(n, m)] = op.conj().T
            elif np.max(np.abs(partner - op.conj().T)) > 1e-12:
                raise ValueError(f"F_{m}{n} and F_{n}{m} are not adjoint; Hamiltonian not Hermitian")
        self.F_ops = ops

    def hamiltonian(self) -> np.ndarray:
        """Full Hamiltonian on ``kept (x) lossy``."""
        b = annihilation(self.lossy_dim)
        bd = b.conj().T
        H = np.zeros((self.kept_dim * self.lossy_dim,) * 2, dtype=complex)
        for (m, n), op in self.F_ops.items():
            H += np.kron(op, np.linalg.matrix_power(bd, n) @ np.linalg.matrix_power(b, m))
        return H


def kerr_expansion(kappa: float, gamma: float, kept_dim: int = 12, lossy_dim: int = 4, op: str = "a_nhat"):
    """Single coupling term ``F_01 = kappa * op``."""
    return ModeExpansion(kept_dim, lossy_dim, gamma, {(0, 1): kappa * NAMED_OPS[op](kept_dim)})


def elimination_rate(n: int, gamma: float, convention: str = "second_order") -> float:
    """Dissipator rate for the term creating ``n`` quanta in the lossy mode.

    ``'second_order'``: ``(n-1)!/gamma``, from second-order perturbation in
    the coupling with ``|n><0|`` of the lossy mode damped at ``n * gamma``.
    ``'literature'``: ``n!/((n+1) gamma)``.  Both multiply the superoperator
    ``2 L rho L^+ - L^+ L rho - rho L^+ L``.
    """
    if n < 1:
        raise ValueError("dissipators start at n = 1")
    if convention == "second_order":
        return math.factorial(n - 1) / gamma
    if convention == "literature":
        return math.factorial(n) / ((n + 1) * gamma)
    raise ValueError(f"unknown convention {convention!r}")


@dataclass
class ReducedGenerator:
    hamiltonian: np.ndarray
    dissipators: list  # (n, L, rate)

    def rhs(self):
        return lindblad_rhs(self.hamiltonian, [(L, g) for _, L, g in self.dissipators])

    def as_loss_profile(self) -> tuple[LossProfile, float]:
        """Express a single ``a f(n)`` dissipator as ``(profile, gamma)``.

        Raises ``ValueError`` if the generator is not of that form.
        """
        if np.max(np.abs(self.hamiltonian)) > 0 or len(self.dissipators) != 1:
            raise ValueError("not a pure single-dissipator generator")
        _, L, rate = self.dissipators[0]
        dim = L.shape[0]
        sup = np.diagonal(L, offset=1)
        off = L.copy()
        off[np.arange(dim - 1), np.arange(1, dim)] = 0.0
        if np.max(np.abs(off)) > 1e-12 or np.max(np.abs(sup.imag)) > 1e-12 or sup.real.min() < -1e-12:
            raise ValueError("dissipator is not of the form a f(n) with f >= 0")
        n = np.arange(1, dim)
        f = np.concatenate([[1.0], np.abs(sup.real) / np.sqrt(n)])
        return LossProfile(tuple(f.tolist()), TailRule.TRUNCATE), rate


def reduced_generator(expansion: ModeExpansion, convention: str = "second_order") -> ReducedGenerator:
    H = expansion.F_ops.get((0, 0), np.zeros((expansion.kept_dim,) * 2, dtype=complex))
    diss = []
    for (m, n), op in sorted(expansion.F_ops.items()):
        if m == 0 and n >= 1 and np.max(np.abs(op)) > 0:
            diss.append((n, op, elimination_rate(n, expansion.gamma, convention)))
    return ReducedGenerator(H, diss)


def lindblad_rhs(H, dissipators):
    """``-i[H, rho] + sum g (2 L rho L^+ - L^+ L rho - rho L^+ L)``."""
    H = np.asarray(H, dtype=complex)
    terms = [(np.asarray(L), np.asarray(L).conj().T, g, np.asarray(L).conj().T @ np.asarray(L)) for L, g in dissipators]
    hermitian = np.max(np.abs(H)) > 0

    def rhs(rho):
        out = -1j * (H @ rho - rho @ H) if hermitian else np.zeros_like(rho)
        for L, Ld, g, LdL in terms:
            out += g * (2.0 * (L @ rho @ Ld) - LdL @ rho - rho @ LdL)
        return out

    return rhs


def full_rhs(expansion: ModeExpansion):
    """Generator of the joint dynamics; the lossy-mode damping is applied by index shifts."""
    K, B, g = expansion.kept_dim, expansion.lossy_dim, expansion.gamma
    H = expansion.hamiltonian()
    nb = np.arange(B, dtype=float)
    decay = (nb[:, None] + nb[None, :])[None, :, None, :] * g
    jump = 2.0 * g * np.sqrt(np.outer(nb[1:], nb[1:]))[None, :, None, :]

    def rhs(rho):
        out = -1j * (H @ rho - rho @ H)
        r4 = rho.reshape(K, B, K, B)
        o4 = out.reshape(K, B, K, B)
        o4 -= decay * r4
        o4[:, :-1, :, :-1] += jump * r4[:, 1:, :, 1:]
        return out

    return rhs


def partial_trace_lossy(rho, kept_dim: int, lossy_dim: int) -> np.ndarray:
    return np.einsum("ibjb->ij", rho.reshape(kept_dim, lossy_dim, kept_dim, lossy_dim))


def trace_distance(a, b) -> float:
    d = np.asarray(a) - np.asarray(b)
    d = 0.5 * (d + d.conj().T)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(d))))


@dataclass
class ReductionReport:
    times: np.ndarray
    trace_distance: np.ndarray
    full_trace_error: np.ndarray
    full_herm_error: np.ndarray
    reduced_trace_error: np.ndarray
    reduced_herm_error: np.ndarray
    lossy_top_population: float
    convention: str
    warnings: list = field(default_factory=list)

    @property
    def max_distance(self) -> float:
        return float(self.trace_distance.max())


def _diagnostics(states):
    tr = np.array([np.trace(s) for s in states])
    herm = np.array([np.max(np.abs(s - s.conj().T)) for s in states])
    return np.abs(tr - tr[0]), herm


def verify_reduction(
    expansion: ModeExpansion,
    rho0,
    settings: EvolutionSettings,
    convention: str = "second_order",
) -> ReductionReport:
    """Compare the traced-out full dynamics with the reduced master equation.

    The lossy mode starts in vacuum.  ``settings.gamma`` is ignored; the
    damping rate comes from the expansion.
    """
    K, B = expansion.kept_dim, expansion.lossy_dim
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (K, K):
        raise ValueError("rho0 must live on the kept mode")
    times = settings.output_times()
    vac = np.zeros((B, B), dtype=complex)
    vac[0, 0] = 1.0
    full, _ = dopri5(full_rhs(expansion), np.kron(rho0, vac), times, settings.rel_tol, settings.abs_tol, settings.max_step)

    gen = reduced_generator(expansion, convention)
    red, _ = dopri5(gen.rhs(), rho0, times, settings.rel_tol, settings.abs_tol, settings.max_step)

    kept = [partial_trace_lossy(s, K, B) for s in full]
    dist = np.array([trace_distance(a, b) for a, b in zip(kept, red)])
    top = max(
        float(np.real(np.trace(s.reshape(K, B, K, B)[:, B - 1, :, B - 1]))) for s in full
    )
    notes = []
    if top > LOSSY_TOP_WARN:
        msg = f"lossy mode reaches {top:.2e} population in its top level; raise lossy_dim"
        notes.append(msg)
        warnings.warn(msg, TruncationWarning, stacklevel=2)
    fte, fhe = _diagnostics(full)
    rte, rhe = _diagnostics(red)
    return ReductionReport(times, dist, fte, fhe, rte, rhe, top, convention, notes)
