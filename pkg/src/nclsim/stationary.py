"""Closed-form stationary states of nonlinear coherent loss.

Only entries ``rho[n, n+k]`` with ``F(n) = F(n+k) = 0`` survive at long
times.  Each such accumulator collects the amplitude flowing down its band
from the rungs above it, attenuated by the product of transmittances, until
the first rung where either ladder amplitude vanishes.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .evolution import blocking_index, segment_weights
from .fock import TAIL_WARN, LossProfile, TruncationWarning, as_density_matrix
from .metrics import fidelity as _fidelity
from .metrics import purity as _purity


@dataclass(frozen=True)
class StationarySupport:
    """Accumulator positions ``(n, k)`` and their blocking rungs.

    ``blocking[(n, k)]`` is the first rung above ``n`` that stops the flow, or
    ``None`` when the band runs into the Fock cutoff.
    """

    dim: int
    accumulators: tuple[tuple[int, int], ...]
    blocking: dict = field(hash=False, compare=False)

    def __contains__(self, nk) -> bool:
        return tuple(nk) in self.blocking

    def segment_end(self, n: int, k: int) -> int:
        n2 = self.blocking[(n, k)]
        return self.dim - k if n2 is None else n2

    def mask(self) -> np.ndarray:
        """Boolean matrix of the positions allowed to be non-zero (both triangles)."""
        m = np.zeros((self.dim, self.dim), dtype=bool)
        for n, k in self.accumulators:
            m[n, n + k] = m[n + k, n] = True
        return m


@lru_cache(maxsize=128)
def stationary_support(profile: LossProfile, n_max: int) -> StationarySupport:
    dim = n_max + 1
    zeros = np.flatnonzero(profile.zero_mask(dim))
    acc = []
    blocking = {}
    for i, n in enumerate(zeros):
        for m in zeros[i:]:
            n, k = int(n), int(m - n)
            acc.append((n, k))
            n2 = blocking_index(profile, n, k, dim)
            blocking[(n, k)] = None if n2 == dim - k else n2
    acc.sort(key=lambda nk: (nk[1], nk[0]))
    return StationarySupport(dim, tuple(acc), blocking)


@dataclass
class StationaryReport:
    rho: np.ndarray
    support: StationarySupport
    purity: float
    coherences: dict
    warnings: list = field(default_factory=list)
    fidelity: float | None = None

    def element(self, n: int, m: int) -> complex:
        return complex(self.rho[n, m])

    def to_dict(self) -> dict:
        dim = self.rho.shape[0]
        lower = [
            [n, m, float(self.rho[n, m].real), float(self.rho[n, m].imag)]
            for n in range(dim)
            for m in range(n + 1)
        ]
        out = {
            "support": [list(nk) for nk in self.support.accumulators],
            "rho": lower,
            "purity": self.purity,
            "coherences": self.coherences,
            "warnings": list(self.warnings),
        }
        if self.fidelity is not None:
            out["fidelity"] = self.fidelity
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def stationary_matrix(profile: LossProfile, rho0, target=None) -> StationaryReport:
    """Exact ``t -> infinity`` limit of ``rho0`` under the loss ``profile``."""
    rho0 = as_density_matrix(rho0)
    dim = rho0.shape[0]
    support = stationary_support(profile, dim - 1)
    rho = np.zeros_like(rho0)
    notes = []
    tail = 1.0 - float(np.trace(rho0).real)
    for n1, k in support.accumulators:
        n2 = support.segment_end(n1, k)
        w = segment_weights(profile, k, n1, n2)
        m = np.arange(n1, n2)
        val = np.dot(rho0[m, m + k], w)
        rho[n1, n1 + k] = val
        if k:
            rho[n1 + k, n1] = np.conj(val)
        if support.blocking[(n1, k)] is None and tail > TAIL_WARN:
            msg = (
                f"band k={k} from n={n1} reaches the cutoff; "
                f"{tail:.2e} of initial mass lies beyond it"
            )
            notes.append(msg)
    for msg in notes:
        warnings.warn(msg, TruncationWarning, stacklevel=2)

    coherences = {
        f"{n},{n + k}": float(2 * abs(rho[n, n + k])) for n, k in support.accumulators if k
    }
    report = StationaryReport(rho, support, _purity(rho), coherences, notes)
    if target is not None:
        report.fidelity = _fidelity(rho, target)
    return report
