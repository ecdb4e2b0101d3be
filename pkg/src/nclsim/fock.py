"""Fock-space primitives for nonlinear coherent loss.

The loss is generated by the Lindblad operator ``L = a f(n)``.  Everything in
this package works with the ladder amplitudes ``F(n) = sqrt(n) f(n)`` and with
density matrices stored as dense complex arrays in the truncated Fock basis.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-9
TAIL_WARN = 1e-9


class TruncationWarning(UserWarning):
    """Probability mass lost beyond the Fock cutoff is not negligible."""


class TailRule(str, Enum):
    TRUNCATE = "truncate"
    HOLD = "hold"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class LossProfile:
    """Tabulated loss function ``f(n)`` for ``n = 0..n_max``.

    ``tail`` decides what happens above the table: ``truncate`` sets f to zero,
    ``hold`` repeats ``f(n_max)``, and ``periodic`` repeats the last ``period``
    values of ``F`` (not ``f``), so ``F(n + period) = F(n)`` beyond the table.
    """

    f_values: tuple[float, ...]
    tail: TailRule = TailRule.HOLD
    period: int | None = None

    def __post_init__(self):
        f = tuple(float(v) for v in self.f_values)
        object.__setattr__(self, "f_values", f)
        object.__setattr__(self, "tail", TailRule(self.tail))
        if not f:
            raise ValueError("profile needs at least one value")
        if any(not math.isfinite(v) or v < 0 for v in f):
            raise ValueError("f(n) must be finite and non-negative")
        if self.tail is TailRule.PERIODIC:
            N = self.period
            if N is None or N < 1:
                raise ValueError("periodic tail needs period >= 1")
            if N > self.n_max:
                raise ValueError("period longer than the stored table")
            # the final period must repeat the one before it
            F = self._table_F()
            lo = max(1, self.n_max - 2 * N + 1)
            for n in range(lo, self.n_max - N + 1):
                if not math.isclose(F[n], F[n + N], rel_tol=1e-12, abs_tol=0.0):
                    raise ValueError(
                        f"table is not periodic near the cutoff: F({n}) != F({n + N})"
                    )
        elif self.period is not None:
            raise ValueError("period only applies to the periodic tail rule")

    @property
    def n_max(self) -> int:
        return len(self.f_values) - 1

    @classmethod
    def from_F(cls, F_values, tail=TailRule.HOLD, period=None) -> "LossProfile":
        """Build a profile from ladder amplitudes; ``F[0]`` is ignored."""
        F = [float(v) for v in F_values]
        f = [1.0] + [F[n] / math.sqrt(n) for n in range(1, len(F))]
        return cls(tuple(f), tail, period)

    def _table_F(self) -> np.ndarray:
        n = np.arange(len(self.f_values))
        return np.sqrt(n) * np.asarray(self.f_values)

    def f(self, n: int) -> float:
        if n <= self.n_max:
            return self.f_values[n]
        if self.tail is TailRule.TRUNCATE:
            return 0.0
        if self.tail is TailRule.HOLD:
            return self.f_values[-1]
        src = self._periodic_source(n)
        return self.f_values[src] * math.sqrt(src / n)

    def _periodic_source(self, n: int) -> int:
        N = self.period
        j = -(-(n - self.n_max) // N)
        return n - j * N

    def is_zero(self, n: int) -> bool:
        """Exact zero test of ``F(n)`` on the stored table."""
        if n == 0:
            return True
        if n <= self.n_max:
            return self.f_values[n] == 0.0
        if self.tail is TailRule.TRUNCATE:
            return True
        if self.tail is TailRule.HOLD:
            return self.f_values[-1] == 0.0
        return self.f_values[self._periodic_source(n)] == 0.0

    def F(self, dim: int) -> np.ndarray:
        """``F(n)`` for ``n = 0..dim-1`` as a read-only array."""
        return _F_array(self, dim)

    def zero_mask(self, dim: int) -> np.ndarray:
        return _zero_mask(self, dim)

    def scaled(self, c: float) -> "LossProfile":
        if c <= 0:
            raise ValueError("scale must be positive")
        return LossProfile(tuple(c * v for v in self.f_values), self.tail, self.period)


@lru_cache(maxsize=256)
def _F_array(profile: LossProfile, dim: int) -> np.ndarray:
    out = np.array([big_F(profile, n) for n in range(dim)])
    out.setflags(write=False)
    return out


@lru_cache(maxsize=256)
def _zero_mask(profile: LossProfile, dim: int) -> np.ndarray:
    out = np.array([profile.is_zero(n) for n in range(dim)], dtype=bool)
    out.setflags(write=False)
    return out


def big_F(profile: LossProfile, n: int) -> float:
    """Ladder amplitude ``F(n) = sqrt(n) f(n)``; zero at ``n = 0`` for any profile."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return 0.0
    if profile.tail is TailRule.PERIODIC and n > profile.n_max:
        src = profile._periodic_source(n)
        return math.sqrt(src) * profile.f_values[src]
    return math.sqrt(n) * profile.f(n)


def transmittance(profile: LossProfile, k: int, n: int) -> float:
    """Fraction of band-``k`` amplitude passed from rung ``n`` to ``n - 1``.

    Returns 0 when both ``F(n)`` and ``F(n+k)`` vanish.
    """
    if k < 0 or n < 0:
        raise ValueError("k and n must be non-negative")
    a = big_F(profile, n)
    b = big_F(profile, n + k)
    return transmittance_from_F(a, b)


def transmittance_from_F(a: float, b: float) -> float:
    den = a * a + b * b
    if den == 0.0:
        return 0.0
    return 2.0 * a * b / den


def coherent_weight(m, r):
    """Poisson amplitude ``r**m exp(-r**2/2) / sqrt(m!)``, evaluated in log space.

    Vectorises over ``m``.
    """
    m = np.asarray(m)
    r = float(r)
    if r < 0:
        raise ValueError("r must be non-negative")
    if np.any(m < 0):
        raise ValueError("m must be non-negative")
    if r == 0.0:
        out = np.where(m == 0, 1.0, 0.0)
    else:
        out = np.exp(m * math.log(r) - 0.5 * r * r - 0.5 * gammaln(m + 1.0))
    return float(out) if out.ndim == 0 else out


def default_n_max(alpha, k_max: int = 0) -> int:
    r = abs(alpha)
    return int(math.ceil(r * r + 10 * r + 20 + k_max))


def coherent_vector(alpha, n_max: int) -> np.ndarray:
    n = np.arange(n_max + 1)
    q = coherent_weight(n, abs(alpha))
    return q * np.exp(1j * n * np.angle(alpha))


def coherent_density_matrix(alpha, n_max: int, warn: bool = True) -> np.ndarray:
    """Truncated projector onto the coherent state ``|alpha>``.

    Not renormalised; the trace falls short of one by the tail mass, which
    triggers a ``TruncationWarning`` above ``TAIL_WARN`` unless ``warn`` is off.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    psi = coherent_vector(alpha, n_max)
    rho = np.outer(psi, psi.conj())
    tail = 1.0 - float(np.sum(np.abs(psi) ** 2))
    if warn and tail > TAIL_WARN:
        warnings.warn(
            f"coherent state truncated at n_max={n_max} loses {tail:.2e} of its norm",
            TruncationWarning,
            stacklevel=2,
        )
    return rho


def fock_density_matrix(n: int, n_max: int) -> np.ndarray:
    rho = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    rho[n, n] = 1.0
    return rho


def as_density_matrix(rho, normalized: bool = False) -> np.ndarray:
    """Validate and return ``rho`` as a square complex array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    herm = np.max(np.abs(rho - rho.conj().T)) if rho.size else 0.0
    if herm > HERMITIAN_TOL:
        raise ValueError(f"density matrix is not Hermitian (error {herm:.2e})")
    d = np.diag(rho).real
    if d.size and d.min() < -HERMITIAN_TOL:
        raise ValueError("negative diagonal entry")
    if normalized and abs(d.sum() - 1.0) > TRACE_TOL:
        raise ValueError(f"trace {d.sum():.12f} is not 1")
    return rho


@dataclass
class DiagonalBand:
    """Band ``k`` of a density matrix: ``rho[n, n+k] = scale * values[n]``."""

    offset: int
    scale: complex
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.offset < 0:
            raise ValueError("band offset must be non-negative")
        self.values = np.asarray(self.values)
        if self.values.ndim != 1 or self.values.size < 1:
            raise ValueError("band needs at least one value")

    @property
    def dim(self) -> int:
        return self.offset + self.values.size

    def elements(self) -> np.ndarray:
        return self.scale * self.values


def band_scale(k: int, alpha_phase: float) -> complex:
    # unit-modulus version of (alpha*)**k; only the phase matters for positivity
    return complex(np.exp(-1j * k * alpha_phase))


def bands_from_matrix(rho, alpha_phase: float = 0.0) -> list[DiagonalBand]:
    """Split ``rho`` into bands ``k = 0..dim-1`` along ``rho[n, n+k]``."""
    rho = as_density_matrix(rho)
    dim = rho.shape[0]
    bands = []
    for k in range(dim):
        c = band_scale(k, alpha_phase)
        xi = np.diagonal(rho, offset=k) / c
        bands.append(DiagonalBand(k, c, xi.copy()))
    return bands


def matrix_from_bands(bands) -> np.ndarray:
    dim = max(b.dim for b in bands)
    rho = np.zeros((dim, dim), dtype=complex)
    idx = np.arange(dim)
    for b in bands:
        if b.dim != dim:
            raise ValueError("bands disagree on the matrix dimension")
        n = idx[: b.values.size]
        vals = b.elements()
        rho[n, n + b.offset] = vals
        if b.offset:
            rho[n + b.offset, n] = np.conj(vals)
    return rho


def band_values(rho, alpha_phase: float = 0.0) -> list[np.ndarray]:
    """Real parts of ``xi_k(n)`` for every band, the quantities kept non-negative."""
    return [b.values.real for b in bands_from_matrix(rho, alpha_phase)]


# -- targets -----------------------------------------------------------------


@dataclass(frozen=True)
class Fock:
    n1: int

    def __post_init__(self):
        if self.n1 < 1:
            raise ValueError("Fock target needs n1 >= 1")

    @property
    def reach(self) -> int:
        return self.n1


@dataclass(frozen=True)
class Pair:
    """Target ``(|n> + exp(i phi)|m>) / sqrt(2)``."""

    n: int
    m: int
    phi: float = 0.0

    def __post_init__(self):
        if not 0 <= self.n < self.m:
            raise ValueError("Pair target needs 0 <= n < m")

    @property
    def reach(self) -> int:
        return 2 * self.m - self.n


@dataclass(frozen=True)
class Comb:
    """Coherent state ``|alpha'>`` restricted to photon numbers ``n0 (mod N)``.

    ``alpha_prime=None`` means: derive it from the input amplitude as
    ``|alpha'|**2 = |alpha|**2 - (N-1)/2``.
    """

    N: int
    n0: int
    alpha_prime: complex | None = None

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("Comb target needs N >= 2")
        if not 0 <= self.n0 < self.N:
            raise ValueError("Comb target needs 0 <= n0 < N")

    @property
    def reach(self) -> int:
        return self.n0 + 2 * self.N


TargetState = Fock | Pair | Comb


def parse_target(text: str) -> TargetState:
    """Parse ``fock:3``, ``pair:4,9`` (optionally ``pair:4,9,phi``) or ``comb:2,1``."""
    try:
        kind, _, rest = text.partition(":")
        args = [a for a in rest.split(",") if a]
        kind = kind.strip().lower()
        if kind == "fock" and len(args) == 1:
            return Fock(int(args[0]))
        if kind == "pair" and len(args) in (2, 3):
            phi = float(args[2]) if len(args) == 3 else 0.0
            return Pair(int(args[0]), int(args[1]), phi)
        if kind == "comb" and len(args) in (2, 3):
            ap = complex(args[2]) if len(args) == 3 else None
            return Comb(int(args[0]), int(args[1]), ap)
    except ValueError as exc:
        raise ValueError(f"bad target {text!r}: {exc}") from None
    raise ValueError(f"bad target {text!r}")
