"""Closed-form mass thresholds.

Covers the critical mass for ``q = 10/3`` and, for the combined nonlinearity, the
function ``h(a, rho)`` bounding ``J_mu(u) / ||u||_0^2`` from below, its maximizer
``rho_a``, the constant ``K`` with ``max_rho h(a, rho) = 1/2 - K a^{4/3}`` and the
threshold ``a0 = (2K)^{-3/4}`` where that maximum vanishes.

The power 4/3 does not depend on ``q`` or ``p``: with ``beta = 3/2 - 3/q`` both
terms of ``h(a, rho_a)`` scale like ``a^{4/3}``.

Exponent algebra runs in 40-digit mpmath arithmetic; ``q beta_q - 2`` and
``p beta_p - q beta_q`` vanish as the exponents approach 10/3.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import mpmath as mp
import numpy as np

from .functionals import CRITICAL_EXPONENT

__all__ = [
    "GNConstants",
    "ThresholdReport",
    "beta",
    "critical_mass",
    "h",
    "g_max",
    "rho_max",
    "K_and_a0",
    "PEAK_EXPONENT",
    "monotone_window_check",
    "threshold_report",
]

_DPS = 40
PEAK_EXPONENT = 4.0 / 3.0


@dataclass(frozen=True)
class GNConstants:
    """Working Gagliardo-Nirenberg constants and where they came from.

    ``provenance`` is ``"estimated"`` or ``"user-supplied"``.  For estimates,
    ``observed_q``/``observed_p`` hold the largest quotient actually seen and
    ``localized_q``/``localized_p`` the largest among maximizers away from the box edges.
    """

    q: float
    Cq: float
    p: float | None = None
    Cp: float | None = None
    provenance: str = "user-supplied"
    observed_q: float | None = None
    observed_p: float | None = None
    localized_q: float | None = None
    localized_p: float | None = None

    def __post_init__(self):
        if not self.Cq > 0:
            raise ValueError(f"Cq must be positive, got {self.Cq}")
        if (self.p is None) != (self.Cp is None):
            raise ValueError("p and Cp must be given together")
        if self.Cp is not None and not self.Cp > 0:
            raise ValueError(f"Cp must be positive, got {self.Cp}")
        if self.provenance not in ("estimated", "user-supplied"):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    @property
    def S(self) -> float:
        """Embedding constant recovered from ``Cq = S^{q beta}``."""
        qb = self.q * beta(self.q)
        return self.Cq ** (1.0 / qb)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ThresholdReport:
    a: float | None
    a_star: float | None
    rho_a: float | None
    Kconst: float | None
    a0: float | None
    rho0: float | None
    gmax: float | None
    trichotomy: str | None
    provenance: str

    def to_dict(self) -> dict:
        return asdict(self)


def beta(q: float) -> float:
    """``3/2 - 3/q``."""
    if not 2.0 <= q <= 6.0:
        raise ValueError(f"beta defined for q in [2, 6], got {q}")
    return float(mp.mpf(3) / 2 - mp.mpf(3) / mp.mpf(q))


def critical_mass(C_tenthirds: float) -> float:
    """``a* = (3 C / 5)^{-3/4}`` for the ``q = 10/3`` constant ``C``."""
    if not C_tenthirds > 0:
        raise ValueError("the Gagliardo-Nirenberg constant must be positive")
    with mp.workdps(_DPS):
        return float((mp.mpf(3) * mp.mpf(C_tenthirds) / 5) ** (-mp.mpf(3) / 4))


def _exponents(q, p):
    bq = mp.mpf(3) / 2 - mp.mpf(3) / q
    bp = mp.mpf(3) / 2 - mp.mpf(3) / p
    return bq, bp, q * bq - 2, p * bp - 2


def _check_combined(gn: GNConstants, mu: float):
    if gn.p is None:
        raise ValueError("combined thresholds need both Cq and Cp")
    if not 2.0 < gn.q < CRITICAL_EXPONENT < gn.p < 6.0:
        raise ValueError(f"needs 2 < q < 10/3 < p < 6, got q={gn.q}, p={gn.p}")
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")


def _h_mp(a, rho, gn: GNConstants, mu):
    q, p, Cq, Cp, mu = (mp.mpf(x) for x in (gn.q, gn.p, gn.Cq, gn.Cp, mu))
    bq, bp, eq, ep = _exponents(q, p)
    a, rho = mp.mpf(a), mp.mpf(rho)
    return (
        mp.mpf(1) / 2
        - mu / q * Cq * rho**eq * a ** ((1 - bq) * q)
        - Cp / p * rho**ep * a ** ((1 - bp) * p)
    )


def h(a: float, rho: float, gn: GNConstants, mu: float) -> float:
    """Lower-bound profile ``h(a, rho)``; ``g_a(rho)`` is ``h(a, .)``."""
    _check_combined(gn, mu)
    if not (a > 0 and rho > 0):
        raise ValueError("h needs a > 0 and rho > 0")
    with mp.workdps(_DPS):
        return float(_h_mp(a, rho, gn, mu))


def _base_mp(gn: GNConstants, mu):
    q, p, Cq, Cp, mu = (mp.mpf(x) for x in (gn.q, gn.p, gn.Cq, gn.Cp, mu))
    _, _, eq, ep = _exponents(q, p)
    return -(eq / ep) * (p * mu / q) * (Cq / Cp)


def rho_max(a: float, gn: GNConstants, mu: float) -> float:
    """Unique maximizer ``rho_a`` of ``g_a``."""
    _check_combined(gn, mu)
    if not a > 0:
        raise ValueError("a must be positive")
    with mp.workdps(_DPS):
        q, p = mp.mpf(gn.q), mp.mpf(gn.p)
        bq, bp, eq, ep = _exponents(q, p)
        span = p * bp - q * bq
        base = _base_mp(gn, mu)
        return float(base ** (1 / span) * mp.mpf(a) ** (((1 - bq) * q - (1 - bp) * p) / span))


def K_and_a0(gn: GNConstants, mu: float) -> tuple[float, float]:
    """``(K, a0)`` with ``max_rho g_a = 1/2 - K a^{4/3}`` and ``a0 = (2K)^{-3/4}``."""
    _check_combined(gn, mu)
    with mp.workdps(_DPS):
        q, p, Cq, Cp, m = (mp.mpf(x) for x in (gn.q, gn.p, gn.Cq, gn.Cp, mu))
        bq, bp, eq, ep = _exponents(q, p)
        span = p * bp - q * bq
        base = _base_mp(gn, mu)
        K = m / q * Cq * base ** (eq / span) + Cp / p * base ** (ep / span)
        return float(K), float((2 * K) ** (-mp.mpf(3) / 4))


def g_max(a: float, gn: GNConstants, mu: float) -> float:
    """``max_rho g_a(rho) = 1/2 - K a^{4/3}``."""
    K, _ = K_and_a0(gn, mu)
    with mp.workdps(_DPS):
        return float(mp.mpf(1) / 2 - mp.mpf(K) * mp.mpf(a) ** (mp.mpf(4) / 3))


def monotone_window_check(a1: float, rho1: float, a2: float, gn: GNConstants, mu: float,
                          n: int = 1000) -> bool:
    """Whether ``h(a2, .) >= 0`` on ``[(a2/a1) rho1, rho1]`` (sampled at ``n`` points).

    Requires ``h(a1, rho1) >= 0`` and ``0 < a2 <= a1``.
    """
    if not 0 < a2 <= a1:
        raise ValueError("needs 0 < a2 <= a1")
    if h(a1, rho1, gn, mu) < 0:
        raise ValueError("precondition h(a1, rho1) >= 0 violated")
    rhos = np.linspace(a2 / a1 * rho1, rho1, n)
    return all(h(a2, r, gn, mu) >= -1e-12 for r in rhos)


def threshold_report(gn: GNConstants | None = None, mu: float | None = None,
                     a: float | None = None, C_tenthirds: float | None = None,
                     provenance: str | None = None) -> ThresholdReport:
    """Collect every threshold computable from the supplied constants."""
    a_star = critical_mass(C_tenthirds) if C_tenthirds is not None else None
    K = a0 = rho0 = rho_a = gm = None
    tri = None
    if gn is not None and gn.p is not None and mu is not None:
        K, a0 = K_and_a0(gn, mu)
        rho0 = rho_max(a0, gn, mu)
        if a is not None:
            rho_a = rho_max(a, gn, mu)
            gm = g_max(a, gn, mu)
            # sign of 1/2 - K a^{4/3} decided exactly through a versus a0
            tri = "positive" if a < a0 else ("zero" if a == a0 else "negative")
    prov = provenance or (gn.provenance if gn is not None else "user-supplied")
    return ThresholdReport(a, a_star, rho_a, K, a0, rho0, gm, tri, prov)
