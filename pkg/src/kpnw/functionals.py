"""Energies, Pohozaev functionals and related scalars for the generalized KP problem.

Every quantity here is a closed form in four integrals of the field:
the mass ``|u|_2^2``, the kinetic seminorm ``||u||_0^2`` and the power
integrals ``|u|_q^q``, ``|u|_p^p``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .spectral import Field, lp_norm_p, x_seminorm_sq

__all__ = [
    "CRITICAL_EXPONENT",
    "PurePower",
    "Combined",
    "NonlinearitySpec",
    "FiberIntegrals",
    "fiber_integrals",
    "energy",
    "pohozaev",
    "lagrange_multiplier",
    "gn_quotient",
    "gn_exponents",
    "l2_gradient",
    "nonlinearity_values",
    "weak_form_residual",
    "relative_pohozaev_residual",
    "regime_of",
]

CRITICAL_EXPONENT = 10.0 / 3.0
_CRIT_ATOL = 1e-12


def _regime(q: float) -> str:
    if abs(q - CRITICAL_EXPONENT) <= _CRIT_ATOL:
        return "critical"
    return "subcritical" if q < CRITICAL_EXPONENT else "supercritical"


@dataclass(frozen=True)
class PurePower:
    """``f(t) = |t|^{q-2} t`` with ``2 < q < 6``."""

    q: float

    def __post_init__(self):
        if not 2.0 < self.q < 6.0:
            raise ValueError(f"pure power needs 2 < q < 6, got q={self.q}")

    @property
    def regime(self) -> str:
        return _regime(self.q)

    @property
    def terms(self) -> tuple[tuple[float, float], ...]:
        """``(coefficient, exponent)`` pairs of ``f``."""
        return ((1.0, self.q),)

    @property
    def p(self) -> float | None:
        return None


@dataclass(frozen=True)
class Combined:
    """``f(t) = mu |t|^{q-2} t + |t|^{p-2} t`` with ``2 < q < 10/3 < p < 6``."""

    mu: float
    q: float
    p: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not 2.0 < self.q < CRITICAL_EXPONENT < self.p < 6.0:
            raise ValueError(
                f"combined nonlinearity needs 2 < q < 10/3 < p < 6, got q={self.q}, p={self.p}"
            )

    @property
    def regime(self) -> str:
        return "combined"

    @property
    def terms(self) -> tuple[tuple[float, float], ...]:
        return ((self.mu, self.q), (1.0, self.p))


NonlinearitySpec = Union[PurePower, Combined]


def regime_of(nl: NonlinearitySpec) -> str:
    return nl.regime


@dataclass(frozen=True)
class FiberIntegrals:
    """``mass2 = |u|_2^2``, ``A = ||u||_0^2``, ``Bq = |u|_q^q``, ``Bp = |u|_p^p``."""

    mass2: float
    A: float
    Bq: float
    Bp: float = 0.0

    def __post_init__(self):
        for name in ("mass2", "A", "Bq", "Bp"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")

    def powers(self, nl: NonlinearitySpec) -> tuple[float, ...]:
        return (self.Bq,) if isinstance(nl, PurePower) else (self.Bq, self.Bp)

    def scaled(self, t: float, nl: NonlinearitySpec) -> "FiberIntegrals":
        """Integrals of ``H(u, t)``: mass kept, ``A e^{4t/3}``, ``B_r e^{(r-2)t}``."""
        Bp = self.Bp * np.exp((nl.p - 2.0) * t) if isinstance(nl, Combined) else 0.0
        return FiberIntegrals(
            self.mass2,
            self.A * np.exp(4.0 * t / 3.0),
            self.Bq * np.exp((nl.q - 2.0) * t),
            Bp,
        )

    def amplitude_scaled(self, c: float, nl: NonlinearitySpec) -> "FiberIntegrals":
        """Integrals of ``c u``."""
        c = abs(c)
        Bp = self.Bp * c**nl.p if isinstance(nl, Combined) else 0.0
        return FiberIntegrals(self.mass2 * c * c, self.A * c * c, self.Bq * c**nl.q, Bp)


def fiber_integrals(u: Field, nl: NonlinearitySpec) -> FiberIntegrals:
    Bp = lp_norm_p(u, nl.p) if isinstance(nl, Combined) else 0.0
    return FiberIntegrals(lp_norm_p(u, 2), x_seminorm_sq(u), lp_norm_p(u, nl.q), Bp)


def _as_integrals(u, nl) -> FiberIntegrals:
    return u if isinstance(u, FiberIntegrals) else fiber_integrals(u, nl)


def energy(u: Field | FiberIntegrals, nl: NonlinearitySpec) -> float:
    """``J(u) = ||u||_0^2 / 2 - sum_r (c_r / r) |u|_r^r``."""
    fi = _as_integrals(u, nl)
    val = 0.5 * fi.A
    for (c, r), B in zip(nl.terms, fi.powers(nl)):
        val -= c / r * B
    return float(val)


def pohozaev(u: Field | FiberIntegrals, nl: NonlinearitySpec) -> float:
    """Derivative of the fiber map at ``t = 0``.

    ``(2/3)||u||_0^2 - sum_r c_r (r-2)/r |u|_r^r``; the same 2/3 weight is
    used for the combined nonlinearity.
    """
    fi = _as_integrals(u, nl)
    val = 2.0 / 3.0 * fi.A
    for (c, r), B in zip(nl.terms, fi.powers(nl)):
        val -= c * (r - 2.0) / r * B
    return float(val)


def relative_pohozaev_residual(u: Field | FiberIntegrals, nl: NonlinearitySpec) -> float:
    """``|P(u)| / max(A, Bq, Bp)``."""
    fi = _as_integrals(u, nl)
    scale = max(fi.A, fi.Bq, fi.Bp)
    if scale == 0.0:
        return 0.0
    return abs(pohozaev(fi, nl)) / scale


def lagrange_multiplier(u: Field | FiberIntegrals, nl: NonlinearitySpec) -> float:
    """``lambda = (||u||_0^2 - int f(u) u) / |u|_2^2``."""
    fi = _as_integrals(u, nl)
    if fi.mass2 == 0.0:
        raise ValueError("Lagrange multiplier undefined for the zero field")
    num = fi.A
    for (c, _), B in zip(nl.terms, fi.powers(nl)):
        num -= c * B
    return float(num / fi.mass2)


def weak_form_residual(u: Field | FiberIntegrals, nl: NonlinearitySpec, lam: float) -> float:
    """Relative residual of ``||u||_0^2 - lam |u|_2^2 - int f(u) u = 0``."""
    fi = _as_integrals(u, nl)
    fu = sum(c * B for (c, _), B in zip(nl.terms, fi.powers(nl)))
    res = fi.A - lam * fi.mass2 - fu
    scale = max(fi.A, abs(lam) * fi.mass2, fu)
    return abs(res) / scale if scale > 0 else 0.0


def gn_exponents(q: float) -> tuple[float, float]:
    """``(beta, q*beta)`` for the Gagliardo-Nirenberg inequality."""
    b = 1.5 - 3.0 / q
    return b, q * b


def gn_quotient(u: Field | FiberIntegrals, q: float) -> float:
    """``|u|_q^q / (|u|_2^{(1-beta) q} ||u||_0^{q beta})``."""
    if not 2.0 <= q <= 6.0:
        raise ValueError(f"q must lie in [2, 6], got {q}")
    if isinstance(u, FiberIntegrals):
        if u.mass2 == 0.0:
            raise ValueError("GN quotient undefined for the zero field")
        mass2, A, Bq = u.mass2, u.A, u.Bq
    else:
        mass2 = lp_norm_p(u, 2)
        if mass2 == 0.0:
            raise ValueError("GN quotient undefined for the zero field")
        A = x_seminorm_sq(u)
        Bq = mass2 if q == 2 else lp_norm_p(u, q)
    beta, qb = gn_exponents(q)
    if qb == 0.0:
        return float(Bq / mass2)
    return float(Bq / (mass2 ** ((1.0 - beta) * q / 2.0) * A ** (qb / 2.0)))


def nonlinearity_values(v: np.ndarray, nl: NonlinearitySpec, weights=None) -> np.ndarray:
    """Pointwise ``sum_r w_r c_r |v|^{r-2} v``; ``weights`` defaults to ones."""
    av = np.abs(v)
    out = np.zeros_like(v)
    for i, (c, r) in enumerate(nl.terms):
        w = 1.0 if weights is None else weights[i]
        out += (w * c) * av ** (r - 2.0) * v
    return out


def l2_gradient(u: Field, nl: NonlinearitySpec, dealias: bool = False) -> Field:
    """L^2 gradient of ``J``: symbol part minus ``f(u)``, projected admissible.

    ``dealias`` applies the 2/3 rule to the transform of ``f(u)``; the result is
    then no longer the exact gradient of the discrete energy.
    """
    g = u.grid
    c = np.fft.rfft2(u.values)
    fh = np.fft.rfft2(nonlinearity_values(u.values, nl))
    if dealias:
        kx = np.abs(np.fft.rfftfreq(g.nx) * g.nx)[None, :]
        ky = np.abs(np.fft.fftfreq(g.ny) * g.ny)[:, None]
        fh = fh * ((kx < g.nx / 3.0) & (ky < g.ny / 3.0))
    grad = (g.seminorm_symbol * c - fh) * g.admissible_mask
    return Field(g, np.fft.irfft2(grad, s=g.shape))
