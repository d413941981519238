"""Fiber maps along the mass-preserving scaling ``H(u, t)``.

``H(u, t)(x, y) = e^t u(e^{2t/3} x, e^{4t/3} y)`` keeps the mass and multiplies
``||u||_0^2`` by ``e^{4t/3}`` and ``|u|_r^r`` by ``e^{(r-2)t}``, so the energy along
the fiber is a closed form in the fiber integrals.  All root finding is done on
those closed forms; grid fields are only materialized for cross-checks.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .functionals import (
    CRITICAL_EXPONENT,
    Combined,
    FiberIntegrals,
    NonlinearitySpec,
    PurePower,
    fiber_integrals,
)
from .spectral import Field, Grid, evaluate_stretched, lp_norm_p, project_admissible

__all__ = [
    "FiberMap",
    "DegenerateFiber",
    "NoSecondCriticalPoint",
    "fiber_map",
    "psi",
    "psi_prime",
    "psi_second",
    "critical_t_pure",
    "critical_t_pure_supercritical",
    "critical_points_combined",
    "apply_scaling",
    "coscale",
    "scale_of",
    "bisect",
    "SCAN_RANGE",
    "SCAN_STEP",
]

SCAN_RANGE = (-40.0, 40.0)
SCAN_STEP = 0.25
T_FLAG = 40.0


class DegenerateFiber(ValueError):
    """The fiber has no isolated critical point (zero integrals or a double root)."""


class NoSecondCriticalPoint(ValueError):
    """``psi'`` has no sign change: the combined fiber is monotone decreasing."""


@dataclass(frozen=True)
class FiberMap:
    fi: FiberIntegrals
    nl: NonlinearitySpec

    def __post_init__(self):
        if isinstance(self.nl, PurePower) and self.fi.Bp != 0.0:
            raise ValueError("pure-power fiber must have Bp = 0")

    def _terms(self):
        return zip(self.nl.terms, self.fi.powers(self.nl))


def fiber_map(u: Field, nl: NonlinearitySpec) -> FiberMap:
    return FiberMap(fiber_integrals(u, nl), nl)


def psi(fm: FiberMap, t):
    """Energy of ``H(u, t)``; vectorized over ``t``."""
    t = np.asarray(t, dtype=float)
    val = 0.5 * np.exp(4.0 * t / 3.0) * fm.fi.A
    for (c, r), B in fm._terms():
        val = val - c / r * np.exp((r - 2.0) * t) * B
    return val if val.ndim else float(val)


def psi_prime(fm: FiberMap, t):
    """``d psi / dt``, equal to the Pohozaev functional of ``H(u, t)``."""
    t = np.asarray(t, dtype=float)
    val = 2.0 / 3.0 * np.exp(4.0 * t / 3.0) * fm.fi.A
    for (c, r), B in fm._terms():
        val = val - c * (r - 2.0) / r * np.exp((r - 2.0) * t) * B
    return val if val.ndim else float(val)


def psi_second(fm: FiberMap, t):
    t = np.asarray(t, dtype=float)
    val = 8.0 / 9.0 * np.exp(4.0 * t / 3.0) * fm.fi.A
    for (c, r), B in fm._terms():
        val = val - c * (r - 2.0) ** 2 / r * np.exp((r - 2.0) * t) * B
    return val if val.ndim else float(val)


def bisect(f, lo: float, hi: float, xtol: float = 1e-14, maxiter: int = 200) -> float:
    """Bisection on a bracketing interval ``f(lo) * f(hi) <= 0``."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ValueError("interval does not bracket a root")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0 or hi - lo <= xtol * max(1.0, abs(mid)):
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def critical_t_pure(fm: FiberMap) -> float:
    """The unique zero of ``psi'`` for a pure power ``q != 10/3``.

    A minimum of the fiber when ``q < 10/3``, a maximum when ``q > 10/3``.
    """
    if not isinstance(fm.nl, PurePower):
        raise TypeError("closed form only for pure powers")
    q = fm.nl.q
    A, B = fm.fi.A, fm.fi.Bq
    if A <= 0.0 or B <= 0.0:
        raise DegenerateFiber("fiber needs A > 0 and Bq > 0")
    gap = q - CRITICAL_EXPONENT
    if abs(gap) < 1e-8:
        raise DegenerateFiber(f"q = {q} is too close to the critical exponent 10/3")
    t = (math.log(2.0 * q * A) - math.log(3.0 * (q - 2.0) * B)) / gap
    if not np.isfinite(t):
        raise DegenerateFiber("critical point overflows")
    return t


def critical_t_pure_supercritical(fm: FiberMap, verify: bool = True) -> float:
    """Location ``t*`` of the unique maximum of a supercritical pure-power fiber.

    The closed form is cross-checked by a bracketing bisection when ``verify``.
    """
    if not isinstance(fm.nl, PurePower) or fm.nl.q <= CRITICAL_EXPONENT:
        raise ValueError("needs a pure power with q > 10/3")
    t = critical_t_pure(fm)
    if abs(t) > T_FLAG:
        warnings.warn(f"fiber maximum at |t*| = {abs(t):.3g} is far from the input scale",
                      RuntimeWarning, stacklevel=2)
    if verify:
        h = max(1.0, 0.01 * abs(t))
        tb = bisect(lambda s: psi_prime(fm, s), t - h, t + h)
        if abs(tb - t) > 1e-8 * max(1.0, abs(t)):
            raise DegenerateFiber(f"closed form t*={t} disagrees with bisection {tb}")
    return t


def critical_points_combined(
    fm: FiberMap,
    t_range: tuple[float, float] = SCAN_RANGE,
    step: float = SCAN_STEP,
) -> tuple[float, float]:
    """``(t1, t2)``: local minimum then local maximum of a combined fiber.

    Located by a scan of ``psi'`` sign changes on ``t_range`` followed by
    bisection.  ``NoSecondCriticalPoint`` if ``psi'`` never changes sign;
    ``DegenerateFiber`` for a double root.
    """
    if not isinstance(fm.nl, Combined):
        raise TypeError("needs a combined nonlinearity")
    A = fm.fi.A
    if A <= 0.0 or fm.fi.Bq <= 0.0 or fm.fi.Bp <= 0.0:
        raise DegenerateFiber("fiber needs A, Bq, Bp > 0")
    ts = np.arange(t_range[0], t_range[1] + 0.5 * step, step)
    d = psi_prime(fm, ts)
    s = np.sign(d)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    if idx.size == 0:
        # A touching maximum of psi' near zero is a double root, not "no root".
        # compare psi' to its kinetic part so the t -> -inf tail does not win
        rel = lambda x: psi_prime(fm, x) / (2.0 / 3.0 * np.exp(4.0 * x / 3.0) * A)  # noqa: E731
        peak = int(np.argmax(rel(ts)))
        lo, hi = ts[max(peak - 1, 0)], ts[min(peak + 1, ts.size - 1)]
        tm = _golden_max(rel, lo, hi)
        if abs(rel(tm)) <= 1e-10:
            raise DegenerateFiber(f"double critical point at t = {tm:.6g}")
        raise NoSecondCriticalPoint("psi' < 0 on the whole scan range")
    if idx.size != 2:
        raise DegenerateFiber(f"expected two sign changes of psi', found {idx.size}")
    f = lambda x: psi_prime(fm, x)  # noqa: E731
    t1 = bisect(f, ts[idx[0]], ts[idx[0] + 1])
    t2 = bisect(f, ts[idx[1]], ts[idx[1] + 1])
    return t1, t2


def _golden_max(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - gr * (b - a), a + gr * (b - a)
    while b - a > tol * max(1.0, abs(a)):
        if f(c) > f(d):
            b = d
        else:
            a = c
        c, d = b - gr * (b - a), a + gr * (b - a)
    return 0.5 * (a + b)


def apply_scaling(u: Field, t: float, rtol: float = 1e-6) -> Field:
    """Materialize ``H(u, t)`` on ``u.grid`` by trigonometric evaluation.

    Warns when the result lost mass beyond ``rtol``, i.e. when the box no longer
    resolves or contains the rescaled field.
    """
    if t == 0.0:
        return u
    sx, sy = math.exp(2.0 * t / 3.0), math.exp(4.0 * t / 3.0)
    out = project_admissible(Field(u.grid, math.exp(t) * evaluate_stretched(u, sx, sy)))
    m0, m1 = lp_norm_p(u, 2), lp_norm_p(out, 2)
    if m0 > 0 and abs(m1 - m0) > rtol * m0:
        warnings.warn(
            f"H(u, {t:g}) lost resolution on the grid: mass changed by {abs(m1 - m0) / m0:.2e}",
            RuntimeWarning,
            stacklevel=2,
        )
    return out


def coscale(u: Field, t: float) -> Field:
    """Exact discrete ``H(u, t)``: same samples times ``e^t`` on a box rescaled
    to ``(Lx e^{-2t/3}, Ly e^{-4t/3})``.

    The four fiber integrals of the result equal the closed-form scalings to
    rounding error.
    """
    g = u.grid
    box = Grid(g.nx, g.ny, g.Lx * math.exp(-2.0 * t / 3.0), g.Ly * math.exp(-4.0 * t / 3.0))
    return Field(box, math.exp(t) * u.values)


def scale_of(grid: Grid, reference: Grid) -> float:
    """Fiber parameter ``t`` with ``grid == coscale(reference, t).grid``.

    Raises if ``grid`` is not on the scaling orbit of ``reference``.
    """
    if (grid.nx, grid.ny) != (reference.nx, reference.ny):
        raise ValueError("grids differ in resolution")
    tx = -1.5 * math.log(grid.Lx / reference.Lx)
    ty = -0.75 * math.log(grid.Ly / reference.Ly)
    if abs(tx - ty) > 1e-9 * max(1.0, abs(tx)):
        raise ValueError("grid is not a rescaling of the reference box along H")
    return 0.5 * (tx + ty)
