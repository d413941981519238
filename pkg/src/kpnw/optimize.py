"""Constrained minimization on the mass sphere ``|u|_2 = a``.

All solvers share one engine: a Sobolev-preconditioned Riemannian descent on
the sphere (exact rescaling as retraction, Armijo backtracking), coupled to a
scalar fiber parameter ``t``.  The iterate is a pair ``(v, t)``: ``v`` lives on
the reference grid and the physical field is the exact discrete scaling
``coscale(v, t)``, i.e. ``v`` on the box ``(Lx e^{-2t/3}, Ly e^{-4t/3})``.
The energy of the pair is the closed-form fiber map ``psi_v(t)``.

``t`` is chosen after every step by a fiber rule:

* ``"fixed"``   -- ``t = 0``; the box never moves.
* ``"minimum"`` -- fiber minimum (pure power, ``q < 10/3``).  At ``q = 10/3``
  the fiber is monotone and ``t`` moves by at most ``fiber_step`` downhill.
* ``"maximum"`` -- fiber maximum ``t*(v)`` (pure power, ``q > 10/3``); this is
  the reduced functional whose minimizers lie on the Pohozaev manifold.
* ``"local-minimum"`` -- first critical point ``t1`` of a combined fiber.

With a fiber rule other than ``"fixed"`` the derivative of ``psi_v`` vanishes
at the chosen ``t``, so the Pohozaev residual of the physical field is zero up
to rounding, and the box adapts to the scale of the solution.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .fiber import (
    DegenerateFiber,
    FiberMap,
    NoSecondCriticalPoint,
    apply_scaling,
    coscale,
    critical_points_combined,
    critical_t_pure,
    critical_t_pure_supercritical,
    psi,
    psi_prime,
    scale_of,
)
from .functionals import (
    CRITICAL_EXPONENT,
    Combined,
    FiberIntegrals,
    NonlinearitySpec,
    PurePower,
    fiber_integrals,
    gn_exponents,
    gn_quotient,
    lagrange_multiplier,
    relative_pohozaev_residual,
)
from .spectral import Field, Grid, boundary_mass_fraction
from .thresholds import GNConstants, critical_mass

__all__ = [
    "SolveOptions",
    "SolveResult",
    "ProbeReport",
    "BallExit",
    "initial_field",
    "minimize_global",
    "minimize_local_ball",
    "minimize_pohozaev_manifold",
    "estimate_gn_constant",
    "estimate_gn_constants",
    "nonexistence_probe",
    "mountain_pass_upper_bound",
    "monotonicity_diagnostic",
    "subadditivity_diagnostic",
    "continuity_diagnostic",
    "euler_lagrange_residual",
    "BOUNDARY_FLAG",
]

log = logging.getLogger(__name__)

BOUNDARY_FLAG = 1e-6
_EPS = np.finfo(float).eps
_INITS = ("gaussian-derivative", "lump-like", "file")


class BallExit(RuntimeError):
    """An accepted iterate left the ball ``||u||_0 < rho0``."""


@dataclass
class SolveOptions:
    max_iters: int = 5000
    step0: float = 1.0
    pohozaev_tol: float = 1e-6
    grad_tol: float = 1e-8
    seed: int = 0
    init: str = "gaussian-derivative"
    init_field: Field | None = None
    ball_radius: float | None = None
    # Relax the box along H(., t); False keeps the reference box fixed.
    relax_box: bool = True
    # "cg" (preconditioned Polak-Ribiere+) or "sd" (preconditioned steepest descent).
    method: str = "cg"
    # Gaussian width parameter of the default start, in units of a 40-wide box.
    sigma: float = 0.3
    # Relative size of the seeded symmetry-breaking perturbation of the start.
    perturbation: float = 1e-2
    # Largest move of t per iteration when the fiber has no interior extremum.
    fiber_step: float = 1.0
    armijo: float = 1e-4

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        for name in ("step0", "pohozaev_tol", "grad_tol", "sigma", "fiber_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.init not in _INITS:
            raise ValueError(f"init must be one of {_INITS}, got {self.init!r}")
        if self.init == "file" and self.init_field is None:
            raise ValueError("init='file' needs init_field")
        if self.method not in ("cg", "sd"):
            raise ValueError(f"method must be 'cg' or 'sd', got {self.method!r}")
        if self.ball_radius is not None and not self.ball_radius > 0:
            raise ValueError("ball_radius must be positive")


@dataclass
class SolveResult:
    """Outcome of a constrained solve.

    ``u`` is the physical field (on the relaxed box when the box moves);
    ``reference`` is the same samples on the input grid and ``log_scale`` the
    fiber parameter relating them.
    """

    u: Field
    lam: float
    energy: float
    pohozaev_residual: float
    mass: float
    regime: str
    iterations: int
    converged: bool
    boundary_mass_fraction: float
    status: str = "converged"
    gradient_residual: float = float("nan")
    log_scale: float = 0.0
    reference: Field | None = None
    nl: NonlinearitySpec | None = None
    a: float = float("nan")
    trace: dict = field(default_factory=dict, repr=False)

    @property
    def boundary_flag(self) -> bool:
        return self.boundary_mass_fraction > BOUNDARY_FLAG

    @property
    def seminorm_sq(self) -> float:
        return self.integrals.A

    @property
    def integrals(self) -> FiberIntegrals:
        return fiber_integrals(self.u, self.nl)

    def record(self) -> dict:
        """Scalar fields for JSON output."""
        g = self.u.grid
        return {
            "lambda": float(self.lam),
            "energy": float(self.energy),
            "pohozaev_residual": float(self.pohozaev_residual),
            "mass": float(self.mass),
            "regime": self.regime,
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "status": self.status,
            "boundary_mass_fraction": float(self.boundary_mass_fraction),
            "boundary_flag": bool(self.boundary_flag),
            "gradient_residual": float(self.gradient_residual),
            "log_scale": float(self.log_scale),
            "box": [g.Lx, g.Ly],
            "grid": [g.nx, g.ny],
        }


# ---------------------------------------------------------------------------
# initial data


def _box_unit(grid: Grid) -> float:
    return 40.0 / min(grid.Lx, grid.Ly)


def initial_field(grid: Grid, a: float, opts: SolveOptions, t0: float = 0.0) -> Field:
    """Admissible start of mass ``a``, pre-scaled analytically by ``H(., t0)``."""
    X, Y = grid.mesh()
    sx, sy = math.exp(2.0 * t0 / 3.0), math.exp(4.0 * t0 / 3.0)
    Xs, Ys = sx * X, sy * Y
    s = opts.sigma * _box_unit(grid) ** 2
    if opts.init == "gaussian-derivative":
        vals = -2.0 * s * Xs * np.exp(-s * (Xs**2 + Ys**2))
    elif opts.init == "lump-like":
        ell = 1.0 / math.sqrt(s)
        Xl, Yl = Xs / ell, Ys / ell**2
        r2 = Xl**2 + Yl**2
        vals = (3.0 - Xl**2 + Yl**2) / (3.0 + r2) ** 2
    else:
        raise ValueError("file starts are mapped by the solver, not generated")
    if opts.perturbation > 0:
        rng = np.random.default_rng(opts.seed)
        env = np.exp(-0.5 * s * (Xs**2 + Ys**2))
        poly = sum(
            rng.standard_normal() * (Xs * math.sqrt(s)) ** i * (Ys * math.sqrt(s)) ** j
            for i in range(3) for j in range(3)
        )
        pert = env * poly
        vals = vals + opts.perturbation * np.abs(vals).max() / np.abs(pert).max() * pert
    c = np.fft.rfft2(vals) * grid.admissible_mask
    v = np.fft.irfft2(c, s=grid.shape)
    v *= a / math.sqrt(np.sum(v * v) * grid.cell_area)
    return Field(grid, v)


def _start(grid: Grid, a: float, opts: SolveOptions, t0: float = 0.0) -> tuple[np.ndarray, float]:
    """Reference-grid samples and fiber parameter of the starting point."""
    if opts.init == "file":
        f = opts.init_field
        t = 0.0 if f.grid == grid else scale_of(f.grid, grid)
        v = np.fft.irfft2(np.fft.rfft2(f.values * math.exp(-t)) * grid.admissible_mask,
                          s=grid.shape)
        v *= a / math.sqrt(np.sum(v * v) * grid.cell_area)
        return v, t
    return initial_field(grid, a, opts, t0).values, 0.0


# ---------------------------------------------------------------------------
# engine


class _Infeasible(Exception):
    pass


class _Flow:
    """Descent state for one solve; single-threaded, owns its arrays."""

    def __init__(self, grid: Grid, nl: NonlinearitySpec, a: float, opts: SolveOptions,
                 rule: str, v0: np.ndarray, t0: float, ball: float | None = None):
        self.g, self.nl, self.a, self.opts, self.rule, self.ball = grid, nl, a, opts, rule, ball
        self.S = grid.seminorm_symbol
        self.P = grid.precondition_symbol
        self.M = grid.admissible_mask
        self.W = grid.parseval_weight
        self.ca = grid.cell_area
        self.v = self._retract(v0)
        self.fi = self._integrals(self.v)
        self.t = self._fiber_t(self.fi, t0)
        self.F = self._energy(self.fi, self.t)
        self.tau = opts.step0
        self.d_prev = None
        self.k = 0
        self.status = "running"
        self.hist = {"energy": [self.F], "t": [self.t], "residual": [],
                     "mass_error": [abs(self.fi.mass2 - a * a) / (a * a)],
                     "pohozaev": [self._p_rel(self.fi, self.t)]}
        self._direction()

    # -- scalar pieces

    def _retract(self, w: np.ndarray) -> np.ndarray:
        return w * (self.a / math.sqrt(np.sum(w * w) * self.ca))

    def _integrals(self, v: np.ndarray) -> FiberIntegrals:
        c = np.fft.rfft2(v)
        av = np.abs(v)
        A = float(np.sum(self.W * self.S * (c.real**2 + c.imag**2)))
        Bq = float(np.sum(av**self.nl.q) * self.ca)
        Bp = float(np.sum(av**self.nl.p) * self.ca) if isinstance(self.nl, Combined) else 0.0
        return FiberIntegrals(float(np.sum(v * v) * self.ca), A, Bq, Bp)

    def _fiber_t(self, fi: FiberIntegrals, t_prev: float) -> float:
        if self.rule == "fixed":
            return 0.0
        fm = FiberMap(fi, self.nl)
        try:
            if self.rule == "local-minimum":
                return critical_points_combined(fm)[0]
            if self.rule == "maximum":
                return critical_t_pure(fm)
            if abs(self.nl.q - CRITICAL_EXPONENT) <= 1e-12:
                slope = psi_prime(fm, t_prev)
                step = self.opts.fiber_step
                return t_prev - step if slope > 0 else (t_prev + step if slope < 0 else t_prev)
            return critical_t_pure(fm)
        except (NoSecondCriticalPoint, DegenerateFiber) as exc:
            raise _Infeasible(str(exc)) from exc

    def _energy(self, fi: FiberIntegrals, t: float) -> float:
        return psi(FiberMap(fi, self.nl), t)

    def _p_rel(self, fi: FiberIntegrals, t: float) -> float:
        return relative_pohozaev_residual(fi.scaled(t, self.nl), self.nl)

    def _scale(self, fi: FiberIntegrals, t: float) -> float:
        return max(fi.scaled(t, self.nl).A, abs(self._energy(fi, t)), 1e-300)

    # -- gradient and search direction

    def _gradient(self, v: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Gradient of ``e^{-4t/3} psi_v(t)`` in ``v`` and the transform of ``v``."""
        c = np.fft.rfft2(v)
        av = np.abs(v)
        nlv = np.zeros_like(v)
        for coef, r in self.nl.terms:
            nlv += coef * math.exp((r - 2.0 - 4.0 / 3.0) * t) * av ** (r - 2.0) * v
        gh = (self.S * c - np.fft.rfft2(nlv)) * self.M
        return np.fft.irfft2(gh, s=self.g.shape), c

    def _precond(self, w: np.ndarray) -> np.ndarray:
        return np.fft.irfft2(self.P * np.fft.rfft2(w), s=self.g.shape)

    def _residual_parts(self, v: np.ndarray, t: float):
        gr, c = self._gradient(v, t)
        pg = self._precond(gr)
        pu = np.fft.irfft2(self.P * c, s=self.g.shape)
        alpha = float(np.sum(pg * v) / np.sum(pu * v))
        R = gr - alpha * v
        rd = pg - alpha * pu
        lin = np.fft.irfft2(self.S * c, s=self.g.shape)
        norm = math.sqrt(max(float(np.sum(self._precond(lin) * lin)), 1e-300))
        rel = math.sqrt(max(float(np.sum(rd * R)), 0.0)) / norm
        return gr, R, rd, rel

    def _direction(self):
        self.gr, R, rd, self.rel = self._residual_parts(self.v, self.t)
        d = -rd
        if self.opts.method == "cg" and self.d_prev is not None:
            R_prev, rd_prev, d_prev = self.d_prev
            denom = float(np.sum(rd_prev * R_prev))
            b = max(0.0, float(np.sum(rd * (R - R_prev))) / denom) if denom > 0 else 0.0
            cand = d + b * d_prev
            cand -= (np.sum(cand * self.v) / np.sum(self.v * self.v)) * self.v
            if np.sum(cand * self.gr) < 0:
                d = cand
        self.d = d
        self.slope = -float(np.sum(d * self.gr)) * self.ca
        self._cg_state = (R, rd)

    # -- one iteration

    def converged(self) -> bool:
        return self.rel <= self.opts.grad_tol

    def pohozaev_ok(self) -> bool:
        return self._p_rel(self.fi, self.t) <= self.opts.pohozaev_tol

    def step(self) -> bool:
        """One accepted step; False when the line search fails."""
        et = math.exp(4.0 * self.t / 3.0)
        slack = 32.0 * _EPS * self._scale(self.fi, self.t)
        tau = self.tau
        restart = False
        while tau > 1e-14:
            w = self._retract(self.v + tau * self.d)
            fi_w = self._integrals(w)
            try:
                t_w = self._fiber_t(fi_w, self.t)
            except _Infeasible:
                tau *= 0.5
                continue
            F_w = self._energy(fi_w, t_w)
            ok = F_w <= self.F - self.opts.armijo * tau * et * self.slope
            if not ok and abs(F_w - self.F) <= slack:
                # Rounding regime: the energy cannot certify progress, the residual can.
                ok = self._residual_parts(w, t_w)[3] < self.rel
                restart = ok
            if ok:
                break
            tau *= 0.5
        else:
            self.status = "stalled"
            return False
        cg = self.opts.method == "cg" and not restart
        self.d_prev = (*self._cg_state, self.d) if cg else None
        self.v, self.fi, self.t, self.F = w, fi_w, t_w, F_w
        self.tau = min(2.0 * tau, 1e3)
        self.k += 1
        self.hist["energy"].append(F_w)
        self.hist["t"].append(t_w)
        self.hist["mass_error"].append(abs(fi_w.mass2 - self.a**2) / self.a**2)
        self.hist["pohozaev"].append(self._p_rel(fi_w, t_w))
        if self.k % 100 == 0:
            self.d_prev = None  # periodic CG restart
        self._direction()
        return True

    def run(self) -> None:
        while True:
            self.hist["residual"].append(self.rel)
            if self.ball is not None and math.exp(4.0 * self.t / 3.0) * self.fi.A >= self.ball**2:
                self.status = "ball-exit"
                return
            if self.converged():
                self.status = "converged" if self.pohozaev_ok() else "pohozaev-residual"
                return
            if self.k >= self.opts.max_iters:
                self.status = "max-iters"
                return
            if not self.step():
                return

    # -- output

    def result(self, regime: str, materialize: str = "coscale") -> SolveResult:
        ref = Field(self.g, self.v)
        if materialize == "coscale":
            u = coscale(ref, self.t)
        elif materialize == "apply":
            u = apply_scaling(ref, self.t)
        else:
            u = ref
        fi = self.fi.scaled(self.t, self.nl) if materialize == "coscale" else fiber_integrals(u, self.nl)
        p_res = relative_pohozaev_residual(fi, self.nl)
        converged = self.status == "converged" and p_res <= self.opts.pohozaev_tol
        return SolveResult(
            u=u,
            lam=lagrange_multiplier(fi, self.nl),
            energy=float(psi(FiberMap(fi, self.nl), 0.0)),
            pohozaev_residual=p_res,
            mass=fi.mass2,
            regime=regime,
            iterations=self.k,
            converged=converged,
            boundary_mass_fraction=boundary_mass_fraction(ref),
            status=self.status,
            gradient_residual=self.rel,
            log_scale=self.t if materialize == "coscale" else 0.0,
            reference=ref,
            nl=self.nl,
            a=self.a,
            trace=self.hist,
        )


def _check_mass(a: float):
    if not (np.isfinite(a) and a > 0):
        raise ValueError(f"mass a must be positive, got {a}")


# ---------------------------------------------------------------------------
# solvers


def minimize_global(grid: Grid, nl: PurePower, a: float, opts: SolveOptions | None = None) -> SolveResult:
    """Minimize ``J`` over the mass sphere for a subcritical pure power."""
    opts = opts or SolveOptions()
    if not isinstance(nl, PurePower) or nl.regime != "subcritical":
        raise ValueError("minimize_global needs a pure power with q < 10/3")
    _check_mass(a)
    v0, t0 = _start(grid, a, opts)
    rule = "minimum" if opts.relax_box else "fixed"
    flow = _Flow(grid, nl, a, opts, rule, v0, t0)
    flow.run()
    res = flow.result("subcritical", "coscale" if opts.relax_box else "none")
    log.info("global: a=%g energy=%.6e lambda=%.6e status=%s its=%d",
             a, res.energy, res.lam, res.status, res.iterations)
    return res


def minimize_local_ball(grid: Grid, nl: Combined, a: float, rho0: float, opts: SolveOptions | None = None,
                        *, a0: float) -> SolveResult:
    """Local minimization of ``J_mu`` in ``V(a) = S(a) & {||u||_0 < rho0}``.

    The start sits at ``||u_0||_0 < rho0 a / a0``.  An accepted iterate reaching
    ``||u||_0 >= rho0`` ends the run with status ``"ball-exit"``.
    """
    opts = opts or SolveOptions()
    if not isinstance(nl, Combined):
        raise ValueError("minimize_local_ball needs a combined nonlinearity")
    _check_mass(a)
    if not a < a0:
        raise ValueError(f"needs a < a0, got a={a}, a0={a0}")
    if not rho0 > 0:
        raise ValueError("rho0 must be positive")
    target = 0.5 * rho0 * a / a0
    if opts.relax_box:
        v0, t0 = _start(grid, a, opts)
        flow = _Flow(grid, nl, a, opts, "local-minimum", v0, t0, ball=rho0)
        start = math.sqrt(math.exp(4.0 * flow.t / 3.0) * flow.fi.A)
        if start >= rho0 * a / a0:
            # move down the fiber into the scaled-down start window first
            flow.t += 1.5 * math.log(target / start)
            flow.F = flow._energy(flow.fi, flow.t)
            flow._direction()
        flow.run()
        res = flow.result("combined", "coscale")
    else:
        v0, t0 = _start(grid, a, opts)
        A0 = fiber_integrals(Field(grid, v0), nl).A
        t_in = 1.5 * math.log(target / math.sqrt(A0))
        if opts.init != "file":
            v0 = initial_field(grid, a, opts, t0=t_in).values
        flow = _Flow(grid, nl, a, opts, "fixed", v0, 0.0, ball=rho0)
        flow.run()
        res = flow.result("combined", "none")
    log.info("local ball: a=%g energy=%.6e status=%s", a, res.energy, res.status)
    return res


def minimize_pohozaev_manifold(grid: Grid, nl: PurePower, a: float,
                               opts: SolveOptions | None = None) -> SolveResult:
    """Minimize ``u -> max_t J(H(u, t))`` over the mass sphere (``q > 10/3``).

    Every iterate is represented by its fiber maximum ``H(v, t*(v))``, which lies
    on the Pohozaev manifold by construction.
    """
    opts = opts or SolveOptions()
    if not isinstance(nl, PurePower) or nl.regime != "supercritical":
        raise ValueError("minimize_pohozaev_manifold needs a pure power with q > 10/3")
    _check_mass(a)
    v0, t0 = _start(grid, a, opts)
    flow = _Flow(grid, nl, a, opts, "maximum", v0, t0)
    flow.run()
    res = flow.result("supercritical", "coscale" if opts.relax_box else "apply")
    critical_t_pure_supercritical(FiberMap(flow.fi, nl))  # closed form vs bisection
    return res


def mountain_pass_upper_bound(base: SolveResult, nl: Combined) -> float:
    """``psi_{u_a}(t2)``: the fiber maximum through a local minimizer ``u_a``.

    An upper bound for the mountain-pass level along the fiber path; raises
    ``NoSecondCriticalPoint`` when the fiber has no interior maximum.
    """
    fm = FiberMap(fiber_integrals(base.u, nl), nl)
    _, t2 = critical_points_combined(fm)
    return float(psi(fm, t2))


def euler_lagrange_residual(u: Field, nl: NonlinearitySpec) -> float:
    """Relative dual-norm residual of ``L u - f(u) = lambda u`` with the Rayleigh ``lambda``."""
    g = u.grid
    flow = _Flow.__new__(_Flow)
    flow.g, flow.nl = g, nl
    flow.S, flow.P, flow.M = g.seminorm_symbol, g.precondition_symbol, g.admissible_mask
    return flow._residual_parts(u.values, 0.0)[3]


# ---------------------------------------------------------------------------
# Gagliardo-Nirenberg constants


def _gn_ascent(grid: Grid, q: float, u0: np.ndarray, maxiter: int) -> np.ndarray:
    """Maximize ``log W`` by L-BFGS in preconditioned spectral coordinates."""
    beta, qb = gn_exponents(q)
    S = grid.seminorm_symbol
    M = grid.admissible_mask
    Wt = grid.parseval_weight
    sq = np.sqrt(grid.precondition_symbol)
    inv = np.where(sq > 0, 1.0 / np.where(sq > 0, sq, 1.0), 0.0)
    ca = grid.cell_area
    shape = S.shape
    adj = np.full(shape, 2.0)
    adj[:, 0] = adj[:, -1] = 1.0
    adj /= grid.nx * grid.ny
    em = (1.0 - beta) * q / 2.0

    def unpack(z):
        z = z.reshape(2, *shape)
        return (z[0] + 1j * z[1]) * sq

    def fun(z):
        c = unpack(z)
        u = np.fft.irfft2(c, s=grid.shape)
        m = float(np.sum(u * u)) * ca
        A = float(np.sum(Wt * S * np.abs(c) ** 2))
        au = np.abs(u)
        B = float(np.sum(au**q)) * ca
        val = -(math.log(B) - em * math.log(m) - qb / 2.0 * math.log(A))
        gu = -(q * au ** (q - 2.0) * u * ca / B - em * 2.0 * u * ca / m)
        gc = np.fft.rfft2(gu) * adj + (qb / A) * Wt * S * c
        gc = gc * sq * M
        return val, np.concatenate([gc.real.ravel(), gc.imag.ravel()])

    c0 = np.fft.rfft2(u0) * M * inv
    z0 = np.concatenate([c0.real.ravel(), c0.imag.ravel()])
    r = _scipy_minimize(fun, z0, jac=True, method="L-BFGS-B",
                        options={"maxiter": maxiter, "gtol": 1e-12, "ftol": 1e-15})
    return np.fft.irfft2(unpack(r.x), s=grid.shape)


def _gn_start(grid: Grid, rng: np.random.Generator, i: int) -> np.ndarray:
    X, Y = grid.mesh()
    unit = _box_unit(grid) ** 2
    lo, hi = math.log(0.005 * unit), math.log(1.0 * unit)
    if i == 0:
        sx = math.exp(lo)
    elif i == 1:
        sx = 0.3 * unit
    else:
        sx = math.exp(rng.uniform(lo, hi))
    sy = sx * math.exp(rng.normal(0.0, 0.5))
    env = np.exp(-sx * X**2 - sy * Y**2)
    base = -2.0 * sx * X * env
    pert = env * sum(rng.standard_normal() * (X * math.sqrt(sx)) ** j * (Y * math.sqrt(sy)) ** k
                     for j in range(3) for k in range(3))
    return base + 0.3 * np.abs(base).max() / np.abs(pert).max() * pert


def estimate_gn_constant(grid: Grid, q: float, opts: SolveOptions | None = None, starts: int = 8,
                         headroom: float = 0.05, maxiter: int = 2000) -> GNConstants:
    """Estimate the Gagliardo-Nirenberg constant for exponent ``q`` on ``grid``.

    Maximizes ``gn_quotient`` from ``starts`` seeded random starts spanning
    localized to box-filling widths.  ``observed_q`` is the largest quotient
    found (a certified lower bound for the supremum over grid fields);
    ``Cq = (1 + headroom) * observed_q`` is the working constant.
    ``localized_q`` is the best maximizer that stays away from the box edges.
    """
    opts = opts or SolveOptions()
    if not 2.0 <= q < 6.0:
        raise ValueError(f"q must lie in [2, 6), got {q}")
    if q == 2.0:
        return GNConstants(q=2.0, Cq=1.0, provenance="estimated", observed_q=1.0)
    if starts < 1:
        raise ValueError("need at least one start")
    rng = np.random.default_rng(opts.seed)
    best = localized = 0.0
    for i in range(starts):
        u0 = _gn_start(grid, rng, i)
        u = Field(grid, _gn_ascent(grid, q, u0, maxiter))
        w = gn_quotient(u, q)
        bmf = boundary_mass_fraction(u)
        log.info("gn start %d: q=%g W=%.6g boundary fraction=%.2e", i, q, w, bmf)
        best = max(best, w)
        if bmf < 1e-2:
            localized = max(localized, w)
    return GNConstants(q=q, Cq=(1.0 + headroom) * best, provenance="estimated",
                       observed_q=best, localized_q=localized or None)


def estimate_gn_constants(grid: Grid, q: float, p: float | None = None,
                          opts: SolveOptions | None = None, **kw) -> GNConstants:
    """Estimated constants for ``q`` and optionally ``p`` in one record."""
    cq = estimate_gn_constant(grid, q, opts, **kw)
    if p is None:
        return cq
    cp = estimate_gn_constant(grid, p, opts, **kw)
    return GNConstants(q=q, Cq=cq.Cq, p=p, Cp=cp.Cq, provenance="estimated",
                       observed_q=cq.observed_q, observed_p=cp.observed_q,
                       localized_q=cq.localized_q, localized_p=cp.localized_q)


# ---------------------------------------------------------------------------
# critical exponent


@dataclass
class ProbeReport:
    a: float
    a_star: float
    C: float
    provenance: str
    relaxed: bool
    iterations: int
    initial_seminorm_sq: float
    final_seminorm_sq: float
    decay_ratio: float
    coercivity_holds: bool
    worst_coercivity_slack: float
    box_floor: float
    seminorm_trace: list = field(repr=False, default_factory=list)
    energy_trace: list = field(repr=False, default_factory=list)

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if not k.endswith("_trace")}
        d["iterations"] = int(d["iterations"])
        return d


def nonexistence_probe(grid: Grid, a: float, gn: GNConstants, opts: SolveOptions | None = None,
                       target: float = 1e-8) -> ProbeReport:
    """Run the global flow at ``q = 10/3`` with ``0 < a <= a*`` and report the decay.

    Along the trajectory ``||u||_0^2`` should decay to zero (the infimum ``0`` is
    not attained) while ``J >= (1 - (a/a*)^{4/3}) ||u||_0^2 / 2`` holds at every
    iterate.  The coercivity slack is measured relative to ``||u||_0^2``.  On a
    fixed box the decay stops at ``box_floor = (2 pi / Lx)^2 a^2``.
    """
    opts = opts or SolveOptions()
    q = CRITICAL_EXPONENT
    if abs(gn.q - q) > 1e-12:
        raise ValueError("probe needs the q = 10/3 Gagliardo-Nirenberg constant")
    if not (np.isfinite(a) and a > 0):
        raise ValueError(f"mass a must be positive, got {a}")
    a_star = critical_mass(gn.Cq)
    if a > a_star:
        raise ValueError(f"a = {a} exceeds a* = {a_star}")
    nl = PurePower(q)
    v0, t0 = _start(grid, a, opts)
    flow = _Flow(grid, nl, a, opts, "minimum" if opts.relax_box else "fixed", v0, t0)
    coef = 0.5 * (1.0 - (a / a_star) ** (4.0 / 3.0))
    semi, ener, slacks = [], [], []

    def record():
        A = math.exp(4.0 * flow.t / 3.0) * flow.fi.A
        semi.append(A)
        ener.append(flow.F)
        slacks.append((flow.F - coef * A) / A)

    record()
    while flow.k < opts.max_iters and semi[-1] > target * semi[0]:
        if not flow.step():
            break
        record()
    worst = min(slacks)
    return ProbeReport(
        a=a, a_star=a_star, C=gn.Cq, provenance=gn.provenance, relaxed=opts.relax_box,
        iterations=flow.k, initial_seminorm_sq=semi[0], final_seminorm_sq=semi[-1],
        decay_ratio=semi[-1] / semi[0], coercivity_holds=worst >= -1e-10,
        worst_coercivity_slack=worst, box_floor=(2 * math.pi / grid.Lx) ** 2 * a * a,
        seminorm_trace=semi, energy_trace=ener,
    )


# ---------------------------------------------------------------------------
# diagnostics over families of solves


def monotonicity_diagnostic(masses, energies, rel_slack: float = 1e-4) -> bool:
    """``E(a1) > (a1/a2)^2 E(a2) - eps`` for every ordered pair ``a1 < a2``."""
    pairs = sorted(zip(masses, energies))
    for i, (a1, e1) in enumerate(pairs):
        for a2, e2 in pairs[i + 1:]:
            if not e1 > (a1 / a2) ** 2 * e2 - rel_slack * abs(e2):
                return False
    return True


def subadditivity_diagnostic(m_a: float, m_b: float, m_rest: float, tol: float) -> bool:
    """``m(a) <= m(b) + m(sqrt(a^2 - b^2)) + tol``."""
    return m_a <= m_b + m_rest + tol


def continuity_diagnostic(base: float, shifted) -> bool:
    """Differences ``|m(a + delta_i) - m(a)|`` decrease along shrinking ``delta_i``."""
    diffs = [abs(s - base) for s in shifted]
    return all(d2 <= d1 for d1, d2 in zip(diffs, diffs[1:]))
