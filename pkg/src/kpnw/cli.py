"""Command-line entry point: ``kpnw <command> [flags]``.

Exit codes: 0 success, 1 check/fiber failure, 2 configuration or input error,
3 solver did not converge (the record is still written).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .fiber import (
    DegenerateFiber,
    FiberMap,
    NoSecondCriticalPoint,
    critical_points_combined,
    critical_t_pure,
    psi,
    psi_prime,
)
from .functionals import (
    Combined,
    fiber_integrals,
    lagrange_multiplier,
    relative_pohozaev_residual,
    weak_form_residual,
)
from .io import ConfigError, FieldFileError, append_record, dumps_record, load_config, read_field, write_field
from .optimize import SolveOptions, estimate_gn_constant, euler_lagrange_residual
from .spectral import make_grid
from .sweep import ARTIFACT_VERSION, gn_constants, nonlinearity, resolve_workers, run_sweep, solve_one
from .thresholds import threshold_report

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NOCONV = 0, 1, 2, 3
COMMANDS = ("solve", "thresholds", "fiber", "sweep", "check", "gn-estimate")

log = logging.getLogger("kpnw")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kpnw", description="Normalized KP ground states on a periodic box.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="key=value configuration file")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--grid", help="NXxNY")
    ap.add_argument("--box", help="LXxLY")
    ap.add_argument("--a", type=float)
    ap.add_argument("--q", type=float)
    ap.add_argument("--p", type=float)
    ap.add_argument("--mu", type=float)
    ap.add_argument("--cq", type=float, help="Gagliardo-Nirenberg constant for q")
    ap.add_argument("--cp", type=float, help="Gagliardo-Nirenberg constant for p")
    ap.add_argument("--c-crit", dest="c_crit", type=float, help="constant for q = 10/3")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--estimate", action="store_const", const=True, default=None)
    ap.add_argument("--max-iters", dest="max_iters", type=int)
    ap.add_argument("--tol", type=float)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--field", help="FieldFile input (fiber, check, init=file)")
    ap.add_argument("--a-values", dest="a_values", help="sweep masses: list 'a,b,c' or 'lo:hi:n'")
    ap.add_argument("--q-values", dest="q_values", help="sweep exponents")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _print(obj) -> None:
    print(dumps_record(obj))


def _outdir(cfg) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(cfg) -> int:
    t0 = time.perf_counter()
    rec, u = solve_one(cfg)
    out = _outdir(cfg)
    rec["wall_time"] = time.perf_counter() - t0
    rec["config"] = cfg.echo()
    rec["version"] = ARTIFACT_VERSION
    if u is not None:
        path = out / "solution.kpnw"
        write_field(path, u)
        rec["field_file"] = str(path)
    append_record(out / "solve.jsonl", rec)
    _print({k: rec[k] for k in ("regime", "energy", "lambda", "converged", "status") if k in rec})
    return EXIT_OK if rec.get("converged") else EXIT_NOCONV


def cmd_thresholds(cfg) -> int:
    grid = make_grid(cfg.grid[0], cfg.grid[1], cfg.box[0], cfg.box[1])
    gn = None
    c_crit = cfg.c_crit
    prov = None
    if cfg.q is not None and abs(cfg.q - 10.0 / 3.0) <= 1e-12 and cfg.p is None:
        if c_crit is None:
            c_crit = cfg.cq
        if c_crit is None:
            if not cfg.estimate:
                raise ConfigError("missing the q = 10/3 constant: give cq or use --estimate")
            est = estimate_gn_constant(grid, cfg.q, SolveOptions(seed=cfg.seed), starts=cfg.gn_starts)
            c_crit, prov = est.Cq, est.provenance
        else:
            prov = "user-supplied"
    elif cfg.q is not None and cfg.p is not None:
        gn = gn_constants(cfg, grid, need_p=True)
    else:
        raise ConfigError("thresholds needs q=10/3 or a combined (q, p) pair")
    rep = threshold_report(gn, cfg.mu if cfg.mu is not None else 1.0, cfg.a, c_crit, prov)
    out = rep.to_dict()
    if gn is not None:
        out["gn"] = gn.to_dict()
    _print(out)
    return EXIT_OK


def _field_or_fail(cfg):
    if not cfg.field:
        raise ConfigError("this command needs --field")
    return read_field(cfg.field)


def cmd_fiber(cfg) -> int:
    u = _field_or_fail(cfg)
    if cfg.q is None:
        raise ConfigError("fiber needs q")
    nl = nonlinearity(cfg.q, cfg.p, cfg.mu)
    fi = fiber_integrals(u, nl)
    if fi.mass2 == 0.0 or fi.A == 0.0:
        _print({"error": "zero field has no fiber"})
        return EXIT_CHECK
    fm = FiberMap(fi, nl)
    ts = np.linspace(-5.0, 5.0, 41)
    rep = {"integrals": fi.__dict__, "t": ts.tolist(), "psi": psi(fm, ts).tolist(),
           "regime": nl.regime}
    try:
        if isinstance(nl, Combined):
            t1, t2 = critical_points_combined(fm)
            rep.update(t1=t1, t2=t2, psi_t1=psi(fm, t1), psi_t2=psi(fm, t2))
        elif nl.regime == "critical":
            rep.update(monotone=True, slope_sign=float(np.sign(psi_prime(fm, 0.0))))
        else:
            t = critical_t_pure(fm)
            kind = "minimum" if nl.regime == "subcritical" else "maximum"
            rep.update(t_star=t, psi_t_star=psi(fm, t), kind=kind)
    except (NoSecondCriticalPoint, DegenerateFiber) as exc:
        rep["error"] = f"{type(exc).__name__}: {exc}"
        _print(rep)
        return EXIT_CHECK
    _print(rep)
    return EXIT_OK


def cmd_check(cfg) -> int:
    u = _field_or_fail(cfg)
    if cfg.q is None:
        raise ConfigError("check needs q")
    nl = nonlinearity(cfg.q, cfg.p, cfg.mu)
    fi = fiber_integrals(u, nl)
    if fi.mass2 == 0.0:
        _print({"error": "zero field"})
        return EXIT_CHECK
    lam = lagrange_multiplier(fi, nl)
    rep = {
        "mass": fi.mass2,
        "lambda": lam,
        "weak_form_residual": weak_form_residual(fi, nl, lam),
        "pohozaev_residual": relative_pohozaev_residual(fi, nl),
        "euler_lagrange_residual": euler_lagrange_residual(u, nl),
        "pohozaev_tol": cfg.pohozaev_tol,
        "gradient_tol": 100 * cfg.tol,
    }
    ok = (rep["pohozaev_residual"] <= cfg.pohozaev_tol
          and rep["euler_lagrange_residual"] <= 100 * cfg.tol
          and rep["weak_form_residual"] <= 1e-10)
    rep["ok"] = ok
    _print(rep)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_sweep(cfg) -> int:
    workers = resolve_workers(cfg.workers)
    out = _outdir(cfg)
    n = run_sweep(cfg, out / "sweep.jsonl", workers=workers)
    _print({"new_records": n, "file": str(out / "sweep.jsonl")})
    return EXIT_OK


def cmd_gn_estimate(cfg) -> int:
    if cfg.q is None:
        raise ConfigError("gn-estimate needs q")
    grid = make_grid(cfg.grid[0], cfg.grid[1], cfg.box[0], cfg.box[1])
    opts = SolveOptions(seed=cfg.seed)
    est = estimate_gn_constant(grid, cfg.q, opts, starts=cfg.gn_starts)
    rec = est.to_dict()
    if cfg.p is not None:
        rec["p_estimate"] = estimate_gn_constant(grid, cfg.p, opts, starts=cfg.gn_starts).to_dict()
    _print(rec)
    return EXIT_OK


_DISPATCH = {
    "solve": cmd_solve,
    "thresholds": cmd_thresholds,
    "fiber": cmd_fiber,
    "sweep": cmd_sweep,
    "check": cmd_check,
    "gn-estimate": cmd_gn_estimate,
}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    try:
        cfg = load_config(args.config, flags)
        return _DISPATCH[args.command](cfg)
    except (ConfigError, FieldFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # solver preconditions (e.g. a >= a0, wrong regime) are input errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
