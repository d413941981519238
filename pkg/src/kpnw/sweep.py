"""Regime dispatch for single solves and the resumable parameter sweep."""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .functionals import Combined, PurePower
from .io import ConfigError, RunConfig, dumps_record, read_field, read_records
from .optimize import (
    SolveOptions,
    estimate_gn_constant,
    minimize_global,
    minimize_local_ball,
    minimize_pohozaev_manifold,
    mountain_pass_upper_bound,
    nonexistence_probe,
)
from .spectral import make_grid
from .thresholds import GNConstants, threshold_report

__all__ = ["SweepRecord", "nonlinearity", "solve_one", "sweep_keys", "run_sweep", "resolve_workers",
           "ARTIFACT_VERSION", "TIMING_FIELDS"]

ARTIFACT_VERSION = f"kpnw-{__version__}"
TIMING_FIELDS = ("wall_time",)


def nonlinearity(q: float, p: float | None, mu: float | None):
    if p is None:
        return PurePower(q)
    return Combined(1.0 if mu is None else mu, q, p)


def solve_options(cfg: RunConfig) -> SolveOptions:
    init_field = read_field(cfg.field) if cfg.init == "file" else None
    return SolveOptions(max_iters=cfg.max_iters, step0=cfg.step0, pohozaev_tol=cfg.pohozaev_tol,
                        grad_tol=cfg.tol, seed=cfg.seed, init=cfg.init, init_field=init_field,
                        relax_box=cfg.relax_box, method=cfg.method)


def gn_constants(cfg: RunConfig, grid, need_p: bool) -> GNConstants:
    """Constants from the config, or estimated when ``estimate`` is set."""
    opts = SolveOptions(seed=cfg.seed)
    if cfg.cq is not None and (not need_p or cfg.cp is not None):
        return GNConstants(cfg.q, cfg.cq, cfg.p if need_p else None, cfg.cp if need_p else None)
    if not cfg.estimate:
        raise ConfigError("Gagliardo-Nirenberg constant missing: give cq (and cp) or estimate=true")
    cq = estimate_gn_constant(grid, cfg.q, opts, starts=cfg.gn_starts)
    if not need_p:
        return cq
    cp = estimate_gn_constant(grid, cfg.p, opts, starts=cfg.gn_starts)
    return GNConstants(cfg.q, cq.Cq, cfg.p, cp.Cq, "estimated", cq.observed_q, cp.observed_q,
                       cq.localized_q, cp.localized_q)


def solve_one(cfg: RunConfig):
    """Run the solver matching the nonlinearity; returns ``(record, field_or_None)``.

    Precondition failures raise ``ValueError``; configuration gaps ``ConfigError``.
    """
    if cfg.q is None or cfg.a is None:
        raise ConfigError("solve needs q and a")
    nl = nonlinearity(cfg.q, cfg.p, cfg.mu)
    grid = make_grid(cfg.grid[0], cfg.grid[1], cfg.box[0], cfg.box[1])
    opts = solve_options(cfg)
    rec: dict = {}
    if isinstance(nl, Combined):
        gn = gn_constants(cfg, grid, need_p=True)
        rep = threshold_report(gn, nl.mu, cfg.a)
        res = minimize_local_ball(grid, nl, cfg.a, rep.rho0, opts, a0=rep.a0)
        rec["gn"] = gn.to_dict()
        rec["thresholds"] = rep.to_dict()
        try:
            rec["mountain_pass_upper_bound"] = mountain_pass_upper_bound(res, nl)
        except ValueError as exc:
            rec["mountain_pass_upper_bound"] = None
            rec["mountain_pass_error"] = str(exc)
    elif nl.regime == "critical":
        gn = gn_constants(cfg, grid, need_p=False)
        probe = nonexistence_probe(grid, cfg.a, gn, opts)
        rec.update(probe.to_dict())
        rec.update(regime="critical", gn=gn.to_dict(), converged=True, status="probe")
        return rec, None
    elif nl.regime == "subcritical":
        res = minimize_global(grid, nl, cfg.a, opts)
    else:
        res = minimize_pohozaev_manifold(grid, nl, cfg.a, opts)
    rec.update(res.record())
    return rec, res.u


@dataclass(frozen=True)
class SweepRecord:
    """One sweep entry: parameters, outputs and provenance."""

    key: str
    params: dict
    outputs: dict
    provenance: dict

    def to_dict(self) -> dict:
        return {"key": self.key, "params": self.params, "outputs": self.outputs,
                "provenance": self.provenance}


def _key(q: float, p, mu, a: float, grid) -> str:
    return f"q={q!r};p={p!r};mu={mu!r};a={a!r};grid={grid[0]}x{grid[1]}"


def _sort_key(params: dict):
    return (params["q"], params["p"] or 0.0, params["mu"] or 0.0, params["a"])


def sweep_keys(cfg: RunConfig) -> list[dict]:
    """Parameter points in deterministic order."""
    qs = cfg.q_values or ([cfg.q] if cfg.q is not None else [])
    as_ = cfg.a_values or ([cfg.a] if cfg.a is not None else [])
    pts = [{"a": a, "q": q, "p": cfg.p, "mu": cfg.mu, "grid": list(cfg.grid)} for q in qs for a in as_]
    return sorted(pts, key=_sort_key)


def _task(args) -> dict:
    cfg_dict, params = args
    cfg = RunConfig()
    cfg.update({k: v for k, v in cfg_dict.items() if k not in ("grid", "box")}, "sweep")
    cfg.grid, cfg.box = tuple(cfg_dict["grid"]), tuple(cfg_dict["box"])
    cfg.a, cfg.q = params["a"], params["q"]
    t0 = time.perf_counter()
    try:
        out, _ = solve_one(cfg)
        outputs = {k: out.get(k) for k in ("energy", "lambda", "pohozaev_residual", "regime",
                                           "converged", "status", "iterations", "log_scale",
                                           "boundary_mass_fraction", "mountain_pass_upper_bound",
                                           "decay_ratio")
                   if k in out}
    except Exception as exc:  # noqa: BLE001  per-key failure is data, not a crash
        outputs = {"converged": False, "error": f"{type(exc).__name__}: {exc}"}
    outputs["wall_time"] = time.perf_counter() - t0
    key = _key(params["q"], params["p"], params["mu"], params["a"], params["grid"])
    rec = SweepRecord(key, params, outputs, {"seed": cfg.seed, "version": ARTIFACT_VERSION})
    return rec.to_dict()


def resolve_workers(flag: int | None) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("KPNW_WORKERS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"KPNW_WORKERS must be an integer, got {env!r}") from exc
        if n < 1:
            raise ConfigError("KPNW_WORKERS must be >= 1")
        return n
    return 1


def run_sweep(cfg: RunConfig, path: str | Path, workers: int = 1, limit: int | None = None) -> int:
    """Solve every missing key and leave ``path`` sorted by key.

    Records already in ``path`` are kept (resume).  ``limit`` stops after that
    many new solves, which is how interrupted runs are simulated in tests.
    Returns the number of new records.
    """
    path = Path(path)
    existing = read_records(path)
    done = {r["key"] for r in existing}
    todo = [p for p in sweep_keys(cfg)
            if _key(p["q"], p["p"], p["mu"], p["a"], p["grid"]) not in done]
    if limit is not None:
        todo = todo[:limit]
    cfg_dict = cfg.echo()
    jobs = [(cfg_dict, p) for p in todo]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_task, jobs)
            new = _write(path, existing, results)
    else:
        new = _write(path, existing, map(_task, jobs))
    return new


def _write(path: Path, existing: list[dict], results) -> int:
    """Single writer: append in key order; rewrite sorted if a resume interleaves keys."""
    order = lambda r: _sort_key(r["params"])  # noqa: E731
    last = max((order(r) for r in existing), default=None)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.touch()
    new = []
    with open(path, "a", encoding="utf-8") as fh:
        for rec in results:
            new.append(rec)
            fh.write(dumps_record(rec) + "\n")
            fh.flush()
    if last is not None and new and min(order(r) for r in new) < last:
        merged = sorted(existing + new, key=order)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text("".join(dumps_record(r) + "\n" for r in merged), encoding="utf-8")
        os.replace(tmp, path)
    return len(new)

