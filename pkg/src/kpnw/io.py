"""Field files, key=value configuration and JSON-lines records."""

from __future__ import annotations

import dataclasses
import json
import math
import struct
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .spectral import Field, Grid, is_admissible

__all__ = [
    "FieldFileError",
    "ConfigError",
    "MAGIC",
    "FORMAT_VERSION",
    "write_field",
    "read_field",
    "encode_field",
    "decode_field",
    "RunConfig",
    "parse_config_text",
    "load_config",
    "append_record",
    "read_records",
    "dumps_record",
]

MAGIC = b"KPNW"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHIIdd")


class FieldFileError(ValueError):
    """Malformed or inadmissible field file."""


class ConfigError(ValueError):
    """Invalid configuration; reported before any computation starts."""


# ---------------------------------------------------------------------------
# FieldFile


def encode_field(u: Field) -> bytes:
    g = u.grid
    head = _HEADER.pack(MAGIC, FORMAT_VERSION, g.nx, g.ny, g.Lx, g.Ly)
    return head + np.ascontiguousarray(u.values, dtype="<f8").tobytes()


def decode_field(data: bytes, check_admissible: bool = True) -> Field:
    if len(data) < _HEADER.size:
        raise FieldFileError("file shorter than the header")
    magic, version, nx, ny, Lx, Ly = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FieldFileError(f"bad magic bytes {magic!r}")
    if version != FORMAT_VERSION:
        raise FieldFileError(f"unsupported format version {version}")
    body = data[_HEADER.size:]
    if len(body) != 8 * nx * ny:
        raise FieldFileError(f"expected {8 * nx * ny} value bytes, found {len(body)}")
    try:
        grid = Grid(nx, ny, Lx, Ly)
        vals = np.frombuffer(body, dtype="<f8").astype(float).reshape(ny, nx)
        u = Field(grid, vals)
    except ValueError as exc:
        raise FieldFileError(str(exc)) from exc
    if check_admissible and not is_admissible(u, rtol=1e-10):
        raise FieldFileError("field is not admissible (nonzero x-mean or Nyquist content)")
    return u


def write_field(path: str | Path, u: Field) -> None:
    Path(path).write_bytes(encode_field(u))


def read_field(path: str | Path, check_admissible: bool = True) -> Field:
    return decode_field(Path(path).read_bytes(), check_admissible)


# ---------------------------------------------------------------------------
# configuration


def _dims(text: str, kind, what: str):
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise ConfigError(f"{what} must look like AxB, got {text!r}")
    try:
        return kind(parts[0]), kind(parts[1])
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def _floats(text: str) -> list[float]:
    """``"0.5,1,2"`` or ``"start:stop:count"`` (inclusive linspace); empty -> []."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        lo, hi, n = text.split(":")
        return [float(x) for x in np.linspace(float(lo), float(hi), int(n))]
    return [float(x) for x in text.split(",") if x.strip()]


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    grid: tuple[int, int] = (128, 128)
    box: tuple[float, float] = (40.0, 40.0)
    a: float | None = None
    q: float | None = None
    p: float | None = None
    mu: float | None = None
    cq: float | None = None
    cp: float | None = None
    c_crit: float | None = None
    seed: int = 0
    estimate: bool = False
    max_iters: int = 5000
    tol: float = 1e-8
    pohozaev_tol: float = 1e-6
    step0: float = 1.0
    init: str = "gaussian-derivative"
    relax_box: bool = True
    method: str = "cg"
    workers: int | None = None
    out: str = "."
    field: str | None = None
    a_values: list = dataclasses.field(default_factory=list)
    q_values: list = dataclasses.field(default_factory=list)
    gn_starts: int = 8

    _PARSERS = {
        "grid": lambda s: _dims(s, int, "grid"),
        "box": lambda s: _dims(s, float, "box"),
        "a": float, "q": float, "p": float, "mu": float,
        "cq": float, "cp": float, "c_crit": float,
        "seed": int, "estimate": _bool, "max_iters": int, "tol": float,
        "pohozaev_tol": float, "step0": float, "init": str, "relax_box": _bool,
        "method": str, "workers": int, "out": str, "field": str,
        "a_values": _floats, "q_values": _floats, "gn_starts": int,
    }

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def update(self, values: dict, source: str) -> None:
        for key, raw in values.items():
            if key not in self._PARSERS:
                raise ConfigError(f"{source}: unknown key {key!r}")
            try:
                val = self._PARSERS[key](raw) if isinstance(raw, str) else raw
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"{source}: bad value for {key}: {exc}") from exc
            setattr(self, key, val)

    def validate(self) -> "RunConfig":
        nx, ny = self.grid
        if nx < 4 or ny < 4 or nx % 2 or ny % 2:
            raise ConfigError("grid sizes must be even and >= 4")
        if not all(math.isfinite(L) and L > 0 for L in self.box):
            raise ConfigError("box lengths must be positive")
        if self.a is not None and not self.a > 0:
            raise ConfigError("a must be positive")
        if any(not x > 0 for x in self.a_values):
            raise ConfigError("a_values must be positive")
        if self.q is not None and not 2.0 <= self.q < 6.0:
            raise ConfigError("q must lie in [2, 6)")
        if self.p is not None and not 2.0 < self.p < 6.0:
            raise ConfigError("p must lie in (2, 6)")
        if self.mu is not None and not self.mu > 0:
            raise ConfigError("mu must be positive")
        for name in ("cq", "cp", "c_crit"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if not (self.tol > 0 and self.pohozaev_tol > 0 and self.step0 > 0):
            raise ConfigError("tolerances and step0 must be positive")
        if self.init not in ("gaussian-derivative", "lump-like", "file"):
            raise ConfigError(f"unknown init {self.init!r}")
        if self.init == "file" and not self.field:
            raise ConfigError("init=file needs field=PATH")
        if self.method not in ("cg", "sd"):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.gn_starts < 1:
            raise ConfigError("gn_starts must be >= 1")
        return self

    def echo(self) -> dict:
        d = {k: getattr(self, k) for k in self.keys()}
        d["grid"], d["box"] = list(self.grid), list(self.box)
        return d


def parse_config_text(text: str, source: str = "config") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment; keys may use dashes."""
    out: dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected key=value, got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if not key:
            raise ConfigError(f"{source}:{n}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{n}: duplicate key {key!r}")
        out[key] = val
    return out


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the file, then ``overrides`` (flags win); validated."""
    cfg = RunConfig()
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        cfg.update(parse_config_text(text, str(path)), str(path))
    if overrides:
        cfg.update({k: v for k, v in overrides.items() if v is not None}, "flags")
    return cfg.validate()


# ---------------------------------------------------------------------------
# JSON-lines


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def dumps_record(rec: dict) -> str:
    """Canonical one-line JSON: sorted keys, finite numbers only."""
    return json.dumps(_clean(rec), sort_keys=True, allow_nan=False)


def append_record(path: str | Path, rec: dict) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(dumps_record(rec) + "\n")


def read_records(path: str | Path) -> list[dict]:
    p = Path(path)
    if not p.exists():
        return []
    out = []
    for line in p.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            out.append(json.loads(line))
    return out
