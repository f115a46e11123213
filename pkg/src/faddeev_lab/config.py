"""Experiment configuration: one TOML file per experiment, validated per subcommand.

Physical and grid parameters (radius, node count, horizon, amplitudes) have
no defaults and must be stated; numerical knobs (CFL number, scheme, output
stride) do.  Validation errors name the offending field.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError

SCHEMA_VERSION = 1
SUBCOMMANDS = ("simulate", "norms", "verify", "scatter", "probe", "hnorm", "sweep")
FAMILIES = ("gauss_bump", "poly_bump", "two_bump")
VERIFY_CHECKS = ("rhs_u", "rhs_v", "consistency", "nullform", "scaling")
PROBES = ("NONLIN", "PROD", "ALGEBRA_Y", "R_WEIGHT", "SIN_POWER", "SOB", "RAD_SOB")
HNORM_MODES = ("composite", "strichartz", "trilinear", "bilinear", "sin")


_MISSING = object()


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


class _Section:
    """Typed accessors over a config table that report dotted field paths."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise ConfigError(path or "config", "must be a table")
        self.data = data
        self.path = path

    def _get(self, key: str, default):
        if key in self.data:
            return self.data[key]
        if default is _MISSING:
            raise ConfigError(_join(self.path, key), "required")
        return default

    def _fail(self, key: str, msg: str):
        raise ConfigError(_join(self.path, key), msg)

    def number(self, key: str, default=_MISSING, *, positive=False, nonneg=False) -> float:
        v = self._get(key, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self._fail(key, f"must be a finite number (got {v!r})")
        if positive and v <= 0:
            self._fail(key, f"must be positive (got {v!r})")
        if nonneg and v < 0:
            self._fail(key, f"must be nonnegative (got {v!r})")
        return float(v)

    def integer(self, key: str, default=_MISSING, *, minimum: int | None = None) -> int:
        v = self._get(key, default)
        if isinstance(v, bool) or not isinstance(v, int):
            self._fail(key, f"must be an integer (got {v!r})")
        if minimum is not None and v < minimum:
            self._fail(key, f"must be at least {minimum} (got {v!r})")
        return int(v)

    def boolean(self, key: str, default=_MISSING) -> bool:
        v = self._get(key, default)
        if not isinstance(v, bool):
            self._fail(key, f"must be true or false (got {v!r})")
        return v

    def choice(self, key: str, options, default=_MISSING) -> str:
        v = self._get(key, default)
        if v not in options:
            self._fail(key, f"must be one of {list(options)} (got {v!r})")
        return v

    def numbers(self, key: str, default=_MISSING, *, positive=False, min_len=1) -> list[float]:
        v = self._get(key, default)
        if not isinstance(v, list) or len(v) < min_len:
            self._fail(key, f"must be a list of at least {min_len} numbers")
        for i, x in enumerate(v):
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                self._fail(f"{key}[{i}]", f"must be a finite number (got {x!r})")
            if positive and x <= 0:
                self._fail(f"{key}[{i}]", f"must be positive (got {x!r})")
        return [float(x) for x in v]

    def table(self, key: str, default=_MISSING) -> "_Section":
        v = self._get(key, default)
        return _Section(v, _join(self.path, key))

    def has(self, key: str) -> bool:
        return key in self.data


def _canonical(data: dict) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated configuration; ``data`` is the full parsed table."""

    subcommand: str
    seed: int
    data: dict

    @property
    def hash(self) -> str:
        """First 16 hex digits of the SHA-256 of the canonical JSON form."""
        return hashlib.sha256(_canonical(self.to_dict()).encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        d = copy.deepcopy(self.data)
        d["subcommand"] = self.subcommand
        d["seed"] = self.seed
        d["schema_version"] = SCHEMA_VERSION
        return d

    def section(self, name: str) -> _Section:
        return _Section(self.data.get(name, {}), name)


# ---------------------------------------------------------- validation


def _grid(root: _Section) -> None:
    g = root.table("grid")
    g.number("R", positive=True)
    g.integer("N", minimum=8)


def _solver(root: _Section) -> None:
    s = root.table("solver")
    s.number("T", nonneg=True)
    cfl = s.number("cfl", 0.5, positive=True)
    if cfl > 0.9:
        raise ConfigError("solver.cfl", f"must not exceed 0.9 (got {cfl})")
    s.choice("scheme", ("rk4", "leapfrog"), "rk4")
    s.choice("form", ("u", "v"), "v")
    s.integer("snapshot_stride", 1, minimum=1)
    s.boolean("nonlinear", True)
    s.boolean("sponge", False)


def _data(root: _Section, need_delta: bool = True) -> None:
    d = root.table("data")
    d.choice("family", FAMILIES)
    if need_delta:
        d.number("delta", nonneg=True)
    d.choice("velocity", ("zero", "outgoing"), "zero")
    d.table("params", {})


def _validate(sub: str, root: _Section) -> None:
    if sub in ("simulate", "scatter"):
        _grid(root)
        _solver(root)
        _data(root)
        if sub == "scatter":
            sc = root.table("scatter", {})
            sc.choice("flow", ("solver", "spectral"), "solver")
            sc.boolean("series", True)
    elif sub == "sweep":
        _grid(root)
        _solver(root)
        _data(root, need_delta=False)
        sw = root.table("sweep")
        sw.numbers("deltas", positive=True)
        sw.boolean("scatter", True)
    elif sub == "norms":
        _grid(root)
        _data(root)
        n = root.table("norms")
        specs = n._get("specs", _MISSING)
        if not isinstance(specs, list) or not specs:
            raise ConfigError("norms.specs", "must be a non-empty list of {s, p, q} tables")
        for i, spec in enumerate(specs):
            t = _Section(spec, f"norms.specs[{i}]")
            t.number("s")
            t.number("p", positive=True)
            t.number("q", positive=True)
        n.boolean("data_norm", True)
    elif sub == "verify":
        v = root.table("verify")
        v.number("R", positive=True)
        v.numbers("Ns", min_len=2)
        checks = v._get("checks", list(VERIFY_CHECKS))
        if not isinstance(checks, list) or not checks or any(c not in VERIFY_CHECKS for c in checks):
            raise ConfigError("verify.checks", f"must be a non-empty subset of {list(VERIFY_CHECKS)}")
        v.number("amplitude", 0.5, positive=True)
        v.numbers("scaling_lams", [0.25, 1.0, 2.0, 8.0], positive=True)
    elif sub == "probe":
        p = root.table("probe")
        name = p.choice("name", PROBES)
        if name == "NONLIN":
            p.numbers("deltas", positive=True, min_len=2)
            p.number("R", positive=True)
            p.integer("N", minimum=8)
            p.number("T", positive=True)
        elif name == "RAD_SOB":
            p.numbers("lams", positive=True, min_len=2)
        else:
            p.integer("members", minimum=1)
            p.number("R", positive=True)
            p.integer("N", minimum=8)
        if p.has("regression_constant"):
            p.number("regression_constant", positive=True)
        if name == "SIN_POWER":
            p.integer("k", 1, minimum=1)
    elif sub == "hnorm":
        h = root.table("hnorm")
        mode = h.choice("mode", HNORM_MODES)
        if mode == "strichartz":
            h.numbers("lams", positive=True, min_len=2)
            if not h.boolean("radial_weight", False):
                h.number("r")
            h.number("q", positive=True)
            h.integer("symbols", 2, minimum=1)
        else:
            w = h.table("window")
            w.number("T", positive=True)
            w.integer("Nt", minimum=8)
            w.number("R", positive=True)
            w.integer("Nr", minimum=8)
        if mode == "composite":
            h.number("lam", positive=True)
            h.number("angle", 0.785398, positive=True)
            if h.has("bands"):
                h.numbers("bands", positive=True)
        if mode in ("trilinear", "bilinear"):
            h.numbers("separations", positive=True)
            h.integer("per_separation", minimum=1)
            h.number("nu", positive=True)
            h.integer("pool", 3, minimum=1)
        if mode == "sin":
            h.number("lam", positive=True)
            h.numbers("amplitudes", positive=True)
            h.number("alpha", 1.0, positive=True)
        if h.has("regression_constant"):
            h.number("regression_constant", positive=True)
    else:  # pragma: no cover
        raise ConfigError("subcommand", f"unknown {sub!r}")


def parse_config(data: dict[str, Any], subcommand: str | None = None, seed: int | None = None) -> ExperimentConfig:
    """Validate a parsed table; ``subcommand``/``seed`` override the file's values."""
    if not isinstance(data, dict):
        raise ConfigError("config", "must be a table")
    data = copy.deepcopy(data)
    file_sub = data.pop("subcommand", None)
    sub = subcommand or file_sub
    if sub not in SUBCOMMANDS:
        raise ConfigError("subcommand", f"must be one of {list(SUBCOMMANDS)} (got {sub!r})")
    if file_sub is not None and subcommand is not None and file_sub != subcommand:
        raise ConfigError("subcommand", f"file is for {file_sub!r}, invoked as {subcommand!r}")
    version = data.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported {version!r} (expected {SCHEMA_VERSION})")
    file_seed = data.pop("seed", 0)
    if isinstance(file_seed, bool) or not isinstance(file_seed, int) or file_seed < 0:
        raise ConfigError("seed", f"must be a nonnegative integer (got {file_seed!r})")
    s = file_seed if seed is None else int(seed)
    if s < 0 or s >= 2**64:
        raise ConfigError("seed", f"must fit in an unsigned 64-bit integer (got {s})")
    _validate(sub, _Section(data, ""))
    return ExperimentConfig(sub, s, data)


def load_config(path, subcommand: str | None = None, seed: int | None = None) -> ExperimentConfig:
    p = Path(path)
    try:
        with open(p, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {p}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"TOML syntax error in {p}: {exc}") from None
    return parse_config(data, subcommand, seed)
