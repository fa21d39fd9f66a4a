"""Run configuration: a strict TOML schema.

Unknown keys are errors (a silent typo could flip a verification verdict),
parse errors surface with line numbers from the TOML reader.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover - py310 path
    import tomli as tomllib

from .bridge_mc import McConfig
from .cn_solver import GridSpec
from .potentials import (PotentialSpec, ProfileG, exponential_potential,
                         harmonic_potential, power_potential,
                         tabulated_potential, zero_potential)

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    pass


_SCHEMA = {
    "dim": int,
    "c0_regime": (int, float),
    "engines": list,
    "seed": int,
    "outputs": str,
    "potential": {
        "kind": str,
        "alpha": (int, float),
        "coeff": (int, float),
        "omega": (int, float),
        "rate": (int, float),
        "profile_csv": str,
    },
    "mc": {
        "n_paths": int,
        "n_steps": int,
        "antithetic": bool,
        "max_steps": int,
    },
    "grid": {
        "half_width": (int, float),
        "n_cells": int,
        "dt": (int, float),
    },
    "sweep": {
        "t_list": list,
        "x_list": list,
        "y_list": list,
        "c0_list": list,
    },
    "green": {
        "rel_tol": (int, float),
        "x_list": list,
        "y_list": list,
    },
}


@dataclass
class RunConfig:
    potential: PotentialSpec
    dim: int
    c0_regime: float
    engines: list
    mc: McConfig
    grid: Optional[GridSpec]
    sweep: dict
    green: dict
    outputs: str
    seed: int
    raw: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        """Plain dict embedded in every output file (audit trail)."""
        out = dict(self.raw)
        out.setdefault("seed", self.seed)
        out["potential_name"] = self.potential.name
        return out


def _check_keys(data: dict, schema: dict, path: str = ""):
    for key, val in data.items():
        here = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown config key: {here}")
        want = schema[key]
        if isinstance(want, dict):
            if not isinstance(val, dict):
                raise ConfigError(f"config key {here} must be a table")
            _check_keys(val, want, here)
        else:
            if not isinstance(val, want):
                raise ConfigError(f"config key {here} has the wrong type")


def _build_potential(dim: int, p: dict) -> PotentialSpec:
    kind = p.get("kind")
    if kind is None:
        raise ConfigError("potential.kind is required")
    if kind == "power":
        return power_potential(dim, float(p.get("alpha", 2.0)),
                               float(p.get("coeff", 1.0)))
    if kind == "harmonic":
        return harmonic_potential(dim, float(p.get("omega", 1.0)))
    if kind == "exponential":
        return exponential_potential(dim, float(p.get("rate", 1.0)),
                                     float(p.get("coeff", 1.0)))
    if kind == "zero":
        return zero_potential(dim)
    if kind == "tabulated":
        path = p.get("profile_csv")
        if not path:
            raise ConfigError("tabulated potential needs potential.profile_csv")
        knots = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        return tabulated_potential(dim, knots)
    raise ConfigError(f"unknown potential.kind: {kind!r}")


def parse_config(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    _check_keys(data, _SCHEMA)
    dim = int(data.get("dim", 1))
    if dim < 1:
        raise ConfigError("dim must be >= 1")
    engines = list(data.get("engines", ["pde"]))
    for e in engines:
        if e not in ("mc", "pde"):
            raise ConfigError(f"unknown engine {e!r}")
    if not engines:
        raise ConfigError("at least one engine is required")
    seed = int(data.get("seed", 0))
    pot = _build_potential(dim, data.get("potential", {"kind": "power"}))
    mc_raw = data.get("mc", {})
    mc = McConfig(n_paths=int(mc_raw.get("n_paths", 100_000)),
                  n_steps=int(mc_raw.get("n_steps", 256)),
                  seed=seed,
                  antithetic=bool(mc_raw.get("antithetic", False)),
                  max_steps=int(mc_raw.get("max_steps", 4096)))
    grid = None
    if "grid" in data:
        graw = data["grid"]
        grid = GridSpec(dim=dim, half_width=float(graw.get("half_width", 8.0)),
                        n_cells=int(graw.get("n_cells", 1024)),
                        dt=float(graw["dt"]) if "dt" in graw else None)
    sweep = data.get("sweep", {})
    green_cfg = data.get("green", {})
    c0 = float(data.get("c0_regime", 1.0))
    if c0 <= 0 or not math.isfinite(c0):
        raise ConfigError("c0_regime must be positive")
    return RunConfig(potential=pot, dim=dim, c0_regime=c0, engines=engines,
                     mc=mc, grid=grid, sweep=sweep, green=green_cfg,
                     outputs=str(data.get("outputs", "out")), seed=seed,
                     raw=data)


def load_config(path: str) -> RunConfig:
    with open(path, "rb") as fh:
        text = fh.read().decode("utf-8")
    return parse_config(text)
