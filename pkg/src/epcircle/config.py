"""Run configuration: one JSON document per run.

Schema (keys not listed are rejected)::

    {
      "equation": "ch" | "sobolev(2, 3)" | {"r": 2, "lambda": 3} | "landau_lifschitz",
      "initial_condition": {"kind": "mean_plus_sine", "c": 1, "a": 0.1, "k": 1},
      "grid_n": 256,
      "dt": 0.001,
      "t_end": 1.0,
      "record_every": 10,          # optional, default 10
      "output_dir": "out",         # optional, default "out"
      "emit_snapshots": false,     # optional
      "backend": "eulerian",       # eulerian | lagrangian | both
      "dealias": true,             # optional
      "breakdown_gamma_min": 1e-4, # optional
      "breakdown_c1": 1e6          # optional
    }
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import equations as eq
from . import initial
from .evolution import IntegratorConfig
from .spectral import Grid

LANDAU_LIFSCHITZ = "landau_lifschitz"
BACKENDS = ("eulerian", "lagrangian", "both")
CFL_SAFETY = 1.0
# RK4 covers [-2.8i, 2.8i] on the imaginary axis; L x L'' has rates up to k^2
LL_STABILITY = 2.8


class ConfigError(ValueError):
    """Invalid or unreadable run configuration."""


class CFLWarning(UserWarning):
    """``dt`` is large compared with the grid spacing and the data."""


@dataclass(frozen=True)
class RunConfig:
    equation: object
    initial_condition: dict
    grid_n: int
    dt: float
    t_end: float
    record_every: int = 10
    output_dir: str = "out"
    emit_snapshots: bool = False
    backend: str = "eulerian"
    dealias: bool = True
    breakdown_gamma_min: float = 1e-4
    breakdown_c1: float = 1e6

    # -- derived objects -----------------------------------------------------

    @property
    def is_loop(self) -> bool:
        return self.equation == LANDAU_LIFSCHITZ

    def grid(self) -> Grid:
        return Grid(self.grid_n)

    def catalog_entry(self) -> eq.CatalogEntry:
        if self.is_loop:
            raise ConfigError("landau_lifschitz has no scalar catalog entry")
        if isinstance(self.equation, dict):
            return eq.preset("sobolev", r=self.equation["r"], lam=self.equation["lambda"])
        return eq.preset(self.equation)

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(
            dt=self.dt,
            t_end=self.t_end,
            dealias=self.dealias,
            breakdown_gamma_min=self.breakdown_gamma_min,
            breakdown_c1=self.breakdown_c1,
            record_every=self.record_every,
        )

    def initial_field(self):
        """``u0`` (a GridFunction) or, for the loop equation, ``L0``."""
        grid = self.grid()
        build = initial.build_loop if self.is_loop else initial.build_scalar
        return build(grid, self.initial_condition)

    def with_(self, **changes) -> "RunConfig":
        return validate(replace(self, **changes))

    def to_json(self) -> dict:
        return asdict(self)


_FIELDS = set(RunConfig.__dataclass_fields__)
_REQUIRED = {"equation", "initial_condition", "grid_n", "dt", "t_end"}


def _check_equation(value) -> None:
    if value == LANDAU_LIFSCHITZ:
        return
    if isinstance(value, dict):
        if set(value) != {"r", "lambda"}:
            raise ConfigError("custom equation must be {\"r\": int, \"lambda\": number}")
        if not isinstance(value["r"], int) or value["r"] < 0:
            raise ConfigError(f"r must be a nonnegative integer, got {value['r']!r}")
        eq.preset("sobolev", r=value["r"], lam=float(value["lambda"]))
        return
    if not isinstance(value, str):
        raise ConfigError(f"equation must be a preset name or {{r, lambda}}, got {value!r}")
    try:
        eq.preset(value)
    except ValueError as exc:
        raise ConfigError(f"{exc}, {LANDAU_LIFSCHITZ}") from None


def validate(cfg: RunConfig) -> RunConfig:
    """Check a configuration; warns (does not fail) on a doubtful time step."""
    _check_equation(cfg.equation)
    n = cfg.grid_n
    if not isinstance(n, int) or isinstance(n, bool) or n < 32 or n & (n - 1):
        raise ConfigError(f"grid_n must be a power of two >= 32, got {n!r}")
    if not (isinstance(cfg.dt, (int, float)) and cfg.dt > 0 and math.isfinite(cfg.dt)):
        raise ConfigError(f"dt must be a positive number, got {cfg.dt!r}")
    if not (isinstance(cfg.t_end, (int, float)) and cfg.t_end >= 0 and math.isfinite(cfg.t_end)):
        raise ConfigError(f"t_end must be a nonnegative number, got {cfg.t_end!r}")
    steps = cfg.t_end / cfg.dt
    if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
        raise ConfigError(f"t_end / dt must be an integer, got {steps!r}")
    if not isinstance(cfg.record_every, int) or cfg.record_every < 1:
        raise ConfigError(f"record_every must be a positive integer, got {cfg.record_every!r}")
    if cfg.backend not in BACKENDS:
        raise ConfigError(f"backend must be one of {', '.join(BACKENDS)}, got {cfg.backend!r}")
    if cfg.is_loop and cfg.backend != "eulerian":
        raise ConfigError("landau_lifschitz has only the eulerian backend")
    for name in ("emit_snapshots", "dealias"):
        if not isinstance(getattr(cfg, name), bool):
            raise ConfigError(f"{name} must be true or false")
    try:
        cfg.integrator()
        field = cfg.initial_field()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None

    dx = 2 * np.pi / n
    if cfg.is_loop:
        rate = cfg.dt * (n // 2) ** 2
        if rate > LL_STABILITY:
            warnings.warn(f"dt * (n/2)^2 = {rate:.3g} exceeds the RK4 stability bound {LL_STABILITY}",
                          CFLWarning, stacklevel=2)
    else:
        courant = cfg.dt * float(np.max(np.abs(field.values)))
        if courant > 0.5 * dx * CFL_SAFETY:
            warnings.warn(f"dt * max|u0| = {courant:.3g} exceeds 0.5 * dx = {0.5 * dx:.3g}",
                          CFLWarning, stacklevel=2)
    return cfg


def from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(data) - _FIELDS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    missing = _REQUIRED - set(data)
    if missing:
        raise ConfigError(f"missing configuration keys: {sorted(missing)}")
    return validate(RunConfig(**data))


def load(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return from_dict(data)
