"""Experiment configuration: nested dataclasses built from JSON."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from .grid import BOX_HALF_WIDTH, OMEGA_HALF_WIDTH, SPEED_KINDS, Grid2D, SpeedModel

PHANTOM_KINDS = ("shepp_logan", "zebra", "image", "bump")
METHODS = ("ns", "tr", "both")


class ConfigError(ValueError):
    pass


def _check(cond, msg):
    if not cond:
        raise ConfigError(msg)


@dataclass
class GridConfig:
    nx: int = 301
    bounds: tuple = (-BOX_HALF_WIDTH, BOX_HALF_WIDTH, -BOX_HALF_WIDTH, BOX_HALF_WIDTH)
    omega_half_width: float = OMEGA_HALF_WIDTH

    def validate(self):
        _check(isinstance(self.nx, int) and self.nx >= 9, "grid.nx must be an integer >= 9")
        _check(len(self.bounds) == 4, "grid.bounds must be [x_min, x_max, y_min, y_max]")
        x0, x1, y0, y1 = self.bounds
        _check(x1 > x0 and y1 > y0, "grid.bounds must be increasing")
        a = self.omega_half_width
        _check(0 < a and x0 < -a and a < x1 and y0 < -a and a < y1,
               "Omega must sit strictly inside grid.bounds")
        try:
            self.build()
        except ValueError as exc:
            raise ConfigError(f"grid: {exc}") from exc

    def build(self) -> Grid2D:
        x0, x1, y0, y1 = self.bounds
        ny = int(round(self.nx * (y1 - y0) / (x1 - x0)))
        a = self.omega_half_width
        return Grid2D(self.nx, ny, x0, x1, y0, y1, (-a, a, -a, a))


@dataclass
class SpeedConfig:
    kind: str = "c1"
    params: tuple = ()

    def validate(self):
        _check(self.kind in SPEED_KINDS and self.kind != "custom",
               f"speed.kind must be one of {[k for k in SPEED_KINDS if k != 'custom']}")
        try:
            self.build()
        except ValueError as exc:
            raise ConfigError(f"speed: {exc}") from exc

    def build(self) -> SpeedModel:
        return SpeedModel(self.kind, tuple(self.params))


@dataclass
class PhantomConfig:
    kind: str = "shepp_logan"
    disks: Optional[list] = None        # [[x, y, r], ...]; None keeps the defaults
    supersample: int = 4
    path: Optional[str] = None          # image phantoms
    fit: tuple = (-1.1, 1.1, -1.1, 1.1)
    center: tuple = (0.0, 0.0)          # bump
    width: float = 0.15

    def validate(self):
        _check(self.kind in PHANTOM_KINDS, f"phantom.kind must be one of {PHANTOM_KINDS}")
        _check(self.kind != "image" or self.path, "phantom.path is required for image phantoms")
        _check(isinstance(self.supersample, int) and self.supersample >= 1,
               "phantom.supersample must be a positive integer")
        _check(len(self.fit) == 4, "phantom.fit must be [x0, x1, y0, y1]")


@dataclass
class TimeConfig:
    T: Optional[float] = None
    T_mult: Optional[float] = None      # T = T_mult * T0

    def validate(self):
        _check(self.T is None or self.T_mult is None, "give time.T or time.T_mult, not both")
        if self.T is not None:
            _check(math.isfinite(self.T) and self.T > 0, "time.T must be positive")
        if self.T_mult is not None:
            _check(math.isfinite(self.T_mult) and self.T_mult > 0, "time.T_mult must be positive")

    def resolve(self, T0: float) -> float:
        if self.T is not None:
            return float(self.T)
        return float((4.0 if self.T_mult is None else self.T_mult) * T0)


@dataclass
class MaskConfig:
    sides: str = "NSEW"
    ramp: float = 0.2

    def validate(self):
        s = self.side_set()
        _check(s and s <= set("NSEW"), "mask.sides must be a non-empty subset of N, S, E, W")
        _check(self.ramp >= 0, "mask.ramp must be non-negative")

    def side_set(self) -> set:
        if self.sides == "all":
            return set("NSEW")
        return {c.upper() for c in self.sides if c not in ", "}


@dataclass
class NoiseConfig:
    level: float = 0.0
    seed: int = 0

    def validate(self):
        _check(self.level >= 0, "noise.level must be non-negative")
        _check(isinstance(self.seed, int), "noise.seed must be an integer")


@dataclass
class MethodConfig:
    kind: str = "both"
    max_terms: int = 21
    tol: float = 0.05
    region_K: Optional[tuple] = None    # [x0, x1, y0, y1] enables the H_D(K) projection
    save_iterates: bool = True

    def validate(self):
        _check(self.kind in METHODS, f"method.kind must be one of {METHODS}")
        _check(isinstance(self.max_terms, int) and self.max_terms >= 1, "method.max_terms must be >= 1")
        _check(self.tol >= 0, "method.tol must be non-negative")
        _check(self.region_K is None or len(self.region_K) == 4, "method.region_K must be [x0, x1, y0, y1]")


@dataclass
class OutputConfig:
    dir: Optional[str] = None


@dataclass
class RunConfig:
    name: str = "run"
    grid: GridConfig = field(default_factory=GridConfig)
    speed: SpeedConfig = field(default_factory=SpeedConfig)
    phantom: PhantomConfig = field(default_factory=PhantomConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    mask: MaskConfig = field(default_factory=MaskConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    method: MethodConfig = field(default_factory=MethodConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self) -> "RunConfig":
        for f in fields(self):
            part = getattr(self, f.name)
            if hasattr(part, "validate"):
                part.validate()
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        return _from_dict(raw).validate()

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        raw.setdefault("name", path.stem)
        return cls.from_dict(raw)


# flat keys accepted at the top level, mapped to (section, field)
SHORTHAND = {
    "nx": ("grid", "nx"), "bounds": ("grid", "bounds"),
    "T": ("time", "T"), "T_mult": ("time", "T_mult"),
    "sides": ("mask", "sides"), "ramp": ("mask", "ramp"),
    "seed": ("noise", "seed"),
    "max_terms": ("method", "max_terms"), "tol": ("method", "tol"),
    "region_K": ("method", "region_K"),
}
# a section given as a plain value sets this field
SCALAR_SECTIONS = {"speed": "kind", "phantom": "kind", "method": "kind",
                   "noise": "level", "output": "dir"}


def _from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    sections = {f.name: f for f in fields(RunConfig)}
    parts: dict = {}
    for key, val in raw.items():
        if key == "name":
            continue
        if key in SHORTHAND:
            sec, name = SHORTHAND[key]
            parts.setdefault(sec, {})[name] = val
        elif key in SCALAR_SECTIONS and not isinstance(val, dict):
            parts.setdefault(key, {})[SCALAR_SECTIONS[key]] = val
        elif key in sections and isinstance(val, dict):
            parts.setdefault(key, {}).update(val)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    cfg = RunConfig(name=str(raw.get("name", "run")))
    for sec, vals in parts.items():
        cls = type(getattr(cfg, sec))
        known = {f.name for f in fields(cls)}
        extra = set(vals) - known
        if extra:
            raise ConfigError(f"unknown keys in {sec}: {sorted(extra)}")
        vals = {k: tuple(v) if isinstance(v, list) and k in ("bounds", "params", "fit", "center", "region_K")
                else v for k, v in vals.items()}
        try:
            setattr(cfg, sec, cls(**vals))
        except TypeError as exc:
            raise ConfigError(f"{sec}: {exc}") from exc
    return cfg
