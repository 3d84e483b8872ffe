"""Run configuration: JSON files with strict unknown-key rejection."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import builtin_boundary, builtin_trend
from .grid import GridField, GridSpec, load_field
from .rkhs import AdditiveRkhsFn, rkhs_from_json_dict, to_rkhs


class ConfigError(ValueError):
    pass


@dataclass
class GridConfig:
    T: float = 1.0
    n: int = 16


@dataclass
class TrendConfig:
    builtin: str | None = "zero"
    scale: float = 1.0
    file: str | None = None


@dataclass
class BoundaryConfig:
    kind: str = "constant"
    value: float = 1.0
    slope: float = 0.0
    file: str | None = None


@dataclass
class EstimatorConfig:
    method: str = "PLAIN"
    n_samples: int = 10_000
    seed: int = 0
    shift: str = "projection"  # "projection" or "none"


@dataclass
class ToleranceConfig:
    projection: float = 1e-10
    conditions: float = 1e-10


@dataclass
class OutputConfig:
    format: str = "json"
    path: str | None = None


@dataclass
class BoundConfig:
    residual_mode: str = "ONE"
    p0_samples: int = 0


@dataclass
class AsymptoticsConfig:
    gammas: list = field(default_factory=lambda: [1.0, 2.0, 3.0, 4.0])
    method: str = "IMPORTANCE"
    paired: bool = True


@dataclass
class VerifyConfig:
    n: int = 8
    n_samples: int = 20_000
    node_pairs: int = 10
    ibp_samples: int = 50
    oracle_steps: int = 256


@dataclass
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    trend: TrendConfig = field(default_factory=TrendConfig)
    boundary: BoundaryConfig = field(default_factory=BoundaryConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    bound: BoundConfig = field(default_factory=BoundConfig)
    asymptotics: AsymptoticsConfig = field(default_factory=AsymptoticsConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    threads: int = 1

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def hash(self) -> str:
        """Digest of everything that can change an output (thread count cannot)."""
        d = self.to_dict()
        d.pop("threads")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    # -- resolved objects --

    def grid_spec(self) -> GridSpec:
        return GridSpec(self.grid.T, self.grid.n)

    def trend_fn(self) -> AdditiveRkhsFn:
        g = self.grid_spec()
        t = self.trend
        if t.file is not None:
            path = Path(t.file)
            if not path.exists():
                raise FileNotFoundError(f"trend file not found: {path}")
            data = json.loads(path.read_text())
            if data.get("kind") == "h2plus":
                f = rkhs_from_json_dict(data)
            else:
                f = to_rkhs(GridField.from_json_dict(data))
            if f.grid != g:
                raise ConfigError(f"trend file grid {f.grid} differs from config grid {g}")
            return t.scale * f
        if t.builtin is None:
            raise ConfigError("trend needs either 'builtin' or 'file'")
        return builtin_trend(t.builtin, g, t.scale)

    def boundary_field(self) -> GridField:
        g = self.grid_spec()
        b = self.boundary
        if b.file is not None:
            path = Path(b.file)
            if not path.exists():
                raise FileNotFoundError(f"boundary file not found: {path}")
            u = load_field(path, T=g.T)
            if u.grid != g:
                raise ConfigError(f"boundary file grid {u.grid} differs from config grid {g}")
            return u
        return builtin_boundary(b.kind, g, b.value, b.slope)


def _build(cls, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        default = fields[name].default_factory() if fields[name].default_factory is not dataclasses.MISSING else None
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value, f"{where}.{name}")
        else:
            kwargs[name] = value
    return cls(**kwargs)


def config_from_dict(data: dict) -> RunConfig:
    return _build(RunConfig, data, "config")


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: malformed JSON ({e})") from None
    return config_from_dict(data)
