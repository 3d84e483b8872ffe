"""Uniform square grids on [0, T]^2 and node-sampled fields.

A trend F with F(0, 0) = 0 splits uniquely into an axis part along the first
coordinate, an axis part along the second coordinate and a remainder that
vanishes on both axes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class GridError(ValueError):
    """Invalid grid argument or mismatched grids."""


class DomainError(ValueError):
    """Input violates a mathematical precondition (boundary values, monotonicity)."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid with ``n`` steps of size ``T / n`` on both axes."""

    T: float
    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise GridError(f"n must be an integer, got {self.n!r}")
        if self.n < 1:
            raise GridError(f"n must be >= 1, got {self.n}")
        if not np.isfinite(self.T) or self.T <= 0:
            raise GridError(f"T must be positive and finite, got {self.T}")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "n", int(self.n))

    @property
    def delta(self) -> float:
        return self.T / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.delta

    @property
    def midpoints(self) -> np.ndarray:
        """Cell midpoints (k + 1/2) * delta, k = 0..n-1."""
        return (np.arange(self.n) + 0.5) * self.delta

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates (S, T) with S[i, j] = t_i, T[i, j] = t_j."""
        x = self.nodes
        return np.meshgrid(x, x, indexing="ij")

    def to_dict(self) -> dict:
        return {"T": self.T, "n": self.n}


def make_grid(T: float, n: int) -> GridSpec:
    return GridSpec(T, n)


def _frozen(a, shape=None) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    if shape is not None and arr.shape != shape:
        raise GridError(f"expected shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


def check_same_grid(*grids: GridSpec) -> GridSpec:
    first = grids[0]
    for g in grids[1:]:
        if g != first:
            raise GridError(f"grid mismatch: {first} vs {g}")
    return first


@dataclass(frozen=True)
class GridField:
    """Node samples F[i, j] = F(t_i, t_j), i, j = 0..n."""

    values: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        n = self.grid.n
        object.__setattr__(self, "values", _frozen(self.values, (n + 1, n + 1)))

    @classmethod
    def from_function(cls, func, grid: GridSpec) -> "GridField":
        S, T = grid.mesh()
        return cls(np.broadcast_to(func(S, T), S.shape), grid)

    @classmethod
    def constant(cls, value: float, grid: GridSpec) -> "GridField":
        return cls(np.full((grid.n + 1, grid.n + 1), float(value)), grid)

    def __add__(self, other: "GridField") -> "GridField":
        check_same_grid(self.grid, other.grid)
        return GridField(self.values + other.values, self.grid)

    def __sub__(self, other: "GridField") -> "GridField":
        check_same_grid(self.grid, other.grid)
        return GridField(self.values - other.values, self.grid)

    def __mul__(self, a: float) -> "GridField":
        return GridField(a * self.values, self.grid)

    __rmul__ = __mul__

    def to_json_dict(self) -> dict:
        return {"T": self.grid.T, "n": self.grid.n, "values": self.values.tolist()}

    @classmethod
    def from_json_dict(cls, d: dict) -> "GridField":
        try:
            grid = GridSpec(d["T"], d["n"])
            return cls(np.asarray(d["values"], dtype=np.float64), grid)
        except KeyError as e:
            raise GridError(f"missing key {e} in grid field JSON") from None


@dataclass(frozen=True)
class AdditiveTrend:
    """F = f1(s) + f2(t) + f3(s, t) with f1(0) = f2(0) = 0 and f3 = 0 on the axes."""

    f1: np.ndarray
    f2: np.ndarray
    f3: GridField
    grid: GridSpec = field(repr=False)

    def __post_init__(self):
        n = self.grid.n
        check_same_grid(self.grid, self.f3.grid)
        object.__setattr__(self, "f1", _frozen(self.f1, (n + 1,)))
        object.__setattr__(self, "f2", _frozen(self.f2, (n + 1,)))


def decompose_trend(F: GridField) -> AdditiveTrend:
    v = F.values
    if v[0, 0] != 0.0:
        raise DomainError(f"trend must vanish at the origin, F[0,0] = {v[0, 0]!r}")
    f1 = v[:, 0].copy()
    f2 = v[0, :].copy()
    f3 = v - f1[:, None] - f2[None, :]
    return AdditiveTrend(f1, f2, GridField(f3, F.grid), F.grid)


def recompose(a: AdditiveTrend) -> GridField:
    check_same_grid(a.grid, a.f3.grid)
    return GridField(a.f1[:, None] + a.f2[None, :] + a.f3.values, a.grid)


# --- I/O -------------------------------------------------------------------

_FMT = "%.17g"


def field_to_csv(F: GridField) -> str:
    buf = io.StringIO()
    np.savetxt(buf, F.values, fmt=_FMT, delimiter=",")
    return buf.getvalue()


def field_from_csv(text: str, T: float) -> GridField:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    values = np.array([[float(x) for x in r] for r in rows], dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1] or values.shape[0] < 2:
        raise GridError(f"CSV field must be a square matrix of size >= 2, got {values.shape}")
    return GridField(values, GridSpec(T, values.shape[0] - 1))


def save_field(F: GridField, path: str | Path) -> None:
    path = Path(path)
    if path.suffix == ".csv":
        path.write_text(field_to_csv(F))
    else:
        path.write_text(json.dumps(F.to_json_dict()))


def load_field(path: str | Path, T: float | None = None) -> GridField:
    """Read a field from JSON, or from CSV (which carries no horizon, so ``T`` is required)."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".csv":
        if T is None:
            raise GridError("CSV fields need an explicit horizon T")
        return field_from_csv(text, T)
    return GridField.from_json_dict(json.loads(text))
