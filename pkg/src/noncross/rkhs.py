"""Discrete elements of the RKHS of the additive Wiener field.

One-parameter functions h(t) = int_0^t h'(s) ds are stored by their derivative
on cells [t_{k-1}, t_k); two-parameter functions vanishing on the axes are
stored by their mixed derivative on 2D cells. Derivatives are zero beyond T,
so every stored element is an honest member of the infinite-horizon space and
its norm is computed exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    AdditiveTrend,
    DomainError,
    GridError,
    GridField,
    GridSpec,
    _frozen,
    check_same_grid,
    decompose_trend,
)


@dataclass(frozen=True)
class H1Fn:
    d: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        object.__setattr__(self, "d", _frozen(self.d, (self.grid.n,)))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "H1Fn":
        return cls(np.zeros(grid.n), grid)

    def values(self) -> np.ndarray:
        """Node values h(t_k), k = 0..n."""
        out = np.zeros(self.grid.n + 1)
        out[1:] = np.cumsum(self.d) * self.grid.delta
        return out

    def norm_sq(self) -> float:
        return h1_inner(self, self)

    def __add__(self, other: "H1Fn") -> "H1Fn":
        check_same_grid(self.grid, other.grid)
        return H1Fn(self.d + other.d, self.grid)

    def __sub__(self, other: "H1Fn") -> "H1Fn":
        check_same_grid(self.grid, other.grid)
        return H1Fn(self.d - other.d, self.grid)

    def __mul__(self, a: float) -> "H1Fn":
        return H1Fn(a * self.d, self.grid)

    __rmul__ = __mul__

    def __neg__(self) -> "H1Fn":
        return H1Fn(-self.d, self.grid)


@dataclass(frozen=True)
class H2Fn:
    c: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        n = self.grid.n
        object.__setattr__(self, "c", _frozen(self.c, (n, n)))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "H2Fn":
        return cls(np.zeros((grid.n, grid.n)), grid)

    def values(self) -> np.ndarray:
        """Node values h(t_i, t_j), vanishing on both axes."""
        n = self.grid.n
        out = np.zeros((n + 1, n + 1))
        out[1:, 1:] = np.cumsum(np.cumsum(self.c, axis=0), axis=1) * self.grid.delta**2
        return out

    def norm_sq(self) -> float:
        return h2_inner(self, self)

    def transpose(self) -> "H2Fn":
        return H2Fn(self.c.T, self.grid)

    def __add__(self, other: "H2Fn") -> "H2Fn":
        check_same_grid(self.grid, other.grid)
        return H2Fn(self.c + other.c, self.grid)

    def __sub__(self, other: "H2Fn") -> "H2Fn":
        check_same_grid(self.grid, other.grid)
        return H2Fn(self.c - other.c, self.grid)

    def __mul__(self, a: float) -> "H2Fn":
        return H2Fn(a * self.c, self.grid)

    __rmul__ = __mul__

    def __neg__(self) -> "H2Fn":
        return H2Fn(-self.c, self.grid)


@dataclass(frozen=True)
class AdditiveRkhsFn:
    """h(s, t) = h1(s) + h2(t) + h3(s, t)."""

    h1: H1Fn
    h2: H1Fn
    h3: H2Fn

    def __post_init__(self):
        check_same_grid(self.h1.grid, self.h2.grid, self.h3.grid)

    @property
    def grid(self) -> GridSpec:
        return self.h1.grid

    @classmethod
    def zeros(cls, grid: GridSpec) -> "AdditiveRkhsFn":
        return cls(H1Fn.zeros(grid), H1Fn.zeros(grid), H2Fn.zeros(grid))

    def values(self) -> np.ndarray:
        return self.h1.values()[:, None] + self.h2.values()[None, :] + self.h3.values()

    def to_field(self) -> GridField:
        return GridField(self.values(), self.grid)

    def norm_sq(self) -> float:
        return additive_inner(self, self)

    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq()))

    def swap_axes(self) -> "AdditiveRkhsFn":
        return AdditiveRkhsFn(self.h2, self.h1, self.h3.transpose())

    def __add__(self, other: "AdditiveRkhsFn") -> "AdditiveRkhsFn":
        return AdditiveRkhsFn(self.h1 + other.h1, self.h2 + other.h2, self.h3 + other.h3)

    def __sub__(self, other: "AdditiveRkhsFn") -> "AdditiveRkhsFn":
        return AdditiveRkhsFn(self.h1 - other.h1, self.h2 - other.h2, self.h3 - other.h3)

    def __mul__(self, a: float) -> "AdditiveRkhsFn":
        return AdditiveRkhsFn(a * self.h1, a * self.h2, a * self.h3)

    __rmul__ = __mul__

    def __neg__(self) -> "AdditiveRkhsFn":
        return AdditiveRkhsFn(-self.h1, -self.h2, -self.h3)


def h1_inner(f: H1Fn, g: H1Fn) -> float:
    check_same_grid(f.grid, g.grid)
    return float(f.grid.delta * np.dot(f.d, g.d))


def h2_inner(f: H2Fn, g: H2Fn) -> float:
    check_same_grid(f.grid, g.grid)
    return float(f.grid.delta**2 * np.sum(f.c * g.c))


def additive_inner(f: AdditiveRkhsFn, g: AdditiveRkhsFn) -> float:
    return h1_inner(f.h1, g.h1) + h1_inner(f.h2, g.h2) + h2_inner(f.h3, g.h3)


def differentiate_trace(values, grid: GridSpec) -> H1Fn:
    """First differences of an axis trace with h(0) = 0."""
    v = np.asarray(values, dtype=np.float64)
    if v.shape != (grid.n + 1,):
        raise GridError(f"axis trace must have {grid.n + 1} entries, got {v.shape}")
    if v[0] != 0.0:
        raise DomainError(f"axis trace must start at 0, got {v[0]!r}")
    return H1Fn(np.diff(v) / grid.delta, grid)


def differentiate_sheet(F: GridField) -> H2Fn:
    """Mixed differences of a field that vanishes on both axes."""
    v = F.values
    if np.any(v[0, :] != 0.0) or np.any(v[:, 0] != 0.0):
        raise DomainError("two-parameter part must vanish on both axes")
    c = np.diff(np.diff(v, axis=0), axis=1) / F.grid.delta**2
    return H2Fn(c, F.grid)


def differentiate(F):
    """Derivative representation of a node-sampled function.

    Accepts an axis trace (1D array, needs a ``grid`` via :func:`differentiate_trace`),
    an :class:`AdditiveTrend`, or a :class:`GridField`. A field that vanishes on
    both axes becomes an :class:`H2Fn`; any other field with F(0, 0) = 0 is first
    split into its three parts and returned as an :class:`AdditiveRkhsFn`.
    """
    if isinstance(F, AdditiveTrend):
        return AdditiveRkhsFn(
            differentiate_trace(F.f1, F.grid),
            differentiate_trace(F.f2, F.grid),
            differentiate_sheet(F.f3),
        )
    if isinstance(F, GridField):
        v = F.values
        if np.all(v[0, :] == 0.0) and np.all(v[:, 0] == 0.0):
            return differentiate_sheet(F)
        return differentiate(decompose_trend(F))
    raise TypeError(f"cannot differentiate {type(F).__name__}; use differentiate_trace for 1D traces")


def to_rkhs(F: GridField) -> AdditiveRkhsFn:
    """Always return the three-part representation, even for a pure sheet."""
    return differentiate(decompose_trend(F))


def reconstruct(h):
    """Node values of an H1Fn (1D array), H2Fn or AdditiveRkhsFn (GridField)."""
    if isinstance(h, H1Fn):
        return h.values()
    if isinstance(h, (H2Fn, AdditiveRkhsFn)):
        return GridField(h.values(), h.grid)
    raise TypeError(f"cannot reconstruct {type(h).__name__}")


def evaluate(h: AdditiveRkhsFn, i: int, j: int) -> float:
    n = h.grid.n
    if not (0 <= i <= n and 0 <= j <= n):
        raise IndexError(f"node ({i}, {j}) outside 0..{n}")
    return float(h.values()[i, j])


# --- JSON envelope ------------------------------------------------------------


def rkhs_to_json_dict(h) -> dict:
    if isinstance(h, H1Fn):
        return {"kind": "h1", "T": h.grid.T, "n": h.grid.n, "values": h.d.tolist()}
    if isinstance(h, H2Fn):
        return {"kind": "h2", "T": h.grid.T, "n": h.grid.n, "values": h.c.tolist()}
    if isinstance(h, AdditiveRkhsFn):
        return {
            "kind": "h2plus",
            "T": h.grid.T,
            "n": h.grid.n,
            "h1": h.h1.d.tolist(),
            "h2": h.h2.d.tolist(),
            "h3": h.h3.c.tolist(),
        }
    raise TypeError(f"cannot serialize {type(h).__name__}")


def rkhs_from_json_dict(d: dict):
    try:
        kind = d["kind"]
        grid = GridSpec(d["T"], d["n"])
        if kind == "h1":
            return H1Fn(np.asarray(d["values"], dtype=np.float64), grid)
        if kind == "h2":
            return H2Fn(np.asarray(d["values"], dtype=np.float64), grid)
        if kind == "h2plus":
            return AdditiveRkhsFn(
                H1Fn(np.asarray(d["h1"], dtype=np.float64), grid),
                H1Fn(np.asarray(d["h2"], dtype=np.float64), grid),
                H2Fn(np.asarray(d["h3"], dtype=np.float64), grid),
            )
    except KeyError as e:
        raise GridError(f"missing key {e} in RKHS JSON") from None
    raise GridError(f"unknown RKHS kind {kind!r}")
