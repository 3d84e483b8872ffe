"""Builtin trends and boundaries, so experiments need no external data.

Trend names can be joined with ``+`` (``"tsquared+product"``); every trend
vanishes at the origin.

=========  =====================
zero       0
linear     s + t
tsquared   s^2  (first axis only)
product    s * t
=========  =====================
"""

from __future__ import annotations

import numpy as np

from .grid import GridField, GridSpec
from .rkhs import AdditiveRkhsFn, to_rkhs

TRENDS = {
    "zero": lambda s, t: np.zeros_like(s),
    "linear": lambda s, t: s + t,
    "tsquared": lambda s, t: s * s,
    "product": lambda s, t: s * t,
}

BOUNDARIES = ("constant", "linear")


def trend_field(name: str, grid: GridSpec, scale: float = 1.0) -> GridField:
    S, T = grid.mesh()
    total = np.zeros_like(S)
    for part in name.split("+"):
        part = part.strip()
        if part not in TRENDS:
            raise KeyError(f"unknown trend {part!r}; choose from {sorted(TRENDS)}")
        total = total + TRENDS[part](S, T)
    return GridField(scale * total, grid)


def builtin_trend(name: str, grid: GridSpec, scale: float = 1.0) -> AdditiveRkhsFn:
    return to_rkhs(trend_field(name, grid, scale))


def builtin_boundary(kind: str, grid: GridSpec, value: float = 1.0, slope: float = 0.0) -> GridField:
    """``constant``: u = value; ``linear``: u = value + slope * (s + t)."""
    if kind == "constant":
        return GridField.constant(value, grid)
    if kind == "linear":
        return GridField.from_function(lambda s, t: value + slope * (s + t), grid)
    raise KeyError(f"unknown boundary {kind!r}; choose from {BOUNDARIES}")
