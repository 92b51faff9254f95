"""Uniform radial grid on [0, T] with defining function x = exp(-t).

On this grid the degenerate vector field x d/dx is exactly -d/dt, so the
weighted norms and decay fits below are plain finite-difference objects.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RadialGrid",
    "GridFunction",
    "DecayTooFast",
    "d1",
    "d2",
    "weighted_sup_norm",
    "decay_rate",
    "write_csv",
]


class DecayTooFast(ValueError):
    """The tail of a grid function sits below the truncation floor."""


@dataclass(frozen=True)
class RadialGrid:
    T: float = 16.0
    N: int = 4000
    t: np.ndarray = field(init=False, repr=False, compare=False)
    x: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"truncation radius T={self.T} must be positive")
        if int(self.N) != self.N or self.N < 16:
            raise ValueError(f"N={self.N} must be an integer >= 16")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "N", int(self.N))
        t = np.arange(self.N + 1) * self.h
        t.setflags(write=False)
        x = np.exp(-t)
        x.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)

    @property
    def h(self) -> float:
        return self.T / self.N

    def sample(self, fn) -> "GridFunction":
        return GridFunction(fn(self.t), self)

    def zeros(self) -> "GridFunction":
        return GridFunction(np.zeros(self.N + 1), self)


@dataclass(frozen=True)
class GridFunction:
    values: np.ndarray
    grid: RadialGrid

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.N + 1,):
            raise ValueError(f"expected {self.grid.N + 1} samples, got shape {vals.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return len(self.values)

    def _wrap(self, other, op):
        rhs = other.values if isinstance(other, GridFunction) else other
        return GridFunction(op(self.values, rhs), self.grid)

    def __add__(self, other):
        return self._wrap(other, np.add)

    def __sub__(self, other):
        return self._wrap(other, np.subtract)

    def __mul__(self, other):
        return self._wrap(other, np.multiply)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(-self.values, self.grid)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def diff1(f: np.ndarray, h: float) -> np.ndarray:
    """First derivative: central inside, reflected centre, one-sided at T."""
    out = np.empty_like(f)
    out[0] = 0.0
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)
    return out


def diff2(f: np.ndarray, h: float) -> np.ndarray:
    """Second derivative with the same boundary treatment as :func:`diff1`."""
    out = np.empty_like(f)
    h2 = h * h
    out[0] = 2.0 * (f[1] - f[0]) / h2
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h2
    out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / h2
    return out


def d1(f: GridFunction) -> GridFunction:
    return GridFunction(diff1(f.values, f.grid.h), f.grid)


def d2(f: GridFunction) -> GridFunction:
    return GridFunction(diff2(f.values, f.grid.h), f.grid)


def weighted_sup_norm(f: GridFunction, gamma: float, order: int = 0) -> float:
    """Discrete x^gamma Lambda^order norm: max_j sup |(x d/dx)^j (x^-gamma f)|.

    Only the derivative ladder is kept; there is no Holder seminorm.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"order={order} must be 0, 1 or 2")
    g = f.grid
    scaled = f.values * np.exp(gamma * g.t)
    norms = [np.max(np.abs(scaled))]
    if order >= 1:
        norms.append(np.max(np.abs(diff1(scaled, g.h))))
    if order >= 2:
        norms.append(np.max(np.abs(diff2(scaled, g.h))))
    return float(max(norms))


def decay_rate(f: GridFunction, window: float = 0.25, floor: float = 1e-13) -> float:
    """Exponent p in |f| ~ x^p, fitted on the tail.

    Nodes with |f| < ``floor`` are discarded first; the fit then uses the
    outermost ``window`` fraction of what remains.
    """
    if not 0 < window <= 1:
        raise ValueError(f"window={window} must lie in (0, 1]")
    g = f.grid
    vals = np.abs(f.values)
    idx = np.nonzero((vals >= floor) & (g.t > 0))[0]
    count = math.ceil(window * len(idx))
    if count < 3:
        raise DecayTooFast("decay too fast to estimate: tail is below the floor")
    idx = idx[-count:]
    logx = -g.t[idx]
    slope = np.polyfit(logx, np.log(vals[idx]), 1)[0]
    return float(slope)


def write_csv(path, f: GridFunction, name: str = "f") -> None:
    """Columns i, t, x, <name>; 17 significant digits, LF line endings."""
    g = f.grid
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["i", "t", "x", name])
        for i in range(g.N + 1):
            writer.writerow([i, f"{g.t[i]:.17g}", f"{g.x[i]:.17g}", f"{f.values[i]:.17g}"])
