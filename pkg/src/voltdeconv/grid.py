"""Uniform grids on [0, T] and functions sampled on them.

Two node layouts are used throughout the package:

* ``midpoint``: t_i = (i - 1/2) T/n, i = 1..n (solution grids)
* ``endpoint``: t_i = i T/n, i = 0..n (data grids)

:class:`GridSignal` couples a grid with one value per node and provides the
piecewise-linear evaluation and the discrete norms every other module relies
on.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Union

import numpy as np

from .errors import ConfigError, DomainError, MetricError

__all__ = ["Grid", "GridSignal", "MIDPOINT", "ENDPOINT"]

MIDPOINT = "midpoint"
ENDPOINT = "endpoint"

# Relative slack when checking that an evaluation point lies in [0, T];
# t +/- h is formed in floating point and may overshoot T by a few ulps.
_DOMAIN_SLACK = 1e-12

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class Grid:
    """Uniform grid with ``n`` cells on ``[0, t_end]``."""

    t_end: float
    n: int
    style: str = MIDPOINT

    def __post_init__(self):
        if not self.t_end > 0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n}")
        if self.style not in (MIDPOINT, ENDPOINT):
            raise ConfigError(f"unknown grid style {self.style!r}")
        object.__setattr__(self, "t_end", float(self.t_end))
        object.__setattr__(self, "n", int(self.n))

    @property
    def spacing(self) -> float:
        return self.t_end / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        if self.style == MIDPOINT:
            t = (np.arange(1, self.n + 1) - 0.5) * self.spacing
        else:
            t = np.arange(0, self.n + 1) * self.spacing
        t.setflags(write=False)
        return t

    @property
    def size(self) -> int:
        return self.n if self.style == MIDPOINT else self.n + 1

    def sample(self, fn: Callable[[np.ndarray], np.ndarray]) -> "GridSignal":
        """Evaluate a vectorised callable at the nodes."""
        values = np.broadcast_to(np.asarray(fn(self.nodes), dtype=float), (self.size,))
        return GridSignal(self, values)

    def check_domain(self, t: ArrayLike) -> None:
        t = np.asarray(t, dtype=float)
        slack = _DOMAIN_SLACK * self.t_end
        if np.any(~np.isfinite(t)) or np.any(t < -slack) or np.any(t > self.t_end + slack):
            raise DomainError(f"evaluation point outside [0, {self.t_end}]")


@dataclass(frozen=True, eq=False)
class GridSignal:
    """Samples of a real function at the nodes of ``grid``."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise ConfigError(
                f"expected {self.grid.size} values for {self.grid}, got shape {v.shape}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def eval_interp(self, t: ArrayLike) -> ArrayLike:
        """Piecewise-linear interpolation through the node values.

        Between ``0`` and the first node (and between the last node and
        ``T``) the nearest node value is used. Raises :class:`DomainError`
        for points outside ``[0, T]``.
        """
        self.grid.check_domain(t)
        out = np.interp(t, self.grid.nodes, self.values)
        return float(out) if np.ndim(out) == 0 else out

    def resample(self, grid: Grid) -> "GridSignal":
        if grid.t_end != self.grid.t_end:
            raise ConfigError("cannot resample onto a grid with a different interval")
        return GridSignal(grid, np.interp(grid.nodes, self.grid.nodes, self.values))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l2_norm(self) -> float:
        """Grid-weighted l2 norm, an approximation of the L2(0, T) norm."""
        return float(np.linalg.norm(self.values) * np.sqrt(self.grid.spacing))

    def rel_error_l2(self, exact: "GridSignal") -> float:
        """``||self - exact||_2 / ||exact||_2`` over the node values."""
        self._check_same_grid(exact)
        denom = np.linalg.norm(exact.values)
        if denom == 0.0:
            raise MetricError("relative error undefined for an identically zero reference")
        return float(np.linalg.norm(self.values - exact.values) / denom)

    def sup_error(self, exact: "GridSignal") -> float:
        self._check_same_grid(exact)
        return float(np.max(np.abs(self.values - exact.values)))

    def _check_same_grid(self, other: "GridSignal") -> None:
        if other.grid != self.grid:
            raise ConfigError("signals live on different grids")

    # arithmetic on signals sharing a grid; convenient for noise and residuals
    def __add__(self, other):
        if isinstance(other, GridSignal):
            self._check_same_grid(other)
            return GridSignal(self.grid, self.values + other.values)
        return GridSignal(self.grid, self.values + float(other))

    def __sub__(self, other):
        if isinstance(other, GridSignal):
            self._check_same_grid(other)
            return GridSignal(self.grid, self.values - other.values)
        return GridSignal(self.grid, self.values - float(other))

    def __mul__(self, c):
        return GridSignal(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return GridSignal(self.grid, -self.values)

    def to_csv(self, path: Union[str, Path, None] = None) -> str:
        """Write ``t,value`` rows with 17 significant digits; returns the text."""
        buf = io.StringIO()
        buf.write("t,value\n")
        for t, v in zip(self.grid.nodes, self.values):
            buf.write(f"{t:.17g},{v:.17g}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="\n") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "GridSignal":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ConfigError(f"{path}: no data rows")
        t = np.array([float(r["t"]) for r in rows])
        v = np.array([float(r["value"]) for r in rows])
        # the horizon is rebuilt from rounded nodes; snap off the last-ulp noise
        if t[0] == 0.0:
            grid = Grid(float(f"{t[-1]:.12g}"), len(t) - 1, ENDPOINT)
        else:
            grid = Grid(float(f"{t[-1] + t[0]:.12g}"), len(t), MIDPOINT)
        if not np.allclose(grid.nodes, t, rtol=0, atol=1e-12 * grid.t_end):
            raise ConfigError(f"{path}: nodes are not a uniform midpoint/endpoint grid")
        return cls(grid, v)
