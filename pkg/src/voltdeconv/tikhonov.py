"""Zeroth-order Tikhonov regularisation with a Morozov parameter choice.

The baseline minimises ``||K u - f||^2 + eps ||u||^2`` for the discretised
convolution operator ``K`` and picks ``eps`` so that the grid-weighted
residual equals ``c * delta``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Tuple, Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ConfigError, NoCrossingError, NumericError
from .grid import GridSignal
from .quadrature import ConvWeights

__all__ = [
    "TikhonovConfig",
    "MorozovResult",
    "tikhonov_solve",
    "discrepancy",
    "morozov_select",
]

log = logging.getLogger(__name__)

Operator = Union[ConvWeights, np.ndarray]

# decades added on each side of the bracket before giving up
_EXPANSION_DECADES = 4


@dataclass(frozen=True)
class TikhonovConfig:
    delta: float
    c_morozov: float = 1.0
    eps_bracket: Tuple[float, float] = (1e-12, 1e2)
    tol_rel: float = 1e-3
    max_iter: int = 60

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigError(f"noise level must be positive, got {self.delta}")
        if self.c_morozov < 1:
            raise ConfigError(f"Morozov factor must be >= 1, got {self.c_morozov}")
        lo, hi = self.eps_bracket
        if not 0 < lo < hi:
            raise ConfigError(f"bad bracket {self.eps_bracket}")
        if not 0 < self.tol_rel < 0.1:
            raise ConfigError(f"tol_rel must lie in (0, 0.1), got {self.tol_rel}")

    @property
    def target(self) -> float:
        return self.c_morozov * self.delta


@dataclass
class MorozovResult:
    eps: float
    solution: GridSignal
    discrepancy: float
    # (eps, discrepancy, ||u_eps||_2) for every evaluated parameter, in order
    trajectory: List[Tuple[float, float, float]] = field(default_factory=list)

    def __iter__(self):
        return iter((self.eps, self.solution))


def _matrix(K: Operator) -> np.ndarray:
    return K.w if isinstance(K, ConvWeights) else np.asarray(K, dtype=float)


def _rhs(K: Operator, f_delta: GridSignal) -> np.ndarray:
    if isinstance(K, ConvWeights) and f_delta.grid != K.grid:
        return np.asarray(f_delta.eval_interp(K.grid.nodes))
    return f_delta.values


def tikhonov_solve(K: Operator, f_delta: GridSignal, eps: float) -> GridSignal:
    """Minimiser of ``||K u - f||^2 + eps ||u||^2`` via the normal equations.

    If ``f_delta`` lives on a different grid than ``K`` it is interpolated
    onto the operator's grid first.
    """
    if not eps > 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    a = _matrix(K)
    f = _rhs(K, f_delta)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(f)) and math.isfinite(eps)):
        raise NumericError("non-finite operator, data or parameter")
    normal = a.T @ a
    normal[np.diag_indices_from(normal)] += eps
    u = cho_solve(cho_factor(normal, lower=True), a.T @ f)
    grid = K.grid if isinstance(K, ConvWeights) else f_delta.grid
    return GridSignal(grid, u)


def discrepancy(K: Operator, u: GridSignal, f_delta: GridSignal) -> float:
    """Grid-weighted l2 residual ``sqrt(T/n) * ||K u - f||_2``."""
    r = _matrix(K) @ u.values - _rhs(K, f_delta)
    return float(np.linalg.norm(r) * math.sqrt(u.grid.spacing))


class _Filtered:
    """Tikhonov solutions for many ``eps`` from one SVD of ``K``."""

    def __init__(self, a: np.ndarray, f: np.ndarray, weight: float):
        self.a = a
        self.f = f
        self.weight = weight
        u, self.s, self.vt = np.linalg.svd(a)
        self.beta = u.T @ f

    def __call__(self, eps: float) -> Tuple[float, float, np.ndarray]:
        x = self.vt.T @ (self.s / (self.s ** 2 + eps) * self.beta)
        disc = float(np.linalg.norm(self.a @ x - self.f) * self.weight)
        return disc, float(np.linalg.norm(x)), x


def morozov_select(K: Operator, f_delta: GridSignal, cfg: TikhonovConfig) -> MorozovResult:
    """Choose ``eps`` so that the discrepancy equals ``c * delta``.

    Bisection on ``log(eps)``; the bracket is widened by up to four decades
    on either side when it does not straddle the target.
    """
    a = _matrix(K)
    f = _rhs(K, f_delta)
    grid = K.grid if isinstance(K, ConvWeights) else f_delta.grid
    solver = _Filtered(a, f, math.sqrt(grid.spacing))
    target = cfg.target
    trajectory: List[Tuple[float, float, float]] = []

    def evaluate(eps):
        disc, norm, _ = solver(eps)
        trajectory.append((eps, disc, norm))
        return disc

    lo, hi = cfg.eps_bracket
    lo_limit = lo * 10.0 ** -_EXPANSION_DECADES
    hi_limit = hi * 10.0 ** _EXPANSION_DECADES
    d_hi = evaluate(hi)
    while d_hi < target:
        if hi >= hi_limit:
            raise NoCrossingError(
                f"discrepancy {d_hi:.3g} stays below {target:.3g}; delta too large for the data"
            )
        lo, hi = hi, hi * 10.0
        d_hi = evaluate(hi)
    d_lo = evaluate(lo)
    while d_lo > target:
        if lo <= lo_limit:
            raise NoCrossingError(f"discrepancy {d_lo:.3g} stays above {target:.3g}")
        hi, lo = lo, lo / 10.0
        d_lo = evaluate(lo)

    eps, disc = lo, d_lo
    for _ in range(cfg.max_iter):
        eps = math.sqrt(lo * hi)
        disc = evaluate(eps)
        if abs(disc - target) <= cfg.tol_rel * target:
            break
        if disc < target:
            lo = eps
        else:
            hi = eps
    else:
        log.warning("Morozov bisection hit %d iterations (disc=%.4g, target=%.4g)",
                    cfg.max_iter, disc, target)

    u = tikhonov_solve(K, f_delta, eps)
    return MorozovResult(eps, u, discrepancy(K, u, f_delta), trajectory)
