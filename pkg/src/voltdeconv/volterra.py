"""Second-kind Volterra systems and the full deconvolution pipeline.

A convolution operator with ``k(0) = 1`` factors as ``A (I + S)`` where ``A``
integrates and ``S u = k' * u``. For ``k = t**(gamma-1)/Gamma(gamma) + m``,
``A`` is the Abel operator and

    S u = 1/Gamma(1-gamma) int_0^t (m(0) u(s) + (m' * u)(s)) (t-s)**(-gamma) ds.

Only ``A`` is ill-posed; it is replaced by a regulariser and the remaining
well-posed triangular system is solved exactly.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gamma as gamma_fn

from .errors import ConfigError, SingularSystemError
from .grid import Grid, GridSignal
from .quadrature import (
    KernelSpec,
    abel_weights,
    convolution_weights,
    kernel_derivative_weights,
)
from .regularize import (
    DERIVATIVE_OF_ABEL,
    RegConfig,
    abel_inverse_exact,
    boundary_layer,
    fractional_regularizer,
    stable_derivative,
)
from .report import DeconvReport

__all__ = [
    "SecondKindSystem",
    "build_smooth_S",
    "build_singular_S",
    "solve_second_kind",
    "deconvolve",
]

log = logging.getLogger(__name__)

# heuristic guard on the diagonal of I + S; reported, never fatal
DIAGONAL_WARN = 0.5
PIVOT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SecondKindSystem:
    """Discretisation of ``(diag_shift * I + S) u = g`` on ``grid``."""

    grid: Grid
    s_matrix: np.ndarray = field(repr=False)
    diag_shift: float = 1.0
    warnings: List[str] = field(default_factory=list)

    def __post_init__(self):
        s = np.array(self.s_matrix, dtype=float)
        if s.shape != (self.grid.size, self.grid.size):
            raise ConfigError(f"S must be {self.grid.size}x{self.grid.size}, got {s.shape}")
        if np.any(np.triu(s, 1) != 0.0):
            raise ConfigError("S must be lower triangular (causal)")
        s.setflags(write=False)
        object.__setattr__(self, "s_matrix", s)
        low = float(np.min(self.diag_shift + np.diag(s)))
        if low < DIAGONAL_WARN:
            msg = f"smallest diagonal entry of I + S is {low:.3g} < {DIAGONAL_WARN}"
            self.warnings.append(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=3)

    @property
    def matrix(self) -> np.ndarray:
        return self.diag_shift * np.eye(self.grid.size) + self.s_matrix

    @property
    def well_conditioned(self) -> bool:
        return not self.warnings

    def apply(self, u: GridSignal) -> GridSignal:
        """``(I + S) u``."""
        return GridSignal(self.grid, self.diag_shift * u.values + self.s_matrix @ u.values)


def build_smooth_S(kernel: KernelSpec, grid: Grid) -> SecondKindSystem:
    """``S u = int_0^t k'(t - s) u(s) ds`` for ``k`` scaled to ``k(0) = 1``."""
    if kernel.is_singular:
        raise ConfigError("build_smooth_S needs a smooth kernel")
    kn, _ = kernel.normalized()
    w = kernel_derivative_weights(kn.k, kn.k_prime, grid)
    return SecondKindSystem(grid, np.array(w.w))


def build_singular_S(kernel: KernelSpec, grid: Grid) -> SecondKindSystem:
    """``S = A^{-1} (m *)`` for ``k = t**(gamma-1)/Gamma(gamma) + m``.

    The inner smooth convolution and the outer Abel integral are both
    product-integration tables on the same grid, so ``S`` is their product.
    """
    if not kernel.is_singular:
        raise ConfigError("build_singular_S needs a singular kernel")
    g = kernel.gamma
    inner = kernel_derivative_weights(kernel.m, kernel.m_prime, grid).w
    inner = inner + kernel.m0 * np.eye(grid.size)
    s = abel_weights(g, grid).w @ inner / gamma_fn(1.0 - g)
    return SecondKindSystem(grid, np.tril(s))


def solve_second_kind(system: SecondKindSystem, g: GridSignal) -> GridSignal:
    """Forward substitution on the lower-triangular system ``(I + S) u = g``."""
    if g.grid != system.grid:
        raise ConfigError("right-hand side and system live on different grids")
    a = system.matrix
    pivots = np.abs(np.diag(a))
    if np.any(pivots < PIVOT_TOL):
        raise SingularSystemError(f"pivot {pivots.min():.3g} below {PIVOT_TOL}")
    u = solve_triangular(a, g.values, lower=True, check_finite=True)
    return GridSignal(system.grid, u)


def deconvolve(kernel: KernelSpec, f_delta: GridSignal, cfg: RegConfig, grid: Grid,
               u_exact: Optional[GridSignal] = None,
               f_prime: Optional[Callable] = None,
               order: str = DERIVATIVE_OF_ABEL) -> DeconvReport:
    """Solve ``k * u = f`` from noisy ``f_delta`` as ``(I + S)^{-1} R f_delta``.

    Parameters
    ----------
    kernel : KernelSpec
        Smooth or weakly singular kernel.
    f_delta : GridSignal
        Noisy data, usually on a finer endpoint grid than ``grid``.
    cfg : RegConfig
        Noise level and step of the stable differentiator.
    grid : Grid
        Solution grid.
    u_exact : GridSignal, optional
        When given, the report carries relative and sup errors.
    f_prime : callable, optional
        Exact derivative of the clean data. Replaces the regulariser by the
        exact inverse of ``A`` (noise-free reference runs).
    order : str
        Composition order of the fractional regulariser, see
        :func:`~voltdeconv.regularize.fractional_regularizer`.

    Returns
    -------
    DeconvReport
    """
    if f_delta.grid.t_end != grid.t_end:
        raise ConfigError("data and solution grids cover different intervals")
    meta = {"kernel": kernel.variant, "path": "exact" if f_prime else "regularized"}
    start = time.perf_counter()
    if kernel.is_singular:
        if f_prime is not None:
            g = abel_inverse_exact(f_prime, kernel.gamma, grid)
        else:
            g = fractional_regularizer(f_delta, kernel.gamma, cfg, grid, order=order)
            meta["order"] = order
        system = build_singular_S(kernel, grid)
        meta["scale"] = 1.0
    else:
        _, scale = kernel.normalized()
        if f_prime is not None:
            g = grid.sample(f_prime) * (1.0 / scale)
        else:
            g = stable_derivative(f_delta * (1.0 / scale), _scaled(cfg, scale), grid)
        system = build_smooth_S(kernel, grid)
        meta["scale"] = scale
    u = solve_second_kind(system, g)
    wall = time.perf_counter() - start

    residual = convolution_weights(kernel, grid).w @ u.values - f_delta.eval_interp(grid.nodes)
    h = float("nan") if f_prime is not None else cfg.step
    if f_prime is None:
        meta["implied_m2"] = cfg.implied_m2
        meta["boundary_nodes"] = int(boundary_layer(grid, h).sum())
        meta["boundary"] = "constant extension of the nearest interior estimate"
    meta["conditioning_warnings"] = list(system.warnings)
    report = DeconvReport(
        method="deconv",
        solution=u,
        residual_sup=float(np.max(np.abs(residual))),
        residual_l2=float(np.linalg.norm(residual) * np.sqrt(grid.spacing)),
        h_used=h,
        wall_time=wall,
        metadata=meta,
    )
    if u_exact is not None:
        report.score(u_exact)
    log.debug("deconvolve: n=%d h=%s %.2f ms", grid.n, h, 1e3 * wall)
    return report


def _scaled(cfg: RegConfig, scale: float) -> RegConfig:
    if scale == 1.0:
        return cfg
    c = abs(scale)
    return RegConfig(cfg.delta / c, None if cfg.m2 is None else cfg.m2 / c, cfg.h_override)
