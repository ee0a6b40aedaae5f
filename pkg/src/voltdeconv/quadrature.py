"""Discrete convolution operators on uniform grids.

All weight tables are product-integration rules: the unknown function is
replaced by its piecewise-linear interpolant through the grid nodes
(constant between 0 and the first node of a midpoint grid) and integrated
against the kernel cell by cell. On a uniform grid a cell's contribution
only depends on its distance to the evaluation point, so each table is
assembled from one set of moments per offset.

Moments are taken in the lag variable tau = t - s.  For a cell whose lag
interval is [p, q] (width d = q - p) the rules need

    M0 = int_p^q w(tau) dtau,    M1 = int_p^q (q - tau) w(tau) dtau,

which give the weights M0 - M1/d (left node) and M1/d (right node).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import hyp2f1
from scipy.linalg import toeplitz

from .errors import ConfigError
from .grid import ENDPOINT, MIDPOINT, Grid, GridSignal

__all__ = [
    "SMOOTH",
    "SINGULAR",
    "check_gamma",
    "KernelSpec",
    "ConvWeights",
    "corrected_trapezoid",
    "trapezoid_weights",
    "abel_weights",
    "kernel_weights",
    "kernel_derivative_weights",
    "convolution_weights",
    "forward_convolve",
]

SMOOTH = "smooth"
SINGULAR = "singular"

Func = Callable[[np.ndarray], np.ndarray]
MomentRule = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]


def check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 0.0 < gamma < 1.0:
        raise ConfigError(f"Abel exponent must lie in (0, 1), got {gamma}")
    return gamma


@dataclass(frozen=True)
class KernelSpec:
    """Convolution kernel, either smooth or weakly singular.

    Use the :meth:`smooth` and :meth:`singular` constructors. A singular
    kernel is ``t**(gamma - 1) / Gamma(gamma) + m(t)``.
    """

    variant: str
    k: Optional[Func] = field(default=None, repr=False)
    k_prime: Optional[Func] = field(default=None, repr=False)
    k0: Optional[float] = None
    gamma: Optional[float] = None
    m: Optional[Func] = field(default=None, repr=False)
    m_prime: Optional[Func] = field(default=None, repr=False)
    m0: Optional[float] = None

    @classmethod
    def smooth(cls, k: Func, k_prime: Func) -> "KernelSpec":
        k0 = float(k(np.float64(0.0)))
        if k0 == 0.0:
            raise ConfigError("smooth kernels need k(0) != 0")
        return cls(SMOOTH, k=k, k_prime=k_prime, k0=k0)

    @classmethod
    def singular(cls, gamma: float, m: Func, m_prime: Func) -> "KernelSpec":
        gamma = check_gamma(gamma)
        return cls(SINGULAR, gamma=gamma, m=m, m_prime=m_prime, m0=float(m(np.float64(0.0))))

    @property
    def is_singular(self) -> bool:
        return self.variant == SINGULAR

    def __call__(self, t):
        """Kernel value at lag ``t`` (``t > 0`` for the singular variant)."""
        if self.is_singular:
            t = np.asarray(t, dtype=float)
            return t ** (self.gamma - 1.0) / gamma_fn(self.gamma) + self.m(t)
        return self.k(t)

    def normalized(self) -> Tuple["KernelSpec", float]:
        """Return the kernel scaled to ``k(0) = 1`` together with the scale."""
        if self.is_singular or self.k0 == 1.0:
            return self, 1.0
        k, kp, c = self.k, self.k_prime, self.k0
        return KernelSpec(SMOOTH, k=lambda t: k(t) / c, k_prime=lambda t: kp(t) / c, k0=1.0), c


@dataclass(frozen=True, eq=False)
class ConvWeights:
    """Lower-triangular quadrature table; row ``i`` integrates over [0, t_i]."""

    grid: Grid
    w: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.w.setflags(write=False)

    def apply(self, v: GridSignal) -> GridSignal:
        if v.grid != self.grid:
            raise ConfigError("weights and signal live on different grids")
        return GridSignal(self.grid, self.w @ v.values)

    def row_sums(self) -> np.ndarray:
        return self.w.sum(axis=1)


def corrected_trapezoid(g: Func, g_prime_ends: Tuple[float, float], a: float, b: float,
                        n: int) -> float:
    """Composite trapezoid rule with the endpoint-derivative correction.

    ``g_prime_ends`` holds ``(g'(a), g'(b))``. The rule is exact for cubics.
    """
    if not b > a:
        raise ConfigError("need b > a")
    x = np.linspace(a, b, n + 1)
    y = np.asarray(g(x), dtype=float)
    h = (b - a) / n
    trap = h * (0.5 * y[0] + y[1:-1].sum() + 0.5 * y[-1])
    return float(trap + h * h / 12.0 * (g_prime_ends[0] - g_prime_ends[1]))


# --- moment rules -------------------------------------------------------------

def _unit_moments(p, q):
    d = q - p
    return d, 0.5 * d * d


def _abel_moments(gamma: float) -> MomentRule:
    """Exact moments of tau**(-gamma)."""
    a = 1.0 - gamma

    def rule(p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        d = q - p
        z = d / q
        # q**a - p**a without cancellation for thin cells far from the singularity
        with np.errstate(divide="ignore"):
            m0 = -(q ** a) * np.expm1(a * np.log1p(-z)) / a
        # int_0^d x (q - x)**(-gamma) dx
        m1 = 0.5 * d * d * q ** (-gamma) * hyp2f1(gamma, 2.0, 3.0, z)
        return m0, m1

    return rule


def _smooth_moments(w: Func, w_prime: Func) -> MomentRule:
    """Corrected-trapezoid moments of a smooth weight (exact for cubic w)."""

    def rule(p, q):
        d = q - p
        wp, wq = w(p), w(q)
        dp, dq = w_prime(p), w_prime(q)
        m0 = 0.5 * d * (wp + wq) + d * d / 12.0 * (dp - dq)
        m1 = 0.5 * d * d * wp + d * d / 12.0 * (wq - wp + d * dp)
        return m0, m1

    return rule


def _derivative_moments(w: Func, w_prime: Func) -> MomentRule:
    """Moments of ``w_prime`` using its antiderivative ``w`` (exact M0)."""

    def rule(p, q):
        d = q - p
        wp, wq = w(p), w(q)
        m0 = wq - wp
        m1 = 0.5 * d * (wq - wp) + d * d / 12.0 * (w_prime(p) - w_prime(q))
        return m0, m1

    return rule


def _assemble(grid: Grid, rule: MomentRule) -> ConvWeights:
    x = grid.nodes
    size = grid.size
    dx = grid.spacing
    # left[k], right[k]: weights of the left/right node of the cell at lag k
    left = np.zeros(size + 1)
    right = np.zeros(size + 1)
    if size > 1:
        k = np.arange(1, size, dtype=float)
        m0, m1 = (np.broadcast_to(m, k.shape) for m in rule((k - 1.0) * dx, k * dx))
        left[1:size] = m0 - m1 / dx
        right[1:size] = m1 / dx
    lag = np.arange(size)
    w = toeplitz(left[lag] + right[lag + 1], np.zeros(size))
    # the first node has no cell to its left
    w[:, 0] = left[:size]
    if x[0] > 0.0:
        # constant extension of the first value over [0, x_0]
        m0, _ = rule(x - x[0], x)
        w[:, 0] += np.broadcast_to(m0, x.shape)
    return ConvWeights(grid, w)


# --- public weight tables -----------------------------------------------------

def trapezoid_weights(grid: Grid) -> ConvWeights:
    """Weights for ``int_0^{t_i} v(s) ds`` with piecewise-linear ``v``."""
    return _assemble(grid, _unit_moments)


def abel_weights(gamma: float, grid: Grid) -> ConvWeights:
    """Product weights for ``int_0^{t_i} v(s) (t_i - s)**(-gamma) ds``.

    Exact for ``v`` piecewise linear on the grid (constant before the first
    node of a midpoint grid).
    """
    return _assemble(grid, _abel_moments(check_gamma(gamma)))


def kernel_weights(k: Func, k_prime: Func, grid: Grid) -> ConvWeights:
    """Weights for ``int_0^{t_i} k(t_i - s) v(s) ds`` with smooth ``k``."""
    return _assemble(grid, _smooth_moments(k, k_prime))


def kernel_derivative_weights(k: Func, k_prime: Func, grid: Grid) -> ConvWeights:
    """Weights for ``int_0^{t_i} k'(t_i - s) v(s) ds``.

    Cell integrals of ``k'`` come from ``k`` itself, so for ``v = 1`` the row
    sums telescope to ``k(t_i) - k(0)`` exactly.
    """
    return _assemble(grid, _derivative_moments(k, k_prime))


def convolution_weights(kernel: KernelSpec, grid: Grid) -> ConvWeights:
    """Discretisation of ``u -> kernel * u`` on ``grid``."""
    if kernel.is_singular:
        g = kernel.gamma
        abel = abel_weights(1.0 - g, grid).w / gamma_fn(g)
        return ConvWeights(grid, abel + kernel_weights(kernel.m, kernel.m_prime, grid).w)
    return kernel_weights(kernel.k, kernel.k_prime, grid)


def _fine_grid(grid: Grid, fine_factor: int) -> Tuple[Grid, np.ndarray]:
    """Refined grid containing every node of ``grid``, plus their indices."""
    if int(fine_factor) != fine_factor or fine_factor < 1:
        raise ConfigError(f"fine_factor must be a positive integer, got {fine_factor}")
    r = int(fine_factor)
    if grid.style == ENDPOINT:
        return Grid(grid.t_end, grid.n * r, ENDPOINT), np.arange(grid.size) * r
    if r % 2 == 1:
        # odd refinement of a midpoint grid keeps the coarse midpoints
        return Grid(grid.t_end, grid.n * r, MIDPOINT), np.arange(grid.size) * r + r // 2
    return Grid(grid.t_end, grid.n * r, ENDPOINT), np.arange(grid.size) * r + r // 2


def forward_convolve(kernel: KernelSpec, u: GridSignal, fine_factor: int = 4) -> GridSignal:
    """Sample ``int_0^t k(t - s) u(s) ds`` at the nodes of ``u``.

    ``u`` is interpolated onto a grid refined ``fine_factor`` times and
    integrated there with product weights; the weak singularity of an Abel
    kernel is absorbed into exact cell moments and never sampled.
    """
    if kernel.is_singular:
        check_gamma(kernel.gamma)
    fine, idx = _fine_grid(u.grid, fine_factor)
    u_fine = u.eval_interp(fine.nodes)
    w = convolution_weights(kernel, fine).w[idx]
    return GridSignal(u.grid, w @ u_fine)
