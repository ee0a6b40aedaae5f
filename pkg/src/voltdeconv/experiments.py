"""Test problems, the bounded sinusoidal noise model and comparison sweeps."""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import ConfigError, DeconvError
from .grid import ENDPOINT, MIDPOINT, Grid, GridSignal
from .quadrature import KernelSpec, convolution_weights, forward_convolve
from .regularize import RegConfig
from .report import DeconvReport
from .tikhonov import TikhonovConfig, morozov_select
from .volterra import deconvolve

__all__ = [
    "TestProblem",
    "NoiseSpec",
    "exponential_problem",
    "abel_problem",
    "get_problem",
    "PROBLEMS",
    "make_noise",
    "data_grid",
    "solution_grid",
    "run_deconv",
    "run_tikhonov",
    "SeedResult",
    "Comparison",
    "run_comparison",
    "sweep_h",
    "worker_count",
]

log = logging.getLogger(__name__)

Func = Callable[[np.ndarray], np.ndarray]

# solution grids have n cells, data grids DATA_REFINE * n cells
DATA_REFINE = 4
GATE_N = 200
GATE_TOL = 1e-3


@dataclass(frozen=True)
class TestProblem:
    """Kernel with a known solution/data pair on ``[0, t_end]``."""

    __test__ = False  # not a pytest class

    name: str
    kernel: KernelSpec
    u_exact: Func = field(repr=False)
    f_exact: Func = field(repr=False)
    f_prime: Optional[Func] = field(default=None, repr=False)
    t_end: float = 1.0
    params: Dict[str, float] = field(default_factory=dict)

    def consistency_error(self, n: int = GATE_N) -> float:
        """Sup distance between ``kernel * u_exact`` and ``f_exact`` at ``n`` nodes."""
        grid = Grid(self.t_end, n, MIDPOINT)
        f = forward_convolve(self.kernel, grid.sample(self.u_exact))
        return float(np.max(np.abs(f.values - self.f_exact(grid.nodes))))

    def check(self, n: int = GATE_N, tol: float = GATE_TOL) -> "TestProblem":
        err = self.consistency_error(n)
        if err > tol:
            raise ConfigError(f"problem {self.name!r}: forward model off by {err:.3g} > {tol}")
        return self


def exponential_problem(a: float = 1.0, b: float = 2 * math.pi, t_end: float = 1.0) -> TestProblem:
    """``k(t) = exp(a t)`` with ``u(t) = sin(b t) + cos(b t)``."""
    c = a * a + b * b

    def u(t):
        return np.sin(b * t) + np.cos(b * t)

    def f(t):
        return ((b + a) * (np.exp(a * t) - np.cos(b * t)) + (b - a) * np.sin(b * t)) / c

    def fp(t):
        return ((b + a) * (a * np.exp(a * t) + b * np.sin(b * t)) + (b - a) * b * np.cos(b * t)) / c

    kernel = KernelSpec.smooth(lambda t: np.exp(a * t), lambda t: a * np.exp(a * t))
    return TestProblem("exponential", kernel, u, f, fp, t_end, {"a": a, "b": b})


def abel_problem(gamma: float = 0.1, t_end: float = 1.0) -> TestProblem:
    """``k(t) = t**(gamma-1)/Gamma(gamma) + t**2`` with ``u(t) = 1 - t**2``."""
    g = gamma
    c = 2.0 / ((1.0 + g) * (2.0 + g))
    g1 = gamma_fn(1.0 + g)

    def u(t):
        return 1.0 - t * t

    def f(t):
        t = np.asarray(t, dtype=float)
        return t ** g / g1 * (1.0 - c * t * t) + t ** 3 / 3.0 * (1.0 - t * t / 10.0)

    def fp(t):
        t = np.asarray(t, dtype=float)
        return (g * t ** (g - 1.0) - c * (g + 2.0) * t ** (g + 1.0)) / g1 + t * t - t ** 4 / 6.0

    kernel = KernelSpec.singular(g, lambda t: t * t, lambda t: 2.0 * t)
    return TestProblem("abel", kernel, u, f, fp, t_end, {"gamma": g})


PROBLEMS: Dict[str, Callable[..., TestProblem]] = {
    "exponential": exponential_problem,
    "abel": abel_problem,
}


def get_problem(name: str, **params) -> TestProblem:
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ConfigError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
    return factory(**params).check()


@dataclass(frozen=True)
class NoiseSpec:
    """Seeded sum of sinusoids rescaled to sup norm ``cap``."""

    seed: int
    cap: float
    n_components: int = 5
    freq_range: Tuple[float, float] = (2 * math.pi, 40 * math.pi)

    def perturbation(self, t: np.ndarray) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        k = self.n_components
        lo, hi = self.freq_range
        omega = np.exp(rng.uniform(math.log(lo), math.log(hi), k))
        amp = rng.uniform(0.25, 1.0, k)
        phase = rng.uniform(0.0, 2 * math.pi, k)
        e = (amp * np.sin(np.outer(t, omega) + phase)).sum(axis=1)
        return e * (self.cap / np.max(np.abs(e)))


def make_noise(f: GridSignal, spec: NoiseSpec) -> GridSignal:
    """``f + e`` with ``max |e| = spec.cap`` over the nodes of ``f``."""
    if spec.cap < 0:
        raise ConfigError(f"noise cap must be non-negative, got {spec.cap}")
    if spec.cap == 0:
        return f
    return GridSignal(f.grid, f.values + spec.perturbation(f.grid.nodes))


def solution_grid(problem: TestProblem, n: int) -> Grid:
    return Grid(problem.t_end, n, MIDPOINT)


def data_grid(problem: TestProblem, n: int) -> Grid:
    return Grid(problem.t_end, DATA_REFINE * n, ENDPOINT)


def noisy_data(problem: TestProblem, n: int, delta: float, seed: int) -> GridSignal:
    f = data_grid(problem, n).sample(problem.f_exact)
    return make_noise(f, NoiseSpec(seed, delta))


def run_deconv(problem: TestProblem, f_delta: GridSignal, grid: Grid, cfg: RegConfig,
               exact_path: bool = False) -> DeconvReport:
    return deconvolve(
        problem.kernel, f_delta, cfg, grid,
        u_exact=grid.sample(problem.u_exact),
        f_prime=problem.f_prime if exact_path else None,
    )


def run_tikhonov(problem: TestProblem, f_delta: GridSignal, grid: Grid, delta: float,
                 c_morozov: float = 1.0) -> DeconvReport:
    """Morozov-selected Tikhonov solution on ``grid`` for the same data."""
    K = convolution_weights(problem.kernel, grid)
    start = time.perf_counter()
    sel = morozov_select(K, f_delta, TikhonovConfig(delta, c_morozov=c_morozov))
    wall = time.perf_counter() - start
    residual = K.w @ sel.solution.values - f_delta.eval_interp(grid.nodes)
    report = DeconvReport(
        method="tikhonov",
        solution=sel.solution,
        residual_sup=float(np.max(np.abs(residual))),
        residual_l2=float(np.linalg.norm(residual) * math.sqrt(grid.spacing)),
        eps_used=sel.eps,
        wall_time=wall,
        metadata={
            "stabilizer": "identity (zeroth order)",
            "discrepancy_norm": "grid-weighted l2",
            "c_morozov": c_morozov,
            "trajectory": sel.trajectory,
        },
    )
    return report.score(grid.sample(problem.u_exact))


def worker_count() -> int:
    """Thread cap from ``DECONV_THREADS`` (default: CPU count, at most 8)."""
    raw = os.environ.get("DECONV_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"DECONV_THREADS must be an integer, got {raw!r}") from None
    return min(8, os.cpu_count() or 1)


def _map(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class SeedResult:
    seed: int
    f_delta: Optional[GridSignal]
    deconv: Optional[DeconvReport] = None
    tikhonov: Optional[DeconvReport] = None
    errors: Dict[str, str] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return bool(self.errors)


@dataclass
class Comparison:
    problem: str
    delta: float
    n: int
    h: float
    results: List[SeedResult]

    def rel_errors(self, method: str) -> np.ndarray:
        reports = [getattr(r, method) for r in self.results]
        return np.array([rep.rel_l2 for rep in reports if rep is not None])

    def summary(self) -> Dict[str, Dict[str, float]]:
        out = {}
        for method in ("deconv", "tikhonov"):
            e = self.rel_errors(method)
            if e.size:
                out[method] = {"mean": float(e.mean()), "min": float(e.min()),
                               "max": float(e.max()), "count": int(e.size)}
        return out


def _step_config(delta: float, h: Optional[float], m2: Optional[float]) -> RegConfig:
    if h is None and m2 is None:
        raise ConfigError("either h or m2 must be given")
    return RegConfig(delta, m2=m2, h_override=h)


def run_comparison(problem: TestProblem, delta: float, n: int, h: Optional[float] = None,
                   seeds: Sequence[int] = range(10), m2: Optional[float] = None,
                   methods: Sequence[str] = ("deconv", "tikhonov"),
                   workers: int = 1) -> Comparison:
    """Run both methods on identical noisy data for every seed.

    Failures are recorded per seed and per method instead of aborting.
    """
    if n < 4:
        raise ConfigError(f"n must be at least 4, got {n}")
    cfg = _step_config(delta, h, m2)
    grid = solution_grid(problem, n)

    def one(seed):
        f_delta = noisy_data(problem, n, delta, seed)
        res = SeedResult(seed, f_delta)
        if "deconv" in methods:
            try:
                res.deconv = run_deconv(problem, f_delta, grid, cfg)
            except DeconvError as exc:
                res.errors["deconv"] = str(exc)
        if "tikhonov" in methods:
            try:
                res.tikhonov = run_tikhonov(problem, f_delta, grid, delta)
            except DeconvError as exc:
                res.errors["tikhonov"] = str(exc)
        return res

    results = _map(one, list(seeds), workers)
    return Comparison(problem.name, delta, n, cfg.step, results)


def sweep_h(problem: TestProblem, delta: float, n: int, h_values: Sequence[float],
            seed: int, workers: int = 1) -> List[Dict[str, Any]]:
    """One deconvolution per step on a fixed noisy data set.

    Rows carry ``h``, ``rel_l2``, ``residual_sup`` and ``residual_l2``; a
    failed cell has NaN metrics and an ``error`` entry.
    """
    grid = solution_grid(problem, n)
    f_delta = noisy_data(problem, n, delta, seed)

    def one(h):
        try:
            rep = run_deconv(problem, f_delta, grid, RegConfig(delta, h_override=h))
            return {"h": h, "rel_l2": rep.rel_l2, "residual_sup": rep.residual_sup,
                    "residual_l2": rep.residual_l2, "error": ""}
        except DeconvError as exc:
            nan = float("nan")
            return {"h": h, "rel_l2": nan, "residual_sup": nan, "residual_l2": nan,
                    "error": str(exc)}

    return _map(one, list(h_values), workers)
