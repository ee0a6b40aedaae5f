"""Command-line front end: ``voltdeconv {forward,solve,sweep} --config FILE``.

Config files are flat ``key = value`` text, ``#`` starts a comment::

    problem = exponential      # or abel, or inline
    delta = 0.1
    n = 10
    h = 0.1
    seeds = 0,1,2
    method = both

Inline problems set ``problem = inline`` plus ``kernel = exp(a*t)`` or
``kernel = abel(gamma)+poly(c0,c1,c2)`` and ``u = sincos(b)`` or
``u = poly(c0,c1,c2)``.

Exit codes: 0 success, 2 config error, 3 I/O error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import experiments as ex
from .errors import ConfigError, DeconvError
from .grid import Grid
from .quadrature import KernelSpec, forward_convolve
from .regularize import RegConfig
from .report import REPORT_COLUMNS
from .svg import line_plot

log = logging.getLogger("voltdeconv")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4
METHODS = ("deconv", "tikhonov", "both")
_KEYS = {"problem", "kernel", "u", "delta", "n", "h", "m2", "gamma", "a", "b", "t_end",
         "seeds", "method", "output_dir"}

_NUM = r"\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*"
_EXP_RE = re.compile(rf"^exp\({_NUM}\*\s*t\s*\)$")
_ABEL_RE = re.compile(rf"^abel\({_NUM}\)\s*\+\s*poly\({_NUM},{_NUM},{_NUM}\)$")
_SINCOS_RE = re.compile(rf"^sincos\({_NUM}\)$")
_POLY_RE = re.compile(rf"^poly\({_NUM},{_NUM},{_NUM}\)$")


@dataclass
class RunConfig:
    problem: str
    delta: float
    n: int
    h: Optional[float] = None
    m2: Optional[float] = None
    gamma: Optional[float] = None
    seeds: List[int] = field(default_factory=lambda: list(range(10)))
    method: str = "both"
    output_dir: Path = Path("out")
    kernel: Optional[str] = None
    u: Optional[str] = None
    a: Optional[float] = None
    b: Optional[float] = None
    t_end: float = 1.0

    @property
    def methods(self) -> Sequence[str]:
        return ("deconv", "tikhonov") if self.method == "both" else (self.method,)

    def reg_config(self) -> RegConfig:
        return RegConfig(self.delta, m2=self.m2, h_override=self.h)

    def build_problem(self) -> ex.TestProblem:
        if self.problem == "exponential":
            params = {k: v for k, v in (("a", self.a), ("b", self.b)) if v is not None}
            return ex.get_problem("exponential", t_end=self.t_end, **params)
        if self.problem == "abel":
            return ex.get_problem("abel", gamma=self.gamma, t_end=self.t_end)
        return _inline_problem(self)


def _parse_seeds(text: str) -> List[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"seeds must be comma-separated integers, got {text!r}") from None
    if not seeds:
        raise ConfigError("empty seed list")
    return seeds


def _parse_floats(text: str, what: str) -> List[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"{what} must be comma-separated numbers, got {text!r}") from None


def parse_config(text: str) -> RunConfig:
    raw: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        raw[key] = value

    def num(key, cast=float):
        if key not in raw:
            return None
        try:
            return cast(raw[key])
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {raw[key]!r}") from None

    for key in ("problem", "delta", "n"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    cfg = RunConfig(problem=raw["problem"], delta=num("delta"), n=num("n", int),
                    h=num("h"), m2=num("m2"), gamma=num("gamma"), a=num("a"), b=num("b"),
                    kernel=raw.get("kernel"), u=raw.get("u"))
    if "t_end" in raw:
        cfg.t_end = num("t_end")
    if "seeds" in raw:
        cfg.seeds = _parse_seeds(raw["seeds"])
    if "method" in raw:
        cfg.method = raw["method"]
    if "output_dir" in raw:
        cfg.output_dir = Path(raw["output_dir"])
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.problem not in ("exponential", "abel", "inline"):
        raise ConfigError(f"unknown problem {cfg.problem!r}")
    if cfg.delta is None or not cfg.delta >= 0:
        raise ConfigError("delta must be non-negative")
    if cfg.n is None or cfg.n < 4:
        raise ConfigError("n must be an integer >= 4")
    if cfg.method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}")
    if cfg.h is None and cfg.m2 is None and "deconv" in cfg.methods:
        raise ConfigError("either h or m2 is required for the deconvolution method")
    if cfg.delta == 0 and "tikhonov" in cfg.methods:
        raise ConfigError("the Morozov choice needs delta > 0")
    singular = cfg.problem == "abel" or (
        cfg.problem == "inline" and cfg.kernel is not None and cfg.kernel.startswith("abel"))
    if cfg.problem == "abel" and cfg.gamma is None:
        raise ConfigError("gamma is required for the abel problem")
    if not singular and cfg.gamma is not None:
        raise ConfigError("gamma only applies to singular kernels")
    if cfg.problem == "inline" and (cfg.kernel is None or cfg.u is None):
        raise ConfigError("inline problems need 'kernel' and 'u'")
    if cfg.problem != "inline" and (cfg.kernel is not None or cfg.u is not None):
        raise ConfigError("'kernel' and 'u' are only valid with problem = inline")


def _inline_problem(cfg: RunConfig) -> ex.TestProblem:
    ktext = cfg.kernel.replace(" ", "")
    params: Dict[str, float] = {}
    m = _EXP_RE.match(ktext)
    if m:
        a = float(m.group(1))
        kernel = KernelSpec.smooth(lambda t: np.exp(a * t), lambda t: a * np.exp(a * t))
        params["a"] = a
    else:
        m = _ABEL_RE.match(ktext)
        if not m:
            raise ConfigError(f"unsupported kernel {cfg.kernel!r}")
        g, c0, c1, c2 = (float(x) for x in m.groups())
        if cfg.gamma is not None and cfg.gamma != g:
            raise ConfigError("gamma key disagrees with the inline kernel")
        kernel = KernelSpec.singular(g, lambda t: c0 + c1 * t + c2 * t * t,
                                     lambda t: c1 + 2 * c2 * t)
        params["gamma"] = g

    utext = cfg.u.replace(" ", "")
    m = _SINCOS_RE.match(utext)
    if m:
        b = float(m.group(1))

        def u(t):
            return np.sin(b * t) + np.cos(b * t)
    else:
        m = _POLY_RE.match(utext)
        if not m:
            raise ConfigError(f"unsupported solution {cfg.u!r}")
        c = [float(x) for x in m.groups()]

        def u(t):
            return c[0] + c[1] * t + c[2] * t * t

    fine = Grid(cfg.t_end, ex.DATA_REFINE * max(cfg.n, 200), "endpoint")
    f_sig = forward_convolve(kernel, fine.sample(u), fine_factor=4)
    return ex.TestProblem("inline", kernel, u, f_sig.eval_interp, None, cfg.t_end, params).check()


# --- output helpers -----------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else f"{v:.17g}"
    return str(v)


def _write_rows(path: Path, columns: Sequence[str], rows: Sequence[Dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


# --- subcommands ----------------------------------------------------------------

def cmd_forward(cfg: RunConfig) -> int:
    problem = cfg.build_problem()
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    grid = ex.data_grid(problem, cfg.n)
    f = grid.sample(problem.f_exact)
    f.to_csv(out / "f.csv")
    for seed in cfg.seeds:
        ex.make_noise(f, ex.NoiseSpec(seed, cfg.delta)).to_csv(out / f"f_delta_{seed}.csv")
    return EXIT_OK


def cmd_solve(cfg: RunConfig) -> int:
    problem = cfg.build_problem()
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    comp = ex.run_comparison(problem, cfg.delta, cfg.n, h=cfg.h, seeds=cfg.seeds, m2=cfg.m2,
                             methods=cfg.methods, workers=ex.worker_count())
    grid = ex.solution_grid(problem, cfg.n)
    u_exact = grid.sample(problem.u_exact)
    u_exact.to_csv(out / "u_exact.csv")
    rows = []
    failed = False
    for res in comp.results:
        for method in cfg.methods:
            rep = getattr(res, method)
            if rep is None:
                failed = True
                print(f"{method} {res.seed} FAILED {res.errors.get(method, '')}", file=sys.stderr)
                continue
            rep.solution.to_csv(out / f"u_{method}_{res.seed}.csv")
            rows.append(rep.row(res.seed))
            print(f"{method} {res.seed} {rep.rel_l2:.6g} {rep.wall_ms:.3f}")
    _write_rows(out / "report.csv", REPORT_COLUMNS, rows)

    first = comp.results[0]
    series = [("u_exact", grid.nodes, u_exact.values)]
    labels = {"deconv": "u_deconv", "tikhonov": "u_disc"}
    for method in cfg.methods:
        rep = getattr(first, method)
        if rep is not None:
            series.append((labels[method], grid.nodes, rep.solution.values))
    _write_text(out / "solution.svg", line_plot(
        series, title=f"{problem.name}, delta={cfg.delta:g}, n={cfg.n}, seed={first.seed}",
        xlabel="t", ylabel="u"))
    return EXIT_NUMERIC if failed else EXIT_OK


SWEEP_COLUMNS = ("method", "h", "rel_l2", "residual_sup", "residual_l2")


def cmd_sweep(cfg: RunConfig, h_list: Sequence[float]) -> int:
    if not h_list:
        raise ConfigError("empty h list")
    problem = cfg.build_problem()
    if any(not 0 < h < problem.t_end / 2 for h in h_list):
        raise ConfigError(f"every h must lie in (0, {problem.t_end / 2})")
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg.seeds[0]
    rows = []
    if "deconv" in cfg.methods:
        for r in ex.sweep_h(problem, cfg.delta, cfg.n, h_list, seed, workers=ex.worker_count()):
            rows.append({"method": "deconv", **r})
    if "tikhonov" in cfg.methods:
        grid = ex.solution_grid(problem, cfg.n)
        rep = ex.run_tikhonov(problem, ex.noisy_data(problem, cfg.n, cfg.delta, seed), grid,
                              cfg.delta)
        for h in h_list:
            rows.append({"method": "tikhonov", "h": h, "rel_l2": rep.rel_l2,
                         "residual_sup": rep.residual_sup, "residual_l2": rep.residual_l2,
                         "error": ""})
    _write_rows(out / "sweep.csv", SWEEP_COLUMNS, rows)

    series = []
    for method in cfg.methods:
        sel = [r for r in rows if r["method"] == method]
        hs = [r["h"] for r in sel]
        series.append((f"{method} rel_l2", hs, [r["rel_l2"] for r in sel]))
        series.append((f"{method} residual_l2", hs, [r["residual_l2"] for r in sel]))
    _write_text(out / "sweep.svg", line_plot(
        series, title=f"{problem.name}: error and discrepancy vs h (seed {seed})",
        xlabel="h", ylabel="value"))
    failed = any(r.get("error") for r in rows)
    return EXIT_NUMERIC if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="voltdeconv", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("forward", "write clean and noisy data"),
                        ("solve", "run the deconvolution and/or Tikhonov solvers"),
                        ("sweep", "deconvolution error as a function of the step h")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
        p.add_argument("--seeds", help="comma-separated seeds (overrides the config)")
        if name == "sweep":
            p.add_argument("--h-list", required=True, help="comma-separated steps")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="[%(levelname)s] %(name)s: %(message)s")
    try:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        cfg = parse_config(text)
        if args.out is not None:
            cfg.output_dir = args.out
        if args.seeds:
            cfg.seeds = _parse_seeds(args.seeds)
        if args.command == "forward":
            return cmd_forward(cfg)
        if args.command == "solve":
            return cmd_solve(cfg)
        return cmd_sweep(cfg, _parse_floats(args.h_list, "--h-list"))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DeconvError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
