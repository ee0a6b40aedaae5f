"""Result record shared by the deconvolution and Tikhonov solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from .grid import GridSignal

__all__ = ["DeconvReport", "REPORT_COLUMNS"]

REPORT_COLUMNS = ("method", "seed", "n", "h", "eps", "rel_l2", "sup_err", "residual_l2", "wall_ms")


@dataclass
class DeconvReport:
    method: str
    solution: GridSignal
    residual_sup: float
    residual_l2: float
    h_used: float = float("nan")
    eps_used: Optional[float] = None
    wall_time: float = 0.0
    rel_l2: Optional[float] = None
    sup_err: Optional[float] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def score(self, u_exact: GridSignal) -> "DeconvReport":
        """Fill in the error metrics against a known solution."""
        self.rel_l2 = self.solution.rel_error_l2(u_exact)
        self.sup_err = self.solution.sup_error(u_exact)
        return self

    @property
    def wall_ms(self) -> float:
        return 1e3 * self.wall_time

    def row(self, seed: Optional[int] = None) -> Dict[str, Any]:
        """Flat record matching :data:`REPORT_COLUMNS`."""
        return {
            "method": self.method,
            "seed": "" if seed is None else seed,
            "n": self.solution.grid.n,
            "h": "" if np.isnan(self.h_used) else self.h_used,
            "eps": "" if self.eps_used is None else self.eps_used,
            "rel_l2": "" if self.rel_l2 is None else self.rel_l2,
            "sup_err": "" if self.sup_err is None else self.sup_err,
            "residual_l2": self.residual_l2,
            "wall_ms": self.wall_ms,
        }
