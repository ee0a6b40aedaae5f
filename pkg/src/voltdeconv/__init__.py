"""Stable deconvolution of first-kind Volterra equations.

The convolution operator ``k * u`` is split as ``A (I + S)``: the
ill-posed factor ``A`` (integration, or Abel integration for weakly singular
kernels) is handled by an optimal stable-differentiation regulariser and the
well-posed factor ``I + S`` by a triangular solve. A Tikhonov solver with
Morozov's discrepancy principle is included as a baseline.

>>> from voltdeconv import get_problem, run_comparison
>>> cmp = run_comparison(get_problem("exponential"), delta=0.1, n=10, h=0.1, seeds=[0])
>>> sorted(cmp.summary())
['deconv', 'tikhonov']
"""

from .errors import (
    ConfigError,
    DeconvError,
    DomainError,
    MetricError,
    NoCrossingError,
    NumericError,
    SingularSystemError,
    StepTooLargeError,
)
from .experiments import (
    NoiseSpec,
    TestProblem,
    abel_problem,
    exponential_problem,
    get_problem,
    make_noise,
    run_comparison,
    sweep_h,
)
from .grid import ENDPOINT, MIDPOINT, Grid, GridSignal
from .quadrature import (
    ConvWeights,
    KernelSpec,
    abel_weights,
    convolution_weights,
    corrected_trapezoid,
    forward_convolve,
)
from .regularize import RegConfig, fractional_regularizer, optimal_step, stable_derivative
from .report import DeconvReport
from .tikhonov import TikhonovConfig, morozov_select, tikhonov_solve
from .volterra import (
    SecondKindSystem,
    build_singular_S,
    build_smooth_S,
    deconvolve,
    solve_second_kind,
)

__version__ = "0.1.0"
