import math

import numpy as np
import pytest

from voltdeconv.errors import ConfigError, NoCrossingError, NumericError
from voltdeconv.experiments import (
    data_grid,
    exponential_problem,
    noisy_data,
    run_tikhonov,
    solution_grid,
)
from voltdeconv.grid import Grid, GridSignal
from voltdeconv.quadrature import ConvWeights, convolution_weights
from voltdeconv.tikhonov import (
    TikhonovConfig,
    discrepancy,
    morozov_select,
    tikhonov_solve,
)

EXP = exponential_problem()


def _exp_operator(n):
    return convolution_weights(EXP.kernel, solution_grid(EXP, n))


@pytest.mark.parametrize("eps", [1e-6, 0.0275, 1.0, 1e3])
def test_identity_operator(eps):
    g = Grid(1, 8)
    K = ConvWeights(g, np.eye(8))
    u = tikhonov_solve(K, GridSignal(g, np.full(8, 2.5)), eps)
    np.testing.assert_allclose(u.values, 2.5 / (1 + eps), rtol=1e-14)


def test_large_eps_drives_solution_to_zero():
    K = _exp_operator(10)
    f = data_grid(EXP, 10).sample(EXP.f_exact)
    norms = [np.linalg.norm(tikhonov_solve(K, f, e).values) for e in np.logspace(0, 6, 13)]
    assert all(b <= a for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 1e-5


@pytest.mark.parametrize("eps", [1e-10, 1e-4, 0.0275, 3.0])
def test_normal_equation_residual(eps):
    K = _exp_operator(50)
    f = noisy_data(EXP, 50, 0.1, 1)
    u = tikhonov_solve(K, f, eps)
    a = K.w
    rhs = a.T @ f.eval_interp(K.grid.nodes)
    res = (a.T @ a + eps * np.eye(50)) @ u.values - rhs
    assert np.linalg.norm(res) <= 1e-10 * np.linalg.norm(rhs)


def test_data_interpolated_onto_operator_grid():
    K = _exp_operator(10)
    fine = noisy_data(EXP, 10, 0.1, 4)
    coarse = GridSignal(K.grid, fine.eval_interp(K.grid.nodes))
    np.testing.assert_array_equal(tikhonov_solve(K, fine, 0.01).values,
                                  tikhonov_solve(K, coarse, 0.01).values)


def test_rejects_bad_eps_and_non_finite():
    K = _exp_operator(10)
    f = data_grid(EXP, 10).sample(EXP.f_exact)
    with pytest.raises(ConfigError):
        tikhonov_solve(K, f, 0.0)
    with pytest.raises(NumericError):
        tikhonov_solve(K, f, math.inf)
    bad = GridSignal(K.grid, np.full(10, np.nan))
    with pytest.raises(NumericError):
        tikhonov_solve(K, bad, 0.1)


@pytest.mark.parametrize("seed", range(20))
def test_discrepancy_monotone_random_problems(seed):
    rng = np.random.default_rng(1000 + seed)
    n = 15
    g = Grid(1, n)
    K = ConvWeights(g, np.tril(rng.normal(size=(n, n))) / n)
    f = GridSignal(g, rng.normal(size=n))
    eps = np.logspace(-8, 2, 30)
    sols = [tikhonov_solve(K, f, e) for e in eps]
    disc = [discrepancy(K, u, f) for u in sols]
    norm = [np.linalg.norm(u.values) for u in sols]
    for a, b in zip(disc, disc[1:]):
        assert b >= a - 1e-12
    for a, b in zip(norm, norm[1:]):
        assert b <= a + 1e-12 * max(1.0, a)


@pytest.mark.parametrize("seed", range(10))
def test_morozov_fixed_point_and_range(seed):
    K = _exp_operator(10)
    cfg = TikhonovConfig(0.1)
    res = morozov_select(K, noisy_data(EXP, 10, 0.1, seed), cfg)
    assert abs(res.discrepancy - cfg.target) <= cfg.tol_rel * cfg.target
    assert 3e-3 <= res.eps <= 3e-1
    traj = sorted(res.trajectory)
    for (e1, d1, n1), (e2, d2, n2) in zip(traj, traj[1:]):
        assert d2 >= d1 - 1e-12
        assert n2 <= n1 + 1e-12
    eps, u = res
    assert eps == res.eps and u is res.solution


def test_noise_free_data():
    K = _exp_operator(10)
    f = data_grid(EXP, 10).sample(EXP.f_exact)
    picked = []
    for delta in (1e-2, 1e-3, 1e-4):
        res = morozov_select(K, f, TikhonovConfig(delta))
        assert abs(res.discrepancy - delta) <= 1e-3 * delta
        picked.append(res.eps)
    assert picked[0] > picked[1] > picked[2]


def test_bracket_expansion():
    K = _exp_operator(10)
    cfg = TikhonovConfig(0.1, eps_bracket=(1.0, 10.0))
    res = morozov_select(K, noisy_data(EXP, 10, 0.1, 0), cfg)
    assert res.eps < 1.0
    assert abs(res.discrepancy - 0.1) <= 1e-4


def test_no_crossing():
    g = Grid(1, 10)
    K = _exp_operator(10)
    with pytest.raises(NoCrossingError):
        morozov_select(K, GridSignal(g, np.full(10, 0.01)), TikhonovConfig(10.0))


@pytest.mark.parametrize("kwargs", [dict(delta=0.0), dict(delta=0.1, c_morozov=0.5),
                                    dict(delta=0.1, eps_bracket=(1.0, 0.1)),
                                    dict(delta=0.1, tol_rel=0.5)])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        TikhonovConfig(**kwargs)


def test_report_fields():
    rep = run_tikhonov(EXP, noisy_data(EXP, 10, 0.1, 2), solution_grid(EXP, 10), 0.1)
    assert rep.method == "tikhonov"
    assert rep.eps_used > 0
    assert 0.3 <= rep.rel_l2 <= 0.75
    assert rep.metadata["stabilizer"].startswith("identity")
