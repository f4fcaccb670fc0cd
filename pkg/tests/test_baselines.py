
import numpy as np
import pytest

from mlrid.baselines import (BatchProblem, batch_weighted_ls, geometric_checkpoints, gram_lambda,
                             offline_em_q, offline_em_q_fixed_point)
from mlrid.datagen import AR1, GeneratorConfig, generate
from mlrid.estimator import EstimatorConfig, run_stream

TANH_1 = 0.761594155955764888119  # mpmath


def test_batch_ls_no_data_returns_prior():
    theta0 = np.array([0.3, -1.0])
    out = batch_weighted_ls(BatchProblem(np.zeros((0, 2)), np.zeros(0), theta0, np.eye(2), 0.2))
    np.testing.assert_allclose(out, theta0, rtol=1e-15)


def test_batch_ls_single_point():
    out = batch_weighted_ls(BatchProblem([[1.0]], [1.0], [0.0], [[1.0]], 0.0))
    assert out[0] == pytest.approx(0.5, abs=1e-15)


def test_batch_ls_matches_numpy_lstsq(rng):
    # with a vanishing regulariser the batch answer is ordinary weighted LS
    phis = rng.standard_normal((60, 3))
    ys = rng.standard_normal(60)
    w = np.arange(1, 61) ** -0.3
    out = batch_weighted_ls(BatchProblem(phis, ys, np.zeros(3), 1e12 * np.eye(3), 0.3))
    ref = np.linalg.lstsq(phis * np.sqrt(w)[:, None], ys * np.sqrt(w), rcond=None)[0]
    np.testing.assert_allclose(out, ref, rtol=1e-8)


def test_batch_ls_every_prefix_of_recursion(rng):
    phis = rng.standard_normal((80, 2))
    ys = rng.standard_normal(80)
    cfg = EstimatorConfig(d=2, delta=0.2, P0=[[3.0, 0.5], [0.5, 1.0]], theta0=[0.5, 1.0])
    s = None
    for n in range(1, 81):
        res = run_stream(cfg, phis[n - 1:n], ys[n - 1:n], state=s)
        s = res.state
        ref = batch_weighted_ls(BatchProblem(phis[:n], ys[:n], cfg.theta0, cfg.P0, cfg.delta))
        assert np.linalg.norm(s.theta - ref) <= 1e-8 * np.linalg.norm(ref)


def test_offline_em_q_scalar():
    assert offline_em_q([1.0], [1.0], [1.0], 1.0) == pytest.approx(TANH_1, abs=1e-15)


def test_offline_em_q_saturated_returns_q():
    u = np.ones(20)
    q = np.full(20, 1.7)
    assert offline_em_q(u, q * u, q, 0.01) == pytest.approx(1.7, abs=1e-6)


def test_offline_em_q_saturated_general_inputs():
    # tanh -> 1, so the quotient collapses to sum(y) / sum(u^2)
    u = np.linspace(2.0, 5.0, 20)
    y = 1.7 * u
    assert offline_em_q(u, y, np.full(20, 1.7), 0.01) == pytest.approx(y.sum() / (u * u).sum(), rel=1e-12)


def test_offline_em_q_no_excitation():
    with pytest.raises(ValueError, match="no excitation"):
        offline_em_q([0.0, 0.0], [1.0, 2.0], [1.0, 1.0], 1.0)


def test_offline_em_q_fixed_point_is_stationary(rng):
    u = 1.0 + 0.1 * rng.random(500)
    y = 2.0 * u + 0.3 * rng.standard_normal(500)
    q = offline_em_q_fixed_point(u, y, 0.09)
    assert offline_em_q(u, y, np.full(500, q), 0.09) == pytest.approx(q, abs=1e-9)


def test_gram_lambda_examples():
    out = gram_lambda(np.array([[1.0, 0.0]]), np.eye(2), checkpoints=[0, 1])
    np.testing.assert_allclose(out, [[0, 1, 1], [1, 1, 2]])
    out = gram_lambda(np.zeros((0, 3)), np.eye(3), checkpoints=[0])
    np.testing.assert_allclose(out, [[0, 1, 1]])


def test_gram_lambda_self_consistent_and_monotone():
    g = GeneratorConfig(d=3, beta_star=[1, 2, -1], p=0.6, regressor=AR1(0.8, 0.1), seed=5)
    phis = generate(g, 10_000).phi
    out = gram_lambda(phis, np.eye(3))
    assert out[-1, 0] == geometric_checkpoints(10_000)[-1]
    last = gram_lambda(phis, np.eye(3), checkpoints=[10_000])[0]
    dense = np.linalg.eigvalsh(np.eye(3) + phis.T @ phis)
    np.testing.assert_allclose(last[1:], [dense[0], dense[-1]], rtol=1e-10)
    assert np.all(np.diff(out[:, 1]) >= 0) and np.all(np.diff(out[:, 2]) >= 0)
