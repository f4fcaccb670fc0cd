import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlrid.baselines import BatchProblem, batch_weighted_ls
from mlrid.estimator import (CapMode, EstimatorConfig, EstimatorState, NumericError, cap, ls_step,
                             new_state, project_q, run_stream, scale_step, step)
from mlrid.linalg import inv_spd, solve_spd, sym_eigvals

# mpmath, 30 digits: sqrt(ln(1+e)), sqrt(ln(52+e)), and the d=1 worked step
CAP_1 = 1.14597630320972293395
CAP_52 = 2.00054939291375891413
ALPHA = 0.393469340287366576396
S_NEXT = 1.92805516015163376789
R_NEXT = 1.15481812174617547439
Q_RAW = 1.31620672098823427851


def scalar_cfg(**kw):
    base = dict(d=1, delta=0.0, sigma2=1.0, theta0=[1.0], P0=[[1.0]], q0=1.0)
    base.update(kw)
    return EstimatorConfig(**base)


def test_new_state_scalar():
    s = new_state(scalar_cfg())
    assert (s.n, s.theta[0], s.P[0, 0], s.q, s.r, s.beta[0]) == (0, 1.0, 1.0, 1.0, 1.0, 1.0)


@pytest.mark.parametrize("kw, msg", [
    (dict(theta0=[0.0]), "zero initial direction"),
    (dict(delta=0.5), "invalid delta"),
    (dict(delta=-0.1), "invalid delta"),
    (dict(sigma2=0.0), "invalid noise variance"),
    (dict(P0=[[-1.0]]), "invalid P0"),
    (dict(q0=0.5), "q0"),
])
def test_config_rejects(kw, msg):
    with pytest.raises(ValueError, match=msg):
        scalar_cfg(**kw)


def test_cap_values():
    assert cap(1) == pytest.approx(CAP_1, abs=1e-12)
    assert cap(math.ceil(math.e ** 4 - math.e)) == pytest.approx(CAP_52, abs=1e-12)
    assert cap(17, CapMode("constant", 6.0)) == 6.0
    assert cap(10**9, "constant:6") == 6.0
    assert cap(3, "unbounded") == math.inf
    with pytest.raises(ValueError):
        cap(0)


def test_cap_mode_parse():
    assert CapMode.parse("constant:6") == CapMode("constant", 6.0)
    assert str(CapMode.parse("constant:6")) == "constant:6"
    with pytest.raises(ValueError):
        CapMode.parse("constant:0.5")
    with pytest.raises(ValueError):
        CapMode.parse("sometimes")


def test_project_q():
    assert project_q(1.1, 100) == 1.1
    assert project_q(0.3, 100) == 1.0
    assert project_q(5.0, 1) == pytest.approx(CAP_1, abs=1e-12)
    assert project_q(50.0, 1, "unbounded") == 50.0


def test_scale_step_zero_innovation():
    cfg = scalar_cfg(d=2, theta0=[1.0, 0.0], P0=np.eye(2))
    s = new_state(cfg)
    s.n, s.q, s.r = 40, 1.3, 2.5
    q, r, tr = scale_step(s, [0.0, 4.0], 3.0, cfg)
    assert tr.alpha == 0.0 and r == 2.5 and q == 1.3


def test_scale_step_half_gain():
    sigma2 = 2.0
    u = math.sqrt(sigma2) * math.sqrt(2 * math.log(2))
    cfg = scalar_cfg(sigma2=sigma2)
    _, _, tr = scale_step(new_state(cfg), [u], 0.7, cfg)
    assert tr.alpha == pytest.approx(0.5, abs=1e-15)


def test_scale_step_hand_oracle():
    cfg = scalar_cfg()
    q, r, tr = scale_step(new_state(cfg), [1.0], 2.0, cfg)
    assert tr.alpha == pytest.approx(ALPHA, abs=1e-12)
    assert tr.s_next == pytest.approx(S_NEXT, abs=1e-12)
    assert r == pytest.approx(R_NEXT, abs=1e-12)
    assert tr.q_raw == pytest.approx(Q_RAW, abs=1e-12)
    assert q == pytest.approx(CAP_1, abs=1e-12)


def test_ls_step_examples():
    cfg = scalar_cfg(theta0=[1e-300])
    s = new_state(cfg)
    s.theta[:] = 0.0
    theta, P, a = ls_step(s, [1.0], 1.0, cfg)
    assert (a, theta[0], P[0, 0]) == (0.5, 0.5, 0.5)

    cfg = EstimatorConfig(d=3, delta=0.3)
    s = new_state(cfg)
    s.n = 9
    theta, P, a = ls_step(s, np.zeros(3), 4.0, cfg)
    np.testing.assert_array_equal(theta, s.theta)
    np.testing.assert_array_equal(P, s.P)
    assert a == 1.0 / 10 ** 0.3


def test_ls_step_inverse_update(rng):
    cfg = EstimatorConfig(d=2, delta=0.2, P0=[[2.0, 0.3], [0.3, 1.0]])
    s = new_state(cfg)
    s.n = 6
    phi = rng.standard_normal(2)
    _, P, _ = ls_step(s, phi, rng.standard_normal(), cfg)
    expected = inv_spd(s.P) + 7 ** -0.2 * np.outer(phi, phi)
    got = np.column_stack([solve_spd(P, e) for e in np.eye(2)])
    np.testing.assert_allclose(got, expected, rtol=1e-12)


def test_step_composed_scalar():
    cfg = scalar_cfg()
    s, tr = step(new_state(cfg), [1.0], 2.0, cfg)
    assert s.n == 1
    assert s.theta[0] == pytest.approx(1.5, abs=1e-15)
    assert s.P[0, 0] == pytest.approx(0.5, abs=1e-15)
    assert s.q == pytest.approx(CAP_1, abs=1e-12)
    assert s.beta[0] == pytest.approx(1.5 * CAP_1, abs=1e-12)
    assert tr.a == 0.5


def test_unexcited_stream_keeps_beta():
    cfg = EstimatorConfig(d=3)
    s = new_state(cfg)
    b0 = s.beta.copy()
    rng = np.random.default_rng(1)
    for y in rng.standard_normal(50):
        s, _ = step(s, np.zeros(3), y, cfg)
        np.testing.assert_array_equal(s.beta, b0)


def test_noise_free_single_component_recovers_beta(rng):
    beta = np.array([0.5, -1.5, 2.0])
    cfg = EstimatorConfig(d=3, delta=0.1, P0=1e6 * np.eye(3))
    phis = rng.standard_normal((3000, 3))
    res = run_stream(cfg, phis, phis @ beta)
    np.testing.assert_allclose(res.state.beta, beta, atol=1e-6)


def _stream(seed, d, N, p=0.7):
    rng = np.random.default_rng(seed)
    beta = rng.standard_normal(d)
    phis = rng.standard_normal((N, d))
    z = np.where(rng.random(N) < p, 1.0, -1.0)
    return phis, z * (phis @ beta) + 0.5 * rng.standard_normal(N)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), d=st.integers(1, 5), delta=st.sampled_from([0.0, 0.2, 0.49]))
def test_step_invariants(seed, d, delta):
    phis, ys = _stream(seed, d, 200)
    cfg = EstimatorConfig(d=d, delta=delta)
    s = new_state(cfg)
    Pinv = inv_spd(cfg.P0)
    r_prev = s.r
    for k, (phi, y) in enumerate(zip(phis, ys), start=1):
        s_new, tr = step(s, phi, y, cfg)
        assert 0.0 <= tr.alpha < 1.0
        assert (tr.alpha == 0.0) == (tr.u == 0.0)
        assert 1.0 <= s_new.q <= cap(k)
        assert s_new.r >= r_prev
        r_prev = s_new.r
        Pinv = Pinv + k ** -delta * np.outer(phi, phi)
        got = inv_spd(s_new.P)
        assert np.linalg.norm(got - Pinv) <= 1e-8 * np.linalg.norm(Pinv)
        assert sym_eigvals(s_new.P)[0] > 0
        assert np.array_equal(s_new.beta, s_new.q * s_new.theta)
        s = s_new


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31), d=st.integers(1, 5), delta=st.sampled_from([0.0, 0.2, 0.49]))
def test_recursion_matches_batch_ls(seed, d, delta):
    phis, ys = _stream(seed, d, 120)
    cfg = EstimatorConfig(d=d, delta=delta, theta0=np.linspace(1, 2, d))
    s = new_state(cfg)
    for n in range(1, len(ys) + 1):
        s, _ = step(s, phis[n - 1], ys[n - 1], cfg)
        ref = batch_weighted_ls(BatchProblem(phis[:n], ys[:n], cfg.theta0, cfg.P0, delta))
        assert np.linalg.norm(s.theta - ref) <= 1e-8 * np.linalg.norm(ref)


def test_run_stream_bit_identical_to_step(rng):
    phis, ys = _stream(5, 4, 300)
    cfg = EstimatorConfig(d=4, delta=0.1, cap_mode="constant:6")
    res = run_stream(cfg, phis, ys, snapshot_at=[1, 150, 300])
    s = new_state(cfg)
    for k in range(300):
        np.testing.assert_array_equal(res.beta_pre[k], s.beta)
        s, tr = step(s, phis[k], ys[k], cfg)
        assert res.alpha[k] == tr.alpha and res.q[k] == s.q and res.r[k] == s.r
    np.testing.assert_array_equal(res.state.theta, s.theta)
    np.testing.assert_array_equal(res.state.P, s.P)
    assert [x.n for x in res.snapshots] == [1, 150, 300]
    np.testing.assert_array_equal(res.snapshots[-1].theta, s.theta)


def test_run_stream_resumes_from_state():
    phis, ys = _stream(8, 3, 400)
    cfg = EstimatorConfig(d=3)
    whole = run_stream(cfg, phis, ys)
    first = run_stream(cfg, phis[:123], ys[:123])
    second = run_stream(cfg, phis[123:], ys[123:], state=first.state)
    np.testing.assert_array_equal(whole.state.theta, second.state.theta)
    np.testing.assert_array_equal(whole.q[123:], second.q)
    assert second.state.n == 400


def test_determinism():
    phis, ys = _stream(11, 3, 500)
    cfg = EstimatorConfig(d=3)
    a, b = run_stream(cfg, phis, ys), run_stream(cfg, phis, ys)
    for f in ("beta_pre", "alpha", "q", "r"):
        np.testing.assert_array_equal(getattr(a, f), getattr(b, f))


def test_numeric_overflow_reports_step():
    cfg = EstimatorConfig(d=2)
    phis = np.ones((10, 2))
    phis[6] = [1e200, 1e200]
    ys = np.ones(10)
    with pytest.raises(NumericError) as info:
        run_stream(cfg, phis, ys)
    assert info.value.step == 7
    assert len(info.value.partial.alpha) == 6
    s = new_state(cfg)
    with pytest.raises(NumericError, match="step 1"):
        step(s, [1e200, 1e200], 1e200, cfg)


def test_snapshot_row_roundtrip():
    s = EstimatorState(12, np.array([0.1, -2.0, 3.5]),
                       np.array([[2.0, 0.1, 0.2], [0.1, 3.0, 0.3], [0.2, 0.3, 4.0]]), 1.25, 7.5)
    row = s.to_row()
    assert len(row) == len(EstimatorState.row_header(3)) == 1 + 3 + 6 + 2
    back = EstimatorState.from_row(row, 3)
    assert back.n == 12 and back.q == 1.25 and back.r == 7.5
    np.testing.assert_array_equal(back.P, s.P)
    np.testing.assert_array_equal(back.theta, s.theta)
