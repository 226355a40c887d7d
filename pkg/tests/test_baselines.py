import copy

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from darek.baselines import EnsembleModel, ensemble_predict, ensemble_train, gp_fit, gp_predict, rbf_kernel
from darek.kan import KanLayer, KanNetwork, TrainConfig, init_network
from darek.spline import uniform_knots


def _const_net(c):
    kv = uniform_knots(-1.0, 1.0, 4, 3)
    return KanNetwork([KanLayer([kv], np.full((1, 1, kv.dim), c))])


def test_ensemble_spread():
    m = EnsembleModel([_const_net(0.0), _const_net(2.0)], [0, 1])
    mean, std = ensemble_predict(m, np.linspace(-1, 1, 5))
    np.testing.assert_allclose(mean, 1.0, atol=1e-14)
    np.testing.assert_allclose(std, 1.0, atol=1e-14)


def test_identical_members_zero_std():
    x = np.linspace(-1, 1, 9)
    net = init_network([1, 2, 1], [x], x, 5, seed=3)
    m = EnsembleModel([net, copy.deepcopy(net), copy.deepcopy(net)], [0, 0, 0])
    mean, std = ensemble_predict(m, x)
    assert np.all(std == 0)
    np.testing.assert_allclose(mean, net(x)[:, 0], rtol=1e-15, atol=1e-15)


def test_ensemble_forced_same_seed():
    x = np.linspace(-1, 1, 9)
    m = ensemble_train(lambda s: init_network([1, 1], [x], x, 9, seed=s), x, np.cos(x), q=2,
                       cfg=TrainConfig(epochs=10), seeds=[4, 4])
    assert np.all(ensemble_predict(m, x)[1] == 0)


def test_ensemble_rejects_single_member():
    with pytest.raises(ValueError):
        ensemble_train(lambda s: None, [0.0], [0.0], q=1)


def test_ensemble_std_order_invariant():
    x = np.linspace(-1, 1, 9)
    nets = [init_network([1, 1], [x], x, 9, seed=s, init_scale=1.0) for s in range(4)]
    a = ensemble_predict(EnsembleModel(nets, list(range(4))), x)[1]
    b = ensemble_predict(EnsembleModel(nets[::-1], list(range(4))), x)[1]
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-16)


def test_kernel_entries():
    K = rbf_kernel(np.array([0.0, 100.0]), np.array([0.0, 100.0]), 1.0, 2.5)
    assert K[0, 0] == K[1, 1] == 2.5
    assert K[0, 1] < 1e-300


def test_gp_interpolates_training_data(rng):
    x = np.sort(rng.uniform(-3, 3, 5))
    y = np.sin(x)
    m = gp_fit(x, y, jitter=1e-10)
    mean, var = gp_predict(m, x)
    np.testing.assert_allclose(mean, y, atol=1e-6)


def test_gp_variance_collapse_and_decay():
    x = np.linspace(-2, 2, 6)
    m = gp_fit(x, np.cos(x))
    _, var = gp_predict(m, x)
    assert np.all(var <= 10 * m.jitter)
    _, far = gp_predict(m, np.array([1e3]))
    assert far[0] == pytest.approx(m.variance, abs=1e-6)


def test_gp_empty_model():
    m = gp_fit(np.zeros((0, 1)), np.zeros(0), variance=1.7)
    mean, var = gp_predict(m, np.array([0.0, 4.0]))
    assert np.all(mean == 0) and np.all(var == 1.7)


def test_gp_matches_dense_solve(rng):
    x = rng.uniform(-3, 3, 20)
    y = np.cos(x) + 0.1 * rng.normal(size=20)
    m = gp_fit(x, y, lengthscale=0.8, variance=1.3, jitter=1e-6)
    xs = np.linspace(-4, 4, 37)
    K = rbf_kernel(x, x, 0.8, 1.3) + 1e-6 * np.eye(20)
    Kinv = np.linalg.inv(K)
    ks = rbf_kernel(x, xs, 0.8, 1.3)
    mean, var = gp_predict(m, xs)
    np.testing.assert_allclose(mean, ks.T @ Kinv @ y, atol=1e-8)
    np.testing.assert_allclose(var, np.maximum(1.3 - np.einsum("ij,ik,kj->j", ks, Kinv, ks), 0), atol=1e-8)


def test_gp_jitter_retry(monkeypatch):
    import darek.baselines as bl

    real = bl.cho_factor
    calls = []

    def flaky(a, lower):
        calls.append(a[0, 0])
        if len(calls) == 1:
            raise bl.LinAlgError("not positive definite")
        return real(a, lower=lower)

    monkeypatch.setattr(bl, "cho_factor", flaky)
    m = gp_fit(np.linspace(0, 1, 3), np.ones(3), jitter=1e-6)
    assert m.jitter == pytest.approx(1e-5)
    assert calls[1] - calls[0] == pytest.approx(9e-6)


def test_gp_gives_up_after_one_retry():
    from darek.errors import DarekNumericalError

    with pytest.raises(DarekNumericalError):
        gp_fit(np.zeros(3), np.ones(3), jitter=0.0)  # rank-one kernel, no jitter to add


def test_gp_2d_inputs(rng):
    x = rng.uniform(size=(8, 2))
    m = gp_fit(x, x.sum(axis=1), lengthscale=0.5)
    mean, _ = gp_predict(m, x)
    np.testing.assert_allclose(mean, x.sum(axis=1), atol=1e-4)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 10))
def test_gp_variance_nonincreasing_with_data(seed, n):
    r = np.random.default_rng(seed)
    x = r.uniform(-3, 3, n)
    y = r.normal(size=n)
    xs = np.linspace(-4, 4, 25)
    prev = np.full(xs.size, np.inf)
    for i in range(1, n + 1):
        _, var = gp_predict(gp_fit(x[:i], y[:i], jitter=1e-6), xs)
        assert np.all(var <= prev + 1e-9)
        assert np.all((var >= 0) & (var <= 1.0 + 1e-6))
        prev = var
