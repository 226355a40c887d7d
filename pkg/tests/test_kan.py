import numpy as np
import pytest

from darek.errors import DivergenceError
from darek.kan import (
    KanLayer,
    KanNetwork,
    TrainConfig,
    forward,
    forward_from,
    gradient,
    init_network,
    loss,
    select_knot_indices,
    train,
)
from darek.spline import basis_matrix, fit_spline, uniform_knots

from conftest import polynomial_net


def _identity_net():
    kv = uniform_knots(-2.0, 2.0, 6, 3)
    g = np.linspace(-2, 2, 50)
    return KanNetwork([KanLayer([kv], fit_spline(kv, g, g).coeffs[None, None, :])])


def test_identity_edge():
    x = np.linspace(-2, 2, 13)
    np.testing.assert_allclose(_identity_net()(x)[:, 0], x, atol=1e-10)


def test_zero_and_constant_edges():
    kv = uniform_knots(0.0, 1.0, 4, 3)
    zero = KanNetwork([KanLayer([kv, kv], np.zeros((1, 2, kv.dim)))])
    assert np.all(zero(np.random.default_rng(0).uniform(size=(5, 2))) == 0)
    const = KanNetwork([KanLayer([kv, kv], np.full((1, 2, kv.dim), 0.3))])
    np.testing.assert_allclose(const([[0.2, 0.9]]), [[0.6]], atol=1e-14)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        forward(_identity_net(), np.zeros((3, 2)))
    kv = uniform_knots(0.0, 1.0, 4, 3)
    with pytest.raises(ValueError):
        KanNetwork([KanLayer([kv], np.zeros((2, 1, kv.dim))), KanLayer([kv], np.zeros((1, 1, kv.dim)))])


def test_trace_consistency(rng):
    x = np.linspace(-1, 1, 10)
    net = init_network([1, 3, 2, 1], [x], x, 6, seed=3, init_scale=0.5)
    out, trace = forward(net, x)
    assert len(trace) == 4 and trace[-1] is out
    for l in range(1, 3):
        np.testing.assert_allclose(forward_from(net, trace[l], l), out, atol=1e-12)


def test_realizable_target():
    kv = uniform_knots(0.0, 1.0, 6, 3)
    x = np.linspace(0, 1, 40)
    target = basis_matrix(kv, x) @ np.random.default_rng(5).normal(size=kv.dim)
    net = KanNetwork([KanLayer([kv], np.zeros((1, 1, kv.dim)))])
    trained, hist = train(net, x, target, TrainConfig(epochs=3000, learning_rate=1.0))
    assert hist[-1] < 1e-6


def test_zero_epochs_leaves_network():
    x = np.linspace(-1, 1, 9)
    net = init_network([1, 2, 1], [x], x, 5, seed=0)
    trained, hist = train(net, x, np.cos(x), TrainConfig(epochs=0))
    assert len(hist) == 1
    for a, b in zip(net.layers, trained.layers):
        assert np.array_equal(a.coeffs, b.coeffs)


def test_cos_fit_quality_and_tail_monotone():
    x = np.linspace(-2 * np.pi, 2 * np.pi, 20)
    idx = select_knot_indices(x, 9, 0)
    net = init_network([1, 1], [x[idx]], x, 9, seed=0)
    _, hist = train(net, x, np.cos(x), TrainConfig(epochs=200, learning_rate=1.0))
    assert np.sqrt(hist[-1]) < 0.15
    tail = np.array(hist[-21:])
    assert np.all(np.diff(tail) <= 1e-15)


def test_deterministic_training():
    x = np.linspace(-1, 1, 15)
    runs = [train(init_network([1, 2, 1], [x[::2]], x, 6, seed=7), x, np.sin(3 * x),
                  TrainConfig(epochs=50, learning_rate=0.5))[0] for _ in range(2)]
    for a, b in zip(runs[0].layers, runs[1].layers):
        assert np.array_equal(a.coeffs, b.coeffs)


def test_divergence_reports_epoch():
    x = np.linspace(-1, 1, 15)
    net = init_network([1, 2, 1], [x[::2]], x, 6, seed=7)
    with pytest.raises(DivergenceError, match="epoch"):
        train(net, x, 100 * x, TrainConfig(epochs=500, learning_rate=1e5))


def test_gradient_single_layer_is_linear_regression(rng):
    x = rng.uniform(-1, 1, 30)
    y = rng.normal(size=30)
    net = init_network([1, 1], [np.linspace(-1, 1, 6)], x, 6, seed=1)
    B = basis_matrix(net.layers[0].knots[0], x)
    expect = 2.0 / x.size * B.T @ (B @ net.layers[0].coeffs[0, 0] - y)
    np.testing.assert_allclose(gradient(net, x, y)[0][0, 0], expect, atol=1e-12)


def test_zero_residual_zero_gradient():
    x = np.linspace(-1, 1, 10)
    net = init_network([1, 2, 1], [x[::2]], x, 5, seed=2)
    for g in gradient(net, x, net(x)[:, 0]):
        assert np.max(np.abs(g)) < 1e-15


def test_gradient_matches_finite_differences_two_layer(rng):
    x = rng.uniform(-1, 1, 12)
    y = np.sin(2 * x)
    net = init_network([1, 2, 1], [np.linspace(-1, 1, 5)], x, 5, seed=4, init_scale=0.5)
    grads = gradient(net, x, y)
    for _ in range(5):
        l = int(rng.integers(2))
        c = net.layers[l].coeffs
        i = tuple(int(rng.integers(s)) for s in c.shape)
        h = 1e-6
        old = c[i]
        c[i] = old + h
        lp = loss(net, x, y)
        c[i] = old - h
        lm = loss(net, x, y)
        c[i] = old
        fd = (lp - lm) / (2 * h)
        assert abs(grads[l][i] - fd) <= 1e-5 * max(abs(fd), 1e-3)


def test_last_layer_training_is_least_squares():
    x = np.linspace(-2, 2, 25)
    y = np.cos(2 * x)
    # hidden unit spans its knot range evenly so plain descent converges fast
    net = polynomial_net([1, 1, 1], [np.linspace(-2, 2, 6)], [lambda i, j, t: t, lambda i, j, t: 0 * t],
                         n_knots=4, hidden_range=(-2, 2))
    _, trace = forward(net, x)
    last = net.layers[1]
    A = np.hstack([basis_matrix(kv, trace[1][:, j]) for j, kv in enumerate(last.knots)])
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    best = np.mean((A @ sol - y) ** 2)
    lr = 1.0 / np.linalg.eigvalsh(2.0 / x.size * A.T @ A)[-1]
    trained, hist = train(net, x, y, TrainConfig(epochs=20000, learning_rate=lr), frozen={0})
    assert np.array_equal(trained.layers[0].coeffs, net.layers[0].coeffs)
    assert hist[-1] - best < 1e-8


def test_json_roundtrip(rng):
    x = np.linspace(-1, 1, 10)
    net = init_network([1, 3, 1], [x[::2]], x, 5, seed=9)
    back = KanNetwork.from_json(net.to_json())
    np.testing.assert_array_equal(back(x), net(x))


def test_knot_selection():
    x = np.linspace(0, 1, 20)
    idx = select_knot_indices(x, 9, 0)
    assert len(idx) == 9 and len(set(idx.tolist())) == 9
    assert 0 in idx and 19 in idx
    assert np.array_equal(idx, select_knot_indices(x, 9, 0))
    with pytest.raises(ValueError):
        select_knot_indices(x, 21, 0)


def test_polynomial_net_helper_is_exact():
    x = np.linspace(-1, 1, 7)
    net = polynomial_net([1, 2, 1], [x], [lambda i, j, t: (i + 1) * t**3 - t, lambda i, j, t: 0.5 * t + j])
    g = np.linspace(-1.5, 1.5, 31)
    expect = sum(0.5 * ((i + 1) * g**3 - g) + i for i in range(2))
    np.testing.assert_allclose(net(g)[:, 0], expect, atol=1e-9)
