import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from autosil import numerics
from autosil.errors import ConfigError, DivergenceError
from oracles import finite_diff_grads, grad_relative_error


def make_net(sizes, rng):
    return numerics.init_mlp(sizes, rng)


def test_forward_zero_net_annihilates():
    net = numerics.Mlp(
        (3, 2, 1),
        [np.zeros((3, 2)), np.zeros((2, 1))],
        [np.zeros(2), np.zeros(1)],
    )
    out = numerics.forward(net, np.array([1.0, -2.0, 0.5]))
    assert np.array_equal(out, np.zeros(1))


def test_forward_identity_linear_layer():
    net = numerics.Mlp((3, 3), [np.eye(3)], [np.zeros(3)])
    x = np.array([0.3, -1.2, 4.0])
    assert np.allclose(numerics.forward(net, x), x)


def test_forward_hand_computed_221():
    # 2-2-1 net evaluated by hand: h = tanh(W1 x + b1), y = W2 h + b2.
    w1 = np.array([[0.5, -1.0], [2.0, 0.25]])
    b1 = np.array([0.1, -0.2])
    w2 = np.array([[1.5], [-0.5]])
    b2 = np.array([0.05])
    net = numerics.Mlp((2, 2, 1), [w1, w2], [b1, b2])
    x = np.array([1.0, 0.0])
    h = np.tanh(np.array([0.5 * 1.0 + 0.1, -1.0 * 1.0 - 0.2]))
    expected = 1.5 * h[0] - 0.5 * h[1] + 0.05
    out = numerics.forward(net, x)
    assert out.shape == (1,)
    assert np.isclose(out[0], expected, rtol=0, atol=1e-15)


def test_forward_dimension_mismatch_raises():
    net = make_net((4, 3), np.random.default_rng(0))
    with pytest.raises(ConfigError):
        numerics.forward(net, np.ones(5))


def test_forward_batch_matches_rows():
    rng = np.random.default_rng(3)
    net = make_net((5, 8, 2), rng)
    xs = rng.normal(size=(7, 5))
    batch = numerics.forward(net, xs)
    rows = np.stack([numerics.forward(net, x) for x in xs])
    # batched GEMM and per-row GEMV may round differently; same math though
    assert np.allclose(batch, rows, rtol=1e-13, atol=1e-15)


def test_backward_scalar_chain_rule():
    # linear 1-1 net, w=2, b=0, input 3, upstream 1: dw=3, db=1, dinput=2
    net = numerics.Mlp((1, 1), [np.array([[2.0]])], [np.zeros(1)])
    _, acts = numerics.forward_cached(net, np.array([3.0]))
    grads, din = numerics.backward(net, acts, np.array([1.0]))
    assert grads.weights[0][0, 0] == 3.0
    assert grads.biases[0][0] == 1.0
    assert din[0] == 2.0


def test_backward_zero_upstream_gives_zero_grads():
    rng = np.random.default_rng(5)
    net = make_net((4, 6, 3), rng)
    x = rng.normal(size=(2, 4))
    _, acts = numerics.forward_cached(net, x)
    grads, din = numerics.backward(net, acts, np.zeros((2, 3)))
    assert all(np.all(g == 0) for g in grads.params())
    assert np.all(din == 0)


@pytest.mark.parametrize("sizes", [(3, 5, 2), (4, 8, 8, 1), (2, 32, 3)])
def test_backward_matches_finite_differences(sizes):
    rng = np.random.default_rng(hash(sizes) % 2**32)
    net = make_net(sizes, rng)
    x = rng.normal(size=(4, sizes[0]))
    probe = rng.normal(size=(4, sizes[-1]))

    def loss():
        y = numerics.forward(net, x)
        return float((y * probe).sum())

    _, acts = numerics.forward_cached(net, x)
    grads, _ = numerics.backward(net, acts, probe)
    fd = finite_diff_grads(loss, net.params())
    assert grad_relative_error(grads.params(), fd) < 1e-4


def test_input_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    net = make_net((3, 7, 1), rng)
    x = rng.normal(size=(1, 3))
    _, acts = numerics.forward_cached(net, x)
    gin = numerics.input_gradient(net, acts)

    def out():
        return float(numerics.forward(net, x)[0, 0])

    fd = finite_diff_grads(out, [x])
    assert grad_relative_error([gin], fd) < 1e-6


@pytest.mark.parametrize("sizes", [(2, 1), (3, 6, 1), (4, 8, 5, 1)])
def test_grad_penalty_backward_matches_finite_differences(sizes):
    rng = np.random.default_rng(sum(sizes))
    net = make_net(sizes, rng)
    x = rng.normal(size=(3, sizes[0]))

    def gp_value():
        _, acts = numerics.forward_cached(net, x)
        return numerics.grad_penalty_backward(net, acts)[0]

    _, acts = numerics.forward_cached(net, x)
    gp, grads = numerics.grad_penalty_backward(net, acts)
    # value agrees with an explicit per-sample input-gradient norm
    per_sample = numerics.input_gradient(net, acts)
    assert np.isclose(gp, (per_sample**2).sum(axis=1).mean())
    fd = finite_diff_grads(gp_value, net.params())
    assert grad_relative_error(grads.params(), fd) < 1e-4


def test_grad_penalty_zero_for_constant_net():
    # zero weights => D constant => input gradient identically zero
    net = numerics.Mlp(
        (3, 4, 1),
        [np.zeros((3, 4)), np.zeros((4, 1))],
        [np.ones(4), np.full(1, 0.7)],
    )
    _, acts = numerics.forward_cached(net, np.random.default_rng(0).normal(size=(5, 3)))
    gp, grads = numerics.grad_penalty_backward(net, acts)
    assert gp == 0.0
    assert all(np.all(g == 0) for g in grads.biases)


def test_adam_zero_gradient_leaves_params():
    rng = np.random.default_rng(2)
    net = make_net((3, 4, 2), rng)
    params = net.params()
    before = [p.copy() for p in params]
    state = numerics.init_adam(params, learning_rate=0.1)
    numerics.adam_step(state, params, [np.zeros_like(p) for p in params])
    assert state.step_count == 1
    assert all(np.array_equal(a, b) for a, b in zip(params, before))


def test_adam_single_step_moves_by_lr_sign():
    p = np.array([1.0, -2.0])
    g = np.array([0.3, -0.7])
    state = numerics.init_adam([p], learning_rate=0.01)
    numerics.adam_step(state, [p], [g])
    # fresh state: mhat = g, vhat = g^2 => step = lr * g/(|g| + eps)
    expected = np.array([1.0, -2.0]) - 0.01 * np.sign(g) * (
        np.abs(g) / (np.abs(g) + state.eps)
    )
    assert np.allclose(p, expected, atol=1e-12)


def test_adam_constant_gradient_limit():
    p = np.zeros(3)
    g = np.array([1.0, -0.5, 2.0])
    state = numerics.init_adam([p], learning_rate=0.05)
    prev = p.copy()
    for _ in range(400):
        prev = p.copy()
        numerics.adam_step(state, [p], [g.copy()])
    step = p - prev
    assert np.allclose(step, -0.05 * np.sign(g), atol=1e-4)


def test_adam_rejects_nonfinite_gradient():
    p = np.zeros(2)
    state = numerics.init_adam([p], learning_rate=0.1)
    with pytest.raises(DivergenceError):
        numerics.adam_step(state, [p], [np.array([np.nan, 0.0])])


def test_adam_shape_mismatch_raises():
    p = np.zeros(2)
    state = numerics.init_adam([p], learning_rate=0.1)
    with pytest.raises(ConfigError):
        numerics.adam_step(state, [p], [np.zeros(3)])


@given(seed=st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_init_deterministic_under_seed(seed):
    a = numerics.init_mlp((4, 6, 2), np.random.default_rng(seed))
    b = numerics.init_mlp((4, 6, 2), np.random.default_rng(seed))
    assert all(np.array_equal(x, y) for x, y in zip(a.params(), b.params()))


def test_forward_deterministic():
    rng = np.random.default_rng(9)
    net = make_net((6, 12, 3), rng)
    x = rng.normal(size=(5, 6))
    assert np.array_equal(numerics.forward(net, x), numerics.forward(net, x))


def test_mlp_json_roundtrip():
    rng = np.random.default_rng(21)
    net = make_net((3, 5, 2), rng)
    clone = numerics.Mlp.from_jsonable(net.to_jsonable())
    assert clone.layer_sizes == net.layer_sizes
    assert all(np.array_equal(a, b) for a, b in zip(clone.params(), net.params()))


def test_adam_json_roundtrip():
    p = np.array([0.5, -1.5])
    state = numerics.init_adam([p], learning_rate=0.02)
    numerics.adam_step(state, [p], [np.array([0.1, 0.2])])
    clone = numerics.AdamState.from_jsonable(state.to_jsonable())
    assert clone.step_count == state.step_count
    assert np.array_equal(clone.first_moment[0], state.first_moment[0])
    assert np.array_equal(clone.second_moment[0], state.second_moment[0])
