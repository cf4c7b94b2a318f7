"""Dense MLPs with hand-rolled backpropagation and an Adam optimizer.

All parameters are plain float64 numpy arrays. Weights are stored row-major
as (fan_in, fan_out) matrices so a batch forward pass is ``acts @ W + b``.
Hidden layers use tanh, the output layer is linear. Training runs in 64-bit
so finite-difference gradient checks are meaningful.

Besides the ordinary backward pass this module provides an exact
double-backpropagation routine (`grad_penalty_backward`) that differentiates
the squared input-gradient norm of a scalar-output network with respect to
the network parameters. No finite differences are used anywhere outside
tests.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DivergenceError

Array = np.ndarray


@dataclass
class Mlp:
    """Feed-forward net: tanh hidden layers, identity output."""

    layer_sizes: tuple[int, ...]
    weights: list[Array]
    biases: list[Array]

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def params(self) -> list[Array]:
        """Flat parameter list, interleaved [W0, b0, W1, b1, ...]."""
        out: list[Array] = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.params())

    def to_jsonable(self) -> dict:
        return {
            "layer_sizes": list(self.layer_sizes),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_jsonable(cls, blob: dict) -> "Mlp":
        sizes = tuple(int(n) for n in blob["layer_sizes"])
        weights = [np.asarray(w, dtype=np.float64) for w in blob["weights"]]
        biases = [np.asarray(b, dtype=np.float64) for b in blob["biases"]]
        net = cls(sizes, weights, biases)
        _check_consistent(net)
        return net


@dataclass
class MlpGrads:
    """Gradients shaped exactly like the network parameters."""

    weights: list[Array]
    biases: list[Array]

    def params(self) -> list[Array]:
        out: list[Array] = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def add_scaled(self, other: "MlpGrads", scale: float = 1.0) -> "MlpGrads":
        for mine, theirs in zip(self.params(), other.params()):
            mine += scale * theirs
        return self

    @classmethod
    def zeros_like(cls, net: Mlp) -> "MlpGrads":
        return cls(
            [np.zeros_like(w) for w in net.weights],
            [np.zeros_like(b) for b in net.biases],
        )


def _check_consistent(net: Mlp) -> None:
    sizes = net.layer_sizes
    if len(sizes) < 2:
        raise ConfigError(f"need at least one layer, got sizes {sizes}")
    if len(net.weights) != len(sizes) - 1 or len(net.biases) != len(sizes) - 1:
        raise ConfigError("layer count does not match weight/bias count")
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        if w.shape != (sizes[i], sizes[i + 1]) or b.shape != (sizes[i + 1],):
            raise ConfigError(
                f"layer {i}: weight {w.shape} / bias {b.shape} incompatible "
                f"with sizes {sizes[i]}->{sizes[i + 1]}"
            )


def init_mlp(
    layer_sizes: tuple[int, ...] | list[int],
    rng: np.random.Generator,
    final_scale: float = 1.0,
) -> Mlp:
    """Gaussian fan-in init; `final_scale` shrinks the output layer."""
    sizes = tuple(int(n) for n in layer_sizes)
    if len(sizes) < 2 or any(n <= 0 for n in sizes):
        raise ConfigError(f"bad layer sizes {sizes}")
    weights, biases = [], []
    last = len(sizes) - 2
    for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        w = rng.normal(0.0, 1.0 / np.sqrt(n_in), size=(n_in, n_out))
        if i == last:
            w *= final_scale
        weights.append(w)
        biases.append(np.zeros(n_out))
    return Mlp(sizes, weights, biases)


def _as_batch(net: Mlp, x) -> tuple[Array, bool]:
    a = np.asarray(x, dtype=np.float64)
    single = a.ndim == 1
    a = np.atleast_2d(a)
    if a.ndim != 2 or a.shape[1] != net.layer_sizes[0]:
        raise ConfigError(
            f"input shape {np.shape(x)} incompatible with first layer size "
            f"{net.layer_sizes[0]}"
        )
    return a, single


def forward_cached(net: Mlp, x) -> tuple[Array, list[Array]]:
    """Forward pass returning (output, activations [input, h1, ..., output])."""
    a, single = _as_batch(net, x)
    acts = [a]
    last = net.num_layers - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w + b
        a = z if i == last else np.tanh(z)
        acts.append(a)
    return (a[0] if single else a), acts


def forward(net: Mlp, x) -> Array:
    y, _ = forward_cached(net, x)
    return y


def backward(net: Mlp, acts: list[Array], grad_out) -> tuple[MlpGrads, Array]:
    """Backprop `grad_out` (dloss/doutput) through cached activations.

    Returns parameter gradients plus the gradient w.r.t. the input batch.
    """
    g = np.asarray(grad_out, dtype=np.float64)
    single = g.ndim == 1
    g = np.atleast_2d(g)
    if g.shape != np.atleast_2d(acts[-1]).shape:
        raise ConfigError(
            f"upstream gradient shape {g.shape} != output shape {acts[-1].shape}"
        )
    n = net.num_layers
    d_w: list[Array] = [None] * n  # type: ignore[list-item]
    d_b: list[Array] = [None] * n  # type: ignore[list-item]
    delta = g  # identity output activation
    for layer in range(n - 1, -1, -1):
        d_w[layer] = acts[layer].T @ delta
        d_b[layer] = delta.sum(axis=0)
        upstream = delta @ net.weights[layer].T
        if layer > 0:
            delta = upstream * (1.0 - acts[layer] ** 2)
        else:
            delta = upstream
    grad_in = delta[0] if single else delta
    return MlpGrads(d_w, d_b), grad_in


def _input_grad_pass(net: Mlp, acts: list[Array]) -> tuple[list[Array], list[Array]]:
    """Gradient of the (scalar) output w.r.t. every activation.

    Returns (deltas, vs): deltas[l] = dD/dz_l per layer, vs[k] = dD/dacts[k]
    per activation position. Only valid for nets with a single output unit.
    """
    if net.layer_sizes[-1] != 1:
        raise ConfigError("input gradient pass requires a scalar output net")
    n = net.num_layers
    batch = acts[0].shape[0]
    deltas: list[Array] = [None] * n  # type: ignore[list-item]
    vs: list[Array] = [None] * n  # type: ignore[list-item]
    delta = np.ones((batch, 1))
    for layer in range(n - 1, -1, -1):
        deltas[layer] = delta
        v = delta @ net.weights[layer].T
        vs[layer] = v
        if layer > 0:
            delta = v * (1.0 - acts[layer] ** 2)
    return deltas, vs


def input_gradient(net: Mlp, acts: list[Array]) -> Array:
    """d output / d input for a scalar-output net, per batch row."""
    _, vs = _input_grad_pass(net, acts)
    return vs[0]


def grad_penalty_backward(net: Mlp, acts: list[Array]) -> tuple[float, MlpGrads]:
    """Value and exact parameter gradient of mean_b ||d D(x_b)/d x_b||^2.

    Differentiates the input-gradient computation itself (double backprop):
    first reverse the backward pass, then push the resulting activation
    adjoints back through the forward pass.
    """
    n = net.num_layers
    batch = acts[0].shape[0]
    deltas, vs = _input_grad_pass(net, acts)
    gp = float((vs[0] ** 2).sum(axis=1).mean())

    grads = MlpGrads.zeros_like(net)
    act_bar: list[Array | None] = [None] * (n + 1)
    v_bar = (2.0 / batch) * vs[0]
    for layer in range(n):
        # reverse of: vs[layer] = deltas[layer] @ W[layer].T
        delta_bar = v_bar @ net.weights[layer]
        grads.weights[layer] += v_bar.T @ deltas[layer]
        if layer == n - 1:
            break  # deltas[n-1] is the constant ones vector
        # reverse of: deltas[layer] = vs[layer+1] * (1 - acts[layer+1]^2)
        s = 1.0 - acts[layer + 1] ** 2
        s_bar = delta_bar * vs[layer + 1]
        act_bar[layer + 1] = -2.0 * acts[layer + 1] * s_bar
        v_bar = delta_bar * s

    # Push activation adjoints through the forward graph.
    for pos in range(n - 1, 0, -1):
        bar = act_bar[pos]
        if bar is None:
            continue
        z_bar = bar * (1.0 - acts[pos] ** 2)
        grads.weights[pos - 1] += acts[pos - 1].T @ z_bar
        grads.biases[pos - 1] += z_bar.sum(axis=0)
        if pos - 1 > 0:
            upstream = z_bar @ net.weights[pos - 1].T
            if act_bar[pos - 1] is None:
                act_bar[pos - 1] = upstream
            else:
                act_bar[pos - 1] = act_bar[pos - 1] + upstream
    return gp, grads


@dataclass
class AdamState:
    """Bias-corrected adaptive-moment optimizer state for a parameter list."""

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    first_moment: list[Array] = field(default_factory=list)
    second_moment: list[Array] = field(default_factory=list)

    def to_jsonable(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "step_count": self.step_count,
            "first_moment": [m.tolist() for m in self.first_moment],
            "second_moment": [v.tolist() for v in self.second_moment],
        }

    @classmethod
    def from_jsonable(cls, blob: dict) -> "AdamState":
        return cls(
            learning_rate=float(blob["learning_rate"]),
            beta1=float(blob["beta1"]),
            beta2=float(blob["beta2"]),
            eps=float(blob["eps"]),
            step_count=int(blob["step_count"]),
            first_moment=[np.asarray(m, dtype=np.float64) for m in blob["first_moment"]],
            second_moment=[np.asarray(v, dtype=np.float64) for v in blob["second_moment"]],
        )


def init_adam(
    params: list[Array],
    learning_rate: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    return AdamState(
        learning_rate=learning_rate,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
        first_moment=[np.zeros_like(p) for p in params],
        second_moment=[np.zeros_like(p) for p in params],
    )


def adam_step(state: AdamState, params: list[Array], grads: list[Array]) -> list[Array]:
    """One bias-corrected Adam update, applied to `params` in place."""
    if len(params) != len(state.first_moment) or len(params) != len(grads):
        raise ConfigError("parameter/gradient/moment counts disagree")
    for p, g, m in zip(params, grads, state.first_moment):
        if p.shape != g.shape or p.shape != m.shape:
            raise ConfigError(f"shape mismatch: param {p.shape} vs grad {g.shape}")
        if not np.all(np.isfinite(g)):
            raise DivergenceError("non-finite gradient")
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params
