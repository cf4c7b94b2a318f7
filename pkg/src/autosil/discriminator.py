"""Least-squares adversarial discriminator over joint-position transitions.

The scalar-output net is trained to score buffer transitions +1 and policy
transitions -1, with a gradient penalty on buffer samples:

    loss = mean_B (D(x) - 1)^2 + mean_P (D(x) + 1)^2
         + gp_weight * mean_B ||d D(x)/d x||^2

All gradients, including the penalty's second-order contribution, are exact
(double backprop through the tanh MLP). The policy-side imitation reward is
the bounded map r = max(0, 1 - 0.25 (D(x) - 1)^2) in [0, 1].
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import DivergenceError, InputError
from .numerics import AdamState, Mlp, MlpGrads

log = logging.getLogger(__name__)

Array = np.ndarray


@dataclass
class Discriminator:
    net: Mlp
    gp_weight: float
    opt: AdamState

    @property
    def input_dim(self) -> int:
        return self.net.layer_sizes[0]


def init_discriminator(
    input_dim: int,
    hidden: tuple[int, ...],
    rng: np.random.Generator,
    gp_weight: float = 10.0,
    learning_rate: float = 1e-3,
) -> Discriminator:
    if gp_weight < 0:
        raise InputError("gradient penalty weight must be nonnegative")
    net = numerics.init_mlp((input_dim, *hidden, 1), rng, final_scale=0.1)
    return Discriminator(
        net=net,
        gp_weight=float(gp_weight),
        opt=numerics.init_adam(net.params(), learning_rate),
    )


def _as_batch(d: Discriminator, batch) -> Array:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] != d.input_dim:
        raise InputError(
            f"batch shape {np.shape(batch)} incompatible with discriminator "
            f"input dim {d.input_dim}"
        )
    return x


def disc_loss(d: Discriminator, buffer_batch, policy_batch) -> tuple[float, MlpGrads]:
    """Loss value and exact parameter gradients for one update step."""
    xb = _as_batch(d, buffer_batch)
    xp = _as_batch(d, policy_batch)

    db, acts_b = numerics.forward_cached(d.net, xb)
    dp, acts_p = numerics.forward_cached(d.net, xp)
    buffer_term = float(((db - 1.0) ** 2).mean())
    policy_term = float(((dp + 1.0) ** 2).mean())

    grads, _ = numerics.backward(d.net, acts_b, 2.0 * (db - 1.0) / xb.shape[0])
    pol_grads, _ = numerics.backward(d.net, acts_p, 2.0 * (dp + 1.0) / xp.shape[0])
    grads.add_scaled(pol_grads)

    gp = 0.0
    if d.gp_weight > 0.0:
        gp, gp_grads = numerics.grad_penalty_backward(d.net, acts_b)
        grads.add_scaled(gp_grads, d.gp_weight)

    loss = buffer_term + policy_term + d.gp_weight * gp
    if not np.isfinite(loss):
        raise DivergenceError(f"discriminator loss diverged: {loss}")
    return loss, grads


def score(d: Discriminator, transitions) -> Array | float:
    """Raw discriminator output D(x)."""
    x = np.asarray(transitions, dtype=np.float64)
    single = x.ndim == 1
    out = numerics.forward(d.net, _as_batch(d, x))[:, 0]
    return float(out[0]) if single else out


def sil_reward(d: Discriminator, transition) -> Array | float:
    """Imitation reward in [0, 1]; 1 exactly at D(x) = 1, 0 outside [-1, 3]."""
    out = score(d, transition)
    return sil_reward_from_score(out)


def sil_reward_from_score(d_out):
    r = np.maximum(0.0, 1.0 - 0.25 * (np.asarray(d_out, dtype=np.float64) - 1.0) ** 2)
    if np.ndim(d_out) == 0:
        return float(r)
    return r


def update(d: Discriminator, buffer_batch, policy_batch, epochs: int) -> list[float]:
    """Run `epochs` optimizer steps on disc_loss; returns per-epoch losses."""
    losses: list[float] = []
    for epoch in range(epochs):
        loss, grads = disc_loss(d, buffer_batch, policy_batch)
        numerics.adam_step(d.opt, d.net.params(), grads.params())
        if not d.net.all_finite():
            raise DivergenceError(f"discriminator parameters diverged at epoch {epoch}")
        losses.append(loss)
        log.debug("disc epoch %d loss %.6f", epoch, loss)
    return losses
