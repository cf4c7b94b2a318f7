"""Clipped-surrogate policy optimization with generalized advantage estimation.

The Gaussian policy has a state-dependent mean (tanh MLP trunk) and a
state-independent learnable log-std vector, kept inside [-5, 2]. The value
net shares the observation but no parameters. All gradients flow through
the hand-rolled backprop in `numerics`; the clipped-surrogate gradient with
respect to each sample's log-probability is written out explicitly.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import DivergenceError, InputError
from .numerics import AdamState, Mlp

log = logging.getLogger(__name__)

Array = np.ndarray

LOG_STD_BOUNDS = (-5.0, 2.0)
LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class PpoConfig:
    gamma: float = 0.99
    lam: float = 0.95
    clip_ratio: float = 0.2
    epochs: int = 5
    minibatches: int = 4
    entropy_coef: float = 0.005
    num_envs: int = 64
    policy_lr: float = 3e-4
    value_lr: float = 1e-3
    hidden: tuple[int, ...] = (128, 128)
    log_std_init: float = 0.0


@dataclass
class PolicyNet:
    trunk: Mlp  # observation -> action mean
    log_std: Array
    opt: AdamState

    @property
    def action_dim(self) -> int:
        return self.trunk.layer_sizes[-1]

    def params(self) -> list[Array]:
        return self.trunk.params() + [self.log_std]

    def to_jsonable(self) -> dict:
        return {
            "trunk": self.trunk.to_jsonable(),
            "log_std": self.log_std.tolist(),
            "opt": self.opt.to_jsonable(),
        }

    @classmethod
    def from_jsonable(cls, blob: dict) -> "PolicyNet":
        return cls(
            trunk=Mlp.from_jsonable(blob["trunk"]),
            log_std=np.asarray(blob["log_std"], dtype=np.float64),
            opt=AdamState.from_jsonable(blob["opt"]),
        )


@dataclass
class ValueNet:
    net: Mlp
    opt: AdamState

    def to_jsonable(self) -> dict:
        return {"net": self.net.to_jsonable(), "opt": self.opt.to_jsonable()}

    @classmethod
    def from_jsonable(cls, blob: dict) -> "ValueNet":
        return cls(
            net=Mlp.from_jsonable(blob["net"]),
            opt=AdamState.from_jsonable(blob["opt"]),
        )


def init_policy(
    obs_dim: int, action_dim: int, cfg: PpoConfig, rng: np.random.Generator
) -> PolicyNet:
    trunk = numerics.init_mlp((obs_dim, *cfg.hidden, action_dim), rng, final_scale=0.01)
    log_std = np.full(action_dim, cfg.log_std_init)
    opt = numerics.init_adam(trunk.params() + [log_std], cfg.policy_lr)
    return PolicyNet(trunk=trunk, log_std=log_std, opt=opt)


def init_value(obs_dim: int, cfg: PpoConfig, rng: np.random.Generator) -> ValueNet:
    net = numerics.init_mlp((obs_dim, *cfg.hidden, 1), rng)
    return ValueNet(net=net, opt=numerics.init_adam(net.params(), cfg.value_lr))


def gaussian_log_prob(actions: Array, mean: Array, log_std: Array) -> Array:
    z = (actions - mean) / np.exp(log_std)
    return (-0.5 * z**2 - log_std - 0.5 * LOG_2PI).sum(axis=-1)


def sample_actions(
    policy: PolicyNet, obs: Array, rng: np.random.Generator
) -> tuple[Array, Array]:
    """Draw actions and their log-probs for a batch of observations."""
    mean = numerics.forward(policy.trunk, obs)
    std = np.exp(policy.log_std)
    actions = mean + std * rng.standard_normal(mean.shape)
    return actions, gaussian_log_prob(actions, mean, policy.log_std)


def mean_action(policy: PolicyNet, obs: Array) -> Array:
    return numerics.forward(policy.trunk, obs)


def policy_entropy(policy: PolicyNet) -> float:
    return float((policy.log_std + 0.5 * (1.0 + LOG_2PI)).sum())


@dataclass
class RolloutBuffer:
    """Fixed-horizon on-policy storage, (horizon, num_envs, ...) arrays.

    Environments that terminate early stop contributing: `lengths` holds the
    per-env episode length and `valid_mask` the per-step validity.
    """

    obs: Array
    actions: Array
    log_probs: Array
    rewards: Array  # blended total reward fed to the learner
    task_rewards: Array
    values: Array
    lengths: Array  # (num_envs,)
    terminated: Array  # (num_envs,) bool: ended at the tilt limit
    bootstrap_values: Array  # (num_envs,) V(s_H) for truncated episodes

    @property
    def horizon(self) -> int:
        return self.obs.shape[0]

    @property
    def num_envs(self) -> int:
        return self.obs.shape[1]

    @property
    def valid_mask(self) -> Array:
        steps = np.arange(self.horizon)[:, None]
        return steps < self.lengths[None, :]


def compute_gae(
    buffer: RolloutBuffer, gamma: float, lam: float, normalize: bool = True
) -> tuple[Array, Array]:
    """GAE advantages and value targets; optionally batch-normalized.

    Terminated episodes bootstrap 0 past the end; truncated ones bootstrap
    the cached V(s_H).
    """
    horizon, num_envs = buffer.rewards.shape
    adv = np.zeros((horizon, num_envs))
    terminal_value = np.where(buffer.terminated, 0.0, buffer.bootstrap_values)
    next_value = np.zeros(num_envs)
    next_adv = np.zeros(num_envs)
    for t in range(horizon - 1, -1, -1):
        is_last = t == buffer.lengths - 1
        nv = np.where(is_last, terminal_value, next_value)
        na = np.where(is_last, 0.0, next_adv)
        delta = buffer.rewards[t] + gamma * nv - buffer.values[t]
        adv[t] = delta + gamma * lam * na
        next_value = buffer.values[t]
        next_adv = adv[t]
    returns = adv + buffer.values
    if normalize:
        valid = adv[buffer.valid_mask]
        adv = (adv - valid.mean()) / (valid.std() + 1e-8)
    return adv, returns


def value_loss_and_grads(value: ValueNet, obs: Array, targets: Array):
    """Mean-squared value error and exact gradients."""
    preds, acts = numerics.forward_cached(value.net, obs)
    preds = preds[:, 0]
    err = preds - targets
    loss = float((err**2).mean())
    grads, _ = numerics.backward(
        value.net, acts, (2.0 * err / err.shape[0])[:, None]
    )
    return loss, grads


def policy_loss_and_grads(
    policy: PolicyNet,
    obs: Array,
    actions: Array,
    old_log_probs: Array,
    advantages: Array,
    clip_ratio: float,
    entropy_coef: float,
):
    """Clipped-surrogate loss with entropy bonus, plus exact gradients.

    Returns (loss, trunk_grads, log_std_grad, stats).
    """
    n = obs.shape[0]
    mean, acts = numerics.forward_cached(policy.trunk, obs)
    log_std = policy.log_std
    inv_var = np.exp(-2.0 * log_std)
    log_probs = gaussian_log_prob(actions, mean, log_std)
    ratio = np.exp(log_probs - old_log_probs)
    surr1 = ratio * advantages
    surr2 = np.clip(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio) * advantages
    entropy = policy_entropy(policy)
    loss = float(-np.minimum(surr1, surr2).mean() - entropy_coef * entropy)
    if not np.isfinite(loss):
        raise DivergenceError("policy loss diverged")

    # d(-min)/d log_prob: -A * ratio where the unclipped branch is active
    use_unclipped = surr1 <= surr2
    g_lp = np.where(use_unclipped, -advantages * ratio, 0.0) / n
    diff = actions - mean
    g_mean = g_lp[:, None] * diff * inv_var  # d log_prob / d mean
    g_log_std = (g_lp[:, None] * (diff**2 * inv_var - 1.0)).sum(axis=0)
    g_log_std -= entropy_coef  # d entropy / d log_std = 1 per dim
    trunk_grads, _ = numerics.backward(policy.trunk, acts, g_mean)
    stats = {
        "clip_fraction": float(np.mean(~use_unclipped & (np.abs(ratio - 1.0) > clip_ratio))),
        "approx_kl": float(np.mean(old_log_probs - log_probs)),
        "entropy": entropy,
    }
    return loss, trunk_grads, g_log_std, stats


def ppo_update(
    policy: PolicyNet,
    value: ValueNet,
    buffer: RolloutBuffer,
    cfg: PpoConfig,
    rng: np.random.Generator,
) -> dict:
    """Run the configured epochs of minibatch updates; returns mean stats."""
    adv, returns = compute_gae(buffer, cfg.gamma, cfg.lam)
    mask = buffer.valid_mask
    obs = buffer.obs[mask]
    actions = buffer.actions[mask]
    old_log_probs = buffer.log_probs[mask]
    flat_adv = adv[mask]
    flat_ret = returns[mask]
    n = obs.shape[0]
    if n == 0:
        raise InputError("rollout buffer holds no valid steps")

    policy_losses, value_losses, clip_fracs, kls = [], [], [], []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for chunk in np.array_split(order, cfg.minibatches):
            if chunk.size == 0:
                continue
            p_loss, trunk_grads, g_log_std, stats = policy_loss_and_grads(
                policy,
                obs[chunk],
                actions[chunk],
                old_log_probs[chunk],
                flat_adv[chunk],
                cfg.clip_ratio,
                cfg.entropy_coef,
            )
            numerics.adam_step(
                policy.opt,
                policy.params(),
                trunk_grads.params() + [g_log_std],
            )
            np.clip(policy.log_std, *LOG_STD_BOUNDS, out=policy.log_std)

            v_loss, v_grads = value_loss_and_grads(value, obs[chunk], flat_ret[chunk])
            numerics.adam_step(value.opt, value.net.params(), v_grads.params())

            policy_losses.append(p_loss)
            value_losses.append(v_loss)
            clip_fracs.append(stats["clip_fraction"])
            kls.append(stats["approx_kl"])
    return {
        "policy_loss": float(np.mean(policy_losses)),
        "value_loss": float(np.mean(value_losses)),
        "clip_fraction": float(np.mean(clip_fracs)),
        "approx_kl": float(np.mean(kls)),
        "entropy": policy_entropy(policy),
    }
