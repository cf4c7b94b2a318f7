"""Single-JSON checkpointing of the full training state.

The document carries network parameters (nested arrays), optimizer states,
the SIL and command buffers, current reward weights, RNG states, and the
iteration counter, with sorted keys for diffability.
"""
from __future__ import annotations

import json

import numpy as np

from .config import ExperimentConfig
from .errors import ConfigError
from .numerics import AdamState, Mlp
from .orchestrator import Trainer
from .ppo import PolicyNet, ValueNet
from .sil_buffer import SilBuffer
from .skill_selector import CommandBuffer

_RNG_FIELDS = ("rng_env", "rng_policy", "rng_selector", "rng_disc")


def checkpoint_blob(trainer: Trainer) -> dict:
    return {
        "config_hash": trainer.cfg.content_hash(),
        "iteration": trainer.iteration,
        "root_seed": trainer.cfg.run.seed,
        "policy": trainer.policy.to_jsonable(),
        "value": trainer.value.to_jsonable(),
        "disc": {
            "net": trainer.disc.net.to_jsonable(),
            "gp_weight": trainer.disc.gp_weight,
            "opt": trainer.disc.opt.to_jsonable(),
        },
        "sil_buffer": trainer.buffer.to_jsonable(),
        "command_buffer": trainer.commands.to_jsonable(),
        "weights": {
            "sil_weight": trainer.weights.sil_weight,
            "task_weight": trainer.weights.task_weight,
        },
        "last_skill_dtw": trainer.last_skill_dtw,
        "rng": {name: getattr(trainer, name).bit_generator.state for name in _RNG_FIELDS},
    }


def save_checkpoint(trainer: Trainer, path) -> None:
    with open(path, "w") as fh:
        json.dump(checkpoint_blob(trainer), fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(cfg: ExperimentConfig, path) -> Trainer:
    """Rebuild a Trainer from a checkpoint; dimensions must match the config."""
    try:
        with open(path) as fh:
            blob = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"checkpoint not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"checkpoint is not valid JSON: {exc}") from exc

    trainer = Trainer(cfg)
    policy = PolicyNet.from_jsonable(blob["policy"])
    value = ValueNet.from_jsonable(blob["value"])
    disc_net = Mlp.from_jsonable(blob["disc"]["net"])
    for fresh, loaded, label in (
        (trainer.policy.trunk, policy.trunk, "policy"),
        (trainer.value.net, value.net, "value"),
        (trainer.disc.net, disc_net, "discriminator"),
    ):
        if fresh.layer_sizes != loaded.layer_sizes:
            raise ConfigError(
                f"checkpoint/config mismatch: {label} layers {loaded.layer_sizes} "
                f"vs configured {fresh.layer_sizes}"
            )
    buffer = SilBuffer.from_jsonable(blob["sil_buffer"])
    if buffer.num_skills != trainer.num_skills:
        raise ConfigError(
            f"checkpoint/config mismatch: buffer has {buffer.num_skills} skills, "
            f"config has {trainer.num_skills}"
        )

    trainer.policy = policy
    trainer.value = value
    trainer.disc.net = disc_net
    trainer.disc.gp_weight = float(blob["disc"]["gp_weight"])
    trainer.disc.opt = AdamState.from_jsonable(blob["disc"]["opt"])
    trainer.buffer = buffer
    trainer.commands = CommandBuffer.from_jsonable(blob["command_buffer"])
    trainer.iteration = int(blob["iteration"])
    trainer.last_skill_dtw = [
        None if d is None else float(d) for d in blob["last_skill_dtw"]
    ]
    trainer.weights = trainer._recompute_weights(0.0)
    trainer.weights.sil_weight = float(blob["weights"]["sil_weight"])
    trainer.weights.task_weight = float(blob["weights"]["task_weight"])
    for name in _RNG_FIELDS:
        getattr(trainer, name).bit_generator.state = blob["rng"][name]
    return trainer
