"""Experiment configuration: TOML loading, validation, seeding.

Each subsystem owns its config dataclass; this module composes them into an
ExperimentConfig, maps TOML sections onto them ([env], [ppo], [sil],
[selector], [rewards], [run], [skills.N]), and resolves derived values.
All randomness flows from one root seed through named sub-streams so
components can be reseeded independently.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .ppo import PpoConfig
from .toy_env import EnvConfig, SkillSpec, all_target_poses, validate_skill_feasibility
from .trajectory import TargetPose, load_target_poses

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

MODES = ("full", "il-by-tp", "no-dtw", "no-selector")

_STREAMS = {"init": 0, "env": 1, "policy": 2, "selector": 3, "discriminator": 4, "eval": 5}


def rng_stream(root_seed: int, name: str) -> np.random.Generator:
    """Independent, reproducible generator for a named component."""
    if name not in _STREAMS:
        raise ConfigError(f"unknown rng stream {name!r}")
    seq = np.random.SeedSequence(entropy=int(root_seed), spawn_key=(_STREAMS[name],))
    return np.random.default_rng(seq)


@dataclass
class SilConfig:
    capacity: int = 8
    disc_hidden: tuple[int, ...] = (128, 128)
    disc_lr: float = 1e-3
    disc_epochs: int = 5
    disc_batch: int = 256
    gp_weight: float = 10.0
    eq1_additive: bool = False  # literal additive assessment, fidelity runs only
    dtw_normalize: bool = False  # length-normalized DTW on the assessment path


@dataclass
class RewardConfig:
    dtw_scale: float = 5.0
    task_scale: float | None = None  # None -> 0.8 * max optimal reward
    dtw_normalize: bool = False  # length-normalized DTW on the weight/score path


@dataclass
class SelectorConfig:
    window: int = 200
    floor: float = 0.05


@dataclass
class RunConfig:
    iterations: int = 100
    seed: int = 0
    mode: str = "full"
    out_dir: str = "runs/out"
    checkpoint_interval: int = 100
    eval_episodes: int = 4
    transition_episodes: int = 8
    transition_threshold_scale: float = 1.5
    pose_file: str | None = None


@dataclass
class ExperimentConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    ppo: PpoConfig = field(default_factory=PpoConfig)
    sil: SilConfig = field(default_factory=SilConfig)
    selector: SelectorConfig = field(default_factory=SelectorConfig)
    rewards: RewardConfig = field(default_factory=RewardConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def validate(self) -> None:
        if self.run.mode not in MODES:
            raise ConfigError(f"run.mode must be one of {MODES}, got {self.run.mode!r}")
        if self.run.iterations < 1:
            raise ConfigError("run.iterations must be >= 1")
        if self.ppo.num_envs < 1:
            raise ConfigError("ppo.num_envs must be >= 1")
        if self.rewards.dtw_scale <= 0:
            raise ConfigError("rewards.dtw_scale must be positive")
        if self.rewards.task_scale is not None and self.rewards.task_scale <= 0:
            raise ConfigError("rewards.task_scale must be positive")
        validate_skill_feasibility(self.env)
        self.target_poses()  # raises on malformed pose files

    def task_scale(self) -> float:
        if self.rewards.task_scale is not None:
            return self.rewards.task_scale
        return 0.8 * float(self.env.optimal_rewards().max())

    def target_poses(self) -> list[TargetPose]:
        if self.run.pose_file:
            poses = load_target_poses(
                self.run.pose_file,
                joint_dim=self.env.joint_count,
                joint_limit=self.env.joint_limit,
            )
            if len(poses) != self.env.num_skills:
                raise ConfigError(
                    f"pose file defines {len(poses)} skills, config has "
                    f"{self.env.num_skills}"
                )
            return poses
        return all_target_poses(self.env)

    def to_dict(self) -> dict:
        blob = dataclasses.asdict(self)
        return _tuples_to_lists(blob)

    def content_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()


def _tuples_to_lists(obj):
    if isinstance(obj, dict):
        return {k: _tuples_to_lists(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tuples_to_lists(v) for v in obj]
    return obj


def _apply_section(instance, section: dict, name: str, tuple_fields=()):
    known = {f.name for f in dataclasses.fields(instance)}
    for key, value in section.items():
        if key not in known:
            raise ConfigError(f"unknown key [{name}] {key!r}")
        if key in tuple_fields and isinstance(value, list):
            value = tuple(value)
        setattr(instance, key, value)
    return instance


def _parse_skills(section: dict) -> list[SkillSpec]:
    try:
        order = sorted(section, key=int)
    except ValueError as exc:
        raise ConfigError(f"[skills] subsections must be numeric indices: {exc}") from exc
    if [int(k) for k in order] != list(range(len(order))):
        raise ConfigError(f"[skills] indices must be 0..{len(order) - 1}")
    skills = []
    for key in order:
        entry = dict(section[key])
        try:
            skills.append(
                SkillSpec(
                    name=str(entry.pop("name")),
                    target_height=float(entry.pop("height")),
                    optimal_reward=float(entry.pop("optimal_reward", 0.75)),
                    bipedal=bool(entry.pop("bipedal", False)),
                )
            )
        except KeyError as exc:
            raise ConfigError(f"[skills.{key}] missing field {exc}") from exc
        if entry:
            raise ConfigError(f"[skills.{key}] unknown keys {sorted(entry)}")
    return skills


def load_config(path) -> ExperimentConfig:
    """Parse a TOML experiment file into a validated ExperimentConfig."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file is not valid TOML: {exc}") from exc

    cfg = ExperimentConfig()
    known_sections = {"env", "ppo", "sil", "selector", "rewards", "run", "skills"}
    unknown = set(data) - known_sections
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")

    skills = _parse_skills(data["skills"]) if "skills" in data else None
    _apply_section(cfg.env, data.get("env", {}), "env",
                   tuple_fields=("damping_range", "inertia_range", "gain_range"))
    if skills is not None:
        cfg.env.skills = skills
    _apply_section(cfg.ppo, data.get("ppo", {}), "ppo", tuple_fields=("hidden",))
    _apply_section(cfg.sil, data.get("sil", {}), "sil", tuple_fields=("disc_hidden",))
    _apply_section(cfg.selector, data.get("selector", {}), "selector")
    _apply_section(cfg.rewards, data.get("rewards", {}), "rewards")
    _apply_section(cfg.run, data.get("run", {}), "run")
    cfg.env = EnvConfig(**{f.name: getattr(cfg.env, f.name) for f in dataclasses.fields(cfg.env)})
    cfg.validate()
    return cfg
