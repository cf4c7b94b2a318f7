"""Adaptive skill-command sampling that counteracts mode collapse.

Recent episodes are kept in a sliding window of (skill, mean task reward)
records. Per-skill progress is the windowed average reward divided by a
configured optimal-state reward, clamped to [0, 1]. The next skill is drawn
with probability proportional to (1 - progress + floor), so under-trained
skills get more episodes and no skill is ever starved. The velocity command
is uniform on [-0.5, 0.5].
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InputError

Array = np.ndarray

VELOCITY_LIMIT = 0.5
DEFAULT_SAMPLING_FLOOR = 0.05


@dataclass
class Command:
    """(velocity, one-hot skill) pair driving the environment task."""

    velocity: float
    skill_onehot: Array

    def __post_init__(self):
        self.skill_onehot = np.asarray(self.skill_onehot, dtype=np.float64)
        if not np.isclose(self.skill_onehot.sum(), 1.0) or not np.all(
            np.isin(self.skill_onehot, (0.0, 1.0))
        ):
            raise InputError(f"skill command must be one-hot, got {self.skill_onehot}")
        if abs(self.velocity) > VELOCITY_LIMIT + 1e-12:
            raise InputError(f"|velocity| must be <= {VELOCITY_LIMIT}")

    @property
    def skill_index(self) -> int:
        return int(np.argmax(self.skill_onehot))


@dataclass
class CommandBuffer:
    """Sliding window of (skill index, mean per-step task reward) records."""

    window: int = 200
    records: deque = field(default_factory=deque)

    def __post_init__(self):
        self.records = deque(self.records, maxlen=self.window)

    def __len__(self) -> int:
        return len(self.records)

    def record_episode(self, skill: int, mean_task_reward: float) -> None:
        self.records.append((int(skill), float(mean_task_reward)))

    def average_reward(self, skill: int) -> float:
        """Windowed mean reward for one skill; 0 when the skill is unseen."""
        matching = [r for s, r in self.records if s == skill]
        if not matching:
            return 0.0
        return float(np.mean(matching))

    def to_jsonable(self) -> dict:
        return {"window": self.window, "records": [[s, r] for s, r in self.records]}

    @classmethod
    def from_jsonable(cls, blob: dict) -> "CommandBuffer":
        return cls(window=int(blob["window"]), records=[tuple(r) for r in blob["records"]])


@dataclass
class SkillProgress:
    """Per-skill training progress: windowed reward over optimal reward."""

    average_rewards: Array
    optimal_rewards: Array

    def __post_init__(self):
        self.average_rewards = np.asarray(self.average_rewards, dtype=np.float64)
        self.optimal_rewards = np.asarray(self.optimal_rewards, dtype=np.float64)
        if self.average_rewards.shape != self.optimal_rewards.shape:
            raise ConfigError("average/optimal reward shapes disagree")
        if np.any(self.optimal_rewards <= 0.0):
            raise ConfigError("optimal-state rewards must be strictly positive")

    @property
    def num_skills(self) -> int:
        return self.average_rewards.shape[0]

    @classmethod
    def from_buffer(cls, buf: CommandBuffer, optimal_rewards) -> "SkillProgress":
        optimal = np.asarray(optimal_rewards, dtype=np.float64)
        avgs = np.array([buf.average_reward(s) for s in range(optimal.shape[0])])
        return cls(average_rewards=avgs, optimal_rewards=optimal)

    @classmethod
    def untrained(cls, optimal_rewards) -> "SkillProgress":
        optimal = np.asarray(optimal_rewards, dtype=np.float64)
        return cls(average_rewards=np.zeros_like(optimal), optimal_rewards=optimal)


def progress(stats: SkillProgress, skill: int) -> float:
    """Training quality for one skill, clamped to [0, 1]."""
    return float(progress_vector(stats)[skill])


def progress_vector(stats: SkillProgress) -> Array:
    return np.clip(stats.average_rewards / stats.optimal_rewards, 0.0, 1.0)


def sampling_probabilities(
    stats: SkillProgress, floor: float = DEFAULT_SAMPLING_FLOOR
) -> Array:
    """Skill distribution: p_m -> (1 - p_m + floor) / sum_k (1 - p_k + floor)."""
    weights = 1.0 - progress_vector(stats) + floor
    return weights / weights.sum()


def sample_command(
    stats: SkillProgress,
    rng: np.random.Generator,
    floor: float = DEFAULT_SAMPLING_FLOOR,
) -> Command:
    """Draw the next (velocity, skill) command."""
    probs = sampling_probabilities(stats, floor)
    skill = int(rng.choice(stats.num_skills, p=probs))
    onehot = np.zeros(stats.num_skills)
    onehot[skill] = 1.0
    velocity = float(rng.uniform(-VELOCITY_LIMIT, VELOCITY_LIMIT))
    return Command(velocity=velocity, skill_onehot=onehot)
