"""Blending of imitation, task, and regularization rewards.

Per-step total reward:

    r = sil_weight * task_weight * r_sil + (1 - task_weight) * r_task + r_reg

with reg weight pinned to 1.0. Both dynamic weights shrink exponentially in
the deviation of a measured quantity from its scale hyperparameter:
sil_weight from the buffered trajectories' DTW distance to their targets
(summed over skills), task_weight from the recent mean task reward. Skills
with no buffer entries contribute their full scale |0 - dtw_scale| to the
sum, keeping imitation weight low until every skill has exemplars.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dtw import dtw_distance
from .errors import ConfigError
from .sil_buffer import SilBuffer
from .trajectory import TargetPose, expand_target_pose

Array = np.ndarray

REG_WEIGHT = 1.0  # constant across training


@dataclass
class RewardWeights:
    sil_weight: float
    task_weight: float
    dtw_scale: float  # sets the DTW deviation at which imitation weight peaks
    task_scale: float  # sets the task-reward deviation scale
    reg_weight: float = REG_WEIGHT

    def __post_init__(self):
        if self.dtw_scale <= 0 or self.task_scale <= 0:
            raise ConfigError("reward scale hyperparameters must be positive")


def buffer_dtw_expectation(
    buffer: SilBuffer, target: TargetPose, normalize: bool = False
) -> float | None:
    """Mean DTW of a skill's stored entries to its expanded target pose.

    None when the skill has no entries yet.
    """
    entries = buffer.entries(target.skill_id)
    if not entries:
        return None
    dists = [
        dtw_distance(
            e.poses,
            expand_target_pose(target, e.poses.shape[0]),
            normalize=normalize,
        )
        for e in entries
    ]
    return float(np.mean(dists))


def sil_weight(
    buffer: SilBuffer,
    targets: list[TargetPose],
    dtw_scale: float,
    num_skills: int,
    normalize: bool = False,
) -> float:
    """Imitation reward weight in (0, 1/num_skills]."""
    if dtw_scale <= 0:
        raise ConfigError("dtw_scale must be positive")
    total_dev = 0.0
    for target in targets:
        expectation = buffer_dtw_expectation(buffer, target, normalize=normalize)
        if expectation is None:
            expectation = 0.0  # missing skill counts as maximal mismatch
        total_dev += abs(expectation - dtw_scale)
    return float(np.exp(-total_dev) / num_skills)


def task_weight(r_task: float, task_scale: float) -> float:
    """Task-vs-imitation gate in (0, 1]; 1 exactly at r_task = task_scale."""
    if task_scale <= 0:
        raise ConfigError("task_scale must be positive")
    return float(np.exp(-abs(r_task - task_scale)))


def total_reward(r_sil, r_task, r_reg, weights: RewardWeights):
    """Blend the three reward streams; elementwise over arrays."""
    return (
        weights.sil_weight * weights.task_weight * np.asarray(r_sil)
        + (1.0 - weights.task_weight) * np.asarray(r_task)
        + weights.reg_weight * np.asarray(r_reg)
    )
