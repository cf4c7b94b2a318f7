"""Episode records, the joint-position feature map, and trajectory assessment.

A trajectory is assessed at episode end as

    A = sum of per-step task rewards - DTW(poses, expanded target pose)

where the target pose is duplicated along the time axis to half the
trajectory length. Higher A means better. (The additive variant, which
rewards pose dissimilarity, is kept behind a flag for fidelity experiments.)
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dtw import as_pose_sequence, dtw_distance
from .errors import ConfigError, InputError

Array = np.ndarray


@dataclass
class Trajectory:
    """One completed episode for a single skill.

    `states` is a sequence of per-step state records; each must expose a
    joint-position vector attribute `q`.
    """

    skill_id: int
    states: Sequence
    actions: Array
    task_rewards: Array
    terminated: bool = False

    def __post_init__(self):
        self.actions = np.asarray(self.actions, dtype=np.float64)
        self.task_rewards = np.asarray(self.task_rewards, dtype=np.float64)
        n = len(self.states)
        if n != len(self.actions) + 1 or n != len(self.task_rewards) + 1:
            raise InputError(
                f"{n} states need {n - 1} actions and rewards, got "
                f"{len(self.actions)} / {len(self.task_rewards)}"
            )

    def __len__(self) -> int:
        return len(self.states)


@dataclass
class TargetPose:
    """The single reference joint-position vector for one skill."""

    skill_id: int
    pose: Array

    def __post_init__(self):
        self.pose = np.asarray(self.pose, dtype=np.float64)
        if self.pose.ndim != 1 or not np.all(np.isfinite(self.pose)):
            raise InputError("target pose must be a finite 1-D vector")


@dataclass
class ImitationFeatures:
    """Consecutive joint-position pairs, one 2J-dim row per transition."""

    transitions: Array


def feature_map(traj: Trajectory) -> tuple[ImitationFeatures, Array]:
    """Extract (transition features, pose sequence) from a trajectory."""
    if len(traj.states) < 2:
        raise InputError("feature map needs at least 2 states")
    poses = as_pose_sequence(np.stack([np.asarray(s.q, dtype=np.float64) for s in traj.states]))
    transitions = np.concatenate([poses[:-1], poses[1:]], axis=1)
    return ImitationFeatures(transitions), poses


def pose_sequence_from_transitions(transitions: Array) -> Array:
    """Invert the transition pairing back into a pose sequence."""
    transitions = np.asarray(transitions, dtype=np.float64)
    if transitions.ndim != 2 or transitions.shape[0] == 0 or transitions.shape[1] % 2:
        raise InputError(f"bad transition array shape {transitions.shape}")
    half = transitions.shape[1] // 2
    return np.concatenate([transitions[:1, :half], transitions[:, half:]], axis=0)


def expand_target_pose(target: TargetPose, traj_len: int) -> Array:
    """Duplicate the pose along time to half the trajectory length (min 1)."""
    if traj_len < 2:
        raise InputError(f"trajectory length must be >= 2, got {traj_len}")
    frames = max(1, traj_len // 2)
    return np.tile(target.pose, (frames, 1))


def dtw_to_target(poses: Array, target: TargetPose, normalize: bool = False) -> float:
    """DTW between a pose sequence and the length-matched expanded target."""
    poses = as_pose_sequence(poses)
    return dtw_distance(poses, expand_target_pose(target, poses.shape[0]), normalize=normalize)


def assess(
    traj: Trajectory,
    target: TargetPose,
    *,
    additive_dtw: bool = False,
    normalize: bool = False,
) -> float:
    """Assessment value A of a completed episode (higher = better)."""
    if traj.skill_id != target.skill_id:
        raise InputError(
            f"skill mismatch: trajectory {traj.skill_id} vs target {target.skill_id}"
        )
    _, poses = feature_map(traj)
    d = dtw_to_target(poses, target, normalize=normalize)
    total = float(np.sum(traj.task_rewards))
    return total + d if additive_dtw else total - d


def load_target_poses(path, joint_dim: int | None = None, joint_limit: float | None = None) -> list[TargetPose]:
    """Read a JSON array of {skill, id, pose} records, one pose per skill."""
    try:
        with open(path) as fh:
            blob = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"target pose file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"target pose file is not valid JSON: {exc}") from exc
    if not isinstance(blob, list) or not blob:
        raise ConfigError("target pose file must be a non-empty JSON array")
    seen: dict[int, str] = {}
    poses = []
    for rec in blob:
        try:
            skill_id = int(rec["id"])
            name = str(rec["skill"])
            vec = np.asarray(rec["pose"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed target pose record {rec!r}") from exc
        if skill_id in seen:
            raise ConfigError(
                f"skill id {skill_id} has more than one target pose "
                f"({seen[skill_id]!r} and {name!r})"
            )
        seen[skill_id] = name
        if joint_dim is not None and vec.shape != (joint_dim,):
            raise ConfigError(
                f"pose for skill {name!r} has dimension {vec.shape}, expected ({joint_dim},)"
            )
        if joint_limit is not None and np.any(np.abs(vec) > joint_limit + 1e-12):
            raise ConfigError(f"pose for skill {name!r} exceeds joint limit {joint_limit}")
        poses.append(TargetPose(skill_id=skill_id, pose=vec))
    ids = sorted(seen)
    if ids != list(range(len(ids))):
        raise ConfigError(f"skill ids must be 0..{len(ids) - 1}, got {ids}")
    poses.sort(key=lambda p: p.skill_id)
    return poses
