"""Desk-scale kinematic environment: a J-joint agent whose base height is a
function of joint angles.

Dynamics are first-order: actions command joint velocities (scaled by a
per-episode motor gain), base height is (L/J) * sum cos(q), the surrogate
propulsion is v = mean(qdot * sin(q)), and a scalar tilt integrates the
front/rear joint asymmetry with per-episode damping. Episodes end at a tilt
limit or at the horizon. Per-episode randomization (damping, inertia offset,
motor gain, periodic pushes) mirrors standard sim-to-real ranges.

Skills are target base heights; the bipedal-analog skill additionally
rewards small tilt and uses a sign-flipped front half in its target pose,
which makes holding the pose fight the balance term - the hardest skill.

All state fields broadcast over a leading batch axis, so one implementation
serves both single-instance stepping (tests) and vectorized rollouts.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, InputError
from .trajectory import TargetPose

Array = np.ndarray

TWO_PI = 2.0 * np.pi


@dataclass
class SkillSpec:
    name: str
    target_height: float
    optimal_reward: float = 0.75  # selector's optimal-state reward estimate
    bipedal: bool = False


def default_skills() -> list[SkillSpec]:
    return [
        SkillSpec("walk", 0.25),
        SkillSpec("crawl", 0.10),
        SkillSpec("stilt", 0.30),
        SkillSpec("bipedal", 0.05, optimal_reward=0.9, bipedal=True),
    ]


@dataclass
class EnvConfig:
    joint_count: int = 8
    dt: float = 0.02
    joint_limit: float = np.pi / 2
    action_limit: float = 4.0
    link_scale: float = 0.35
    episode_length: int = 200
    damping_range: tuple[float, float] = (0.2, 2.0)
    inertia_range: tuple[float, float] = (-0.5, 0.5)
    gain_range: tuple[float, float] = (0.8, 1.2)
    push_interval_s: float = 5.0
    push_speed: float = 0.1
    randomize: bool = True
    tilt_limit: float = 0.5
    height_reward_scale: float = 0.05
    velocity_reward_scale: float = 0.2
    tilt_reward_scale: float = 0.1
    imbalance_gain: float = 0.1
    phase_rate: float = TWO_PI  # one gait cycle per second
    init_pose_fraction: float = 0.1
    action_cost: float = 0.01
    action_smoothness_cost: float = 0.005
    skills: list[SkillSpec] = field(default_factory=default_skills)

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        for name in ("damping_range", "inertia_range", "gain_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"{name} is not well-ordered: ({lo}, {hi})")
        if self.joint_count < 2 or self.joint_count % 2:
            raise ConfigError("joint count must be even and >= 2")
        if not self.skills:
            raise ConfigError("at least one skill is required")

    @property
    def num_skills(self) -> int:
        return len(self.skills)

    @property
    def push_interval_steps(self) -> int:
        return max(1, int(round(self.push_interval_s / self.dt)))

    def skill_heights(self) -> Array:
        return np.array([s.target_height for s in self.skills])

    def optimal_rewards(self) -> Array:
        return np.array([s.optimal_reward for s in self.skills])


@dataclass
class EnvState:
    """Kinematic state; every field broadcasts over a leading batch axis."""

    q: Array  # joint positions (rad)
    qdot: Array  # joint velocities (rad/s)
    x: Array  # base position (m)
    v: Array  # base velocity (m/s)
    phase: Array  # gait clock in [0, 2pi)
    tilt: Array  # balance scalar (rad)
    t: Array  # step count within the episode
    prev_action: Array
    # per-episode randomization draws
    gain: Array
    damping: Array
    inertia: Array


@dataclass
class BatchCommand:
    """Vectorized (velocity, skill) commands for a batch of environments."""

    velocity: Array
    skill_index: Array


def base_height(q, cfg: EnvConfig):
    """h = (L/J) * sum_j cos(q_j), in [0, L]."""
    q = np.asarray(q, dtype=np.float64)
    return cfg.link_scale * np.cos(q).mean(axis=-1)


def skill_target_pose(cfg: EnvConfig, skill: int) -> TargetPose:
    """Analytic joint pose reaching the skill's base height.

    Quadrupedal skills use the uniform solution q_j = acos(h/L). The
    bipedal analog flips the sign of one front joint and one rear joint
    (cos is even, so the height is unchanged): the pose sits far from
    every quadrupedal pose while its front/rear imbalance is exactly
    zero, so holding it earns the full tilt bonus at any damping draw.
    """
    spec = cfg.skills[skill]
    ratio = spec.target_height / cfg.link_scale
    if not 0.0 <= ratio <= 1.0:
        raise ConfigError(
            f"skill {spec.name!r}: height {spec.target_height} outside [0, {cfg.link_scale}]"
        )
    angle = float(np.arccos(ratio))
    if angle > cfg.joint_limit + 1e-12:
        raise ConfigError(f"skill {spec.name!r}: pose angle {angle} exceeds joint limit")
    pose = np.full(cfg.joint_count, angle)
    if spec.bipedal:
        pose[0] *= -1.0
        pose[cfg.joint_count // 2] *= -1.0
    return TargetPose(skill_id=skill, pose=pose)


def all_target_poses(cfg: EnvConfig) -> list[TargetPose]:
    return [skill_target_pose(cfg, s) for s in range(cfg.num_skills)]


def validate_skill_feasibility(cfg: EnvConfig) -> None:
    """Every skill's analytic pose must realize >= 90% of its height term."""
    for s, spec in enumerate(cfg.skills):
        pose = skill_target_pose(cfg, s).pose
        term = np.exp(-abs(base_height(pose, cfg) - spec.target_height) / cfg.height_reward_scale)
        if term < 0.9:
            raise ConfigError(
                f"skill {spec.name!r} infeasible: height term {term:.3f} < 0.9"
            )


def reset(
    cfg: EnvConfig,
    cmd,
    rng: np.random.Generator | None,
    batch: int | None = None,
) -> EnvState:
    """Fresh episode state; `batch=None` gives a single unbatched instance."""
    shape = () if batch is None else (batch,)
    qshape = shape + (cfg.joint_count,)
    if cfg.randomize:
        if rng is None:
            raise ConfigError("randomize=True requires an RNG at reset")
        q0 = rng.uniform(
            -cfg.init_pose_fraction * cfg.joint_limit,
            cfg.init_pose_fraction * cfg.joint_limit,
            size=qshape,
        )
        gain = rng.uniform(*cfg.gain_range, size=shape)
        damping = rng.uniform(*cfg.damping_range, size=shape)
        inertia = rng.uniform(*cfg.inertia_range, size=shape)
    else:
        q0 = np.zeros(qshape)
        gain = np.ones(shape)
        damping = np.ones(shape)
        inertia = np.zeros(shape)
    zeros = np.zeros(shape)
    return EnvState(
        q=q0,
        qdot=np.zeros(qshape),
        x=zeros.copy(),
        v=zeros.copy(),
        phase=zeros.copy(),
        tilt=zeros.copy(),
        t=np.zeros(shape, dtype=np.int64),
        prev_action=np.zeros(qshape),
        gain=gain,
        damping=damping,
        inertia=inertia,
    )


def task_reward(cfg: EnvConfig, q, v, tilt, cmd) -> Array:
    """Per-skill shaped task reward in (0, 1]."""
    heights = cfg.skill_heights()
    bipedal = np.array([s.bipedal for s in cfg.skills])
    skill = np.asarray(cmd.skill_index)
    h_target = heights[skill]
    h = base_height(q, cfg)
    height_term = np.exp(-np.abs(h - h_target) / cfg.height_reward_scale)
    vel_term = 0.5 * np.exp(-np.abs(v - np.asarray(cmd.velocity)) / cfg.velocity_reward_scale)
    tilt_term = 0.3 * np.exp(-np.abs(tilt) / cfg.tilt_reward_scale)
    is_biped = bipedal[skill]
    # bipedal: 0.2 height + 0.3 tilt + 0.5 velocity, so the max stays at 1
    height_coef = np.where(is_biped, 0.2, 0.5)
    return height_coef * height_term + np.where(is_biped, tilt_term, 0.0) + vel_term


def step(
    state: EnvState,
    action,
    cmd,
    cfg: EnvConfig,
    rng: np.random.Generator | None = None,
):
    """Advance one control step.

    Returns (next_state, task_reward, reg_reward, done). `done` is True at
    the tilt limit or the episode horizon; use `tilt_terminated` to tell the
    two apart. `cmd` needs `velocity` and `skill_index` attributes (a single
    Command or a BatchCommand).
    """
    action = np.asarray(action, dtype=np.float64)
    if action.shape != state.q.shape:
        raise InputError(f"action shape {action.shape} != q shape {state.q.shape}")

    gain = np.asarray(state.gain)[..., None]
    qdot = np.clip(gain * action, -cfg.action_limit, cfg.action_limit)
    q = np.clip(state.q + qdot * cfg.dt, -cfg.joint_limit, cfg.joint_limit)
    v = (qdot * np.sin(q)).mean(axis=-1)
    x = state.x + v * cfg.dt

    half = cfg.joint_count // 2
    imbalance = cfg.imbalance_gain * (q[..., :half].mean(axis=-1) - q[..., half:].mean(axis=-1))
    tilt = state.tilt * (1.0 - state.damping * cfg.dt) + imbalance * cfg.dt

    t = state.t + 1
    if cfg.randomize and cfg.push_speed > 0.0:
        due = (t % cfg.push_interval_steps) == 0
        if np.any(due):
            if rng is None:
                raise ConfigError("pushes require an RNG at step time")
            signs = rng.choice((-1.0, 1.0), size=np.shape(state.tilt))
            # heavier base (positive inertia offset) soaks up more of the push
            kick = cfg.push_speed * (1.0 - 0.3 * state.inertia) * signs
            tilt = tilt + np.where(due, kick, 0.0)

    phase = np.mod(state.phase + cfg.phase_rate * cfg.dt, TWO_PI)

    r_task = task_reward(cfg, q, v, tilt, cmd)
    r_reg = -cfg.action_cost * (action**2).sum(axis=-1) - cfg.action_smoothness_cost * (
        (action - state.prev_action) ** 2
    ).sum(axis=-1)

    done = (np.abs(tilt) > cfg.tilt_limit) | (t >= cfg.episode_length)
    next_state = replace(
        state,
        q=q,
        qdot=qdot,
        x=x,
        v=v,
        phase=phase,
        tilt=tilt,
        t=t,
        prev_action=action.copy(),
    )
    return next_state, r_task, r_reg, done


def tilt_terminated(state: EnvState, cfg: EnvConfig):
    return np.abs(state.tilt) > cfg.tilt_limit


def observation(state: EnvState, cmd, cfg: EnvConfig) -> Array:
    """Policy/value observation: normalized state + skill one-hot + velocity.

    The base position x is deliberately excluded (unbounded drift, no reward
    relevance); the gait clock enters as (sin, cos).
    """
    skill = np.asarray(cmd.skill_index)
    onehot = np.eye(cfg.num_skills)[skill]
    parts = [
        state.q / cfg.joint_limit,
        state.qdot / cfg.action_limit,
        np.asarray(state.v)[..., None],
        np.sin(state.phase)[..., None],
        np.cos(state.phase)[..., None],
        np.asarray(state.tilt)[..., None] / cfg.tilt_limit,
        onehot,
        np.asarray(cmd.velocity)[..., None],
    ]
    return np.concatenate([np.asarray(p, dtype=np.float64) for p in parts], axis=-1)


def observation_dim(cfg: EnvConfig) -> int:
    return 2 * cfg.joint_count + 4 + cfg.num_skills + 1


def slice_state(state: EnvState, idx: int) -> EnvState:
    """Extract one environment's unbatched state from a batched EnvState."""
    return EnvState(**{k: np.asarray(v)[idx] for k, v in vars(state).items()})


def write_trace_csv(path, qs: Array, actions: Array, task_rewards: Array, reg_rewards: Array) -> None:
    """Dump a per-step state/action trace for external analysis tools."""
    qs = np.asarray(qs)
    actions = np.asarray(actions)
    steps, joints = actions.shape
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = (
            ["step"]
            + [f"q{j}" for j in range(joints)]
            + [f"action{j}" for j in range(joints)]
            + ["r_task", "r_reg"]
        )
        writer.writerow(header)
        for step_idx in range(steps):
            writer.writerow(
                [step_idx]
                + [repr(float(val)) for val in qs[step_idx]]
                + [repr(float(val)) for val in actions[step_idx]]
                + [repr(float(task_rewards[step_idx])), repr(float(reg_rewards[step_idx]))]
            )
