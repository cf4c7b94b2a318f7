"""End-to-end training loop, ablation modes, and evaluation protocols.

One training iteration, in order: sample per-env commands (adaptive, or
uniform in no-selector mode) -> collect one episode per env with blended
rewards -> assess each completed episode and offer it to the SIL buffer
(task-reward-only in no-dtw mode; disabled in il-by-tp mode, whose buffer is
pre-filled with duplicated target poses) -> PPO update -> discriminator
epochs on fresh minibatches -> recompute the reward weights for the next
iteration -> emit a metrics record.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import discriminator as disc_mod
from . import ppo as ppo_mod
from . import reward_shaper, skill_selector, toy_env
from .config import ExperimentConfig, rng_stream
from .dtw import dtw_distance
from .errors import DivergenceError, InputError
from .reward_shaper import RewardWeights
from .sil_buffer import SilBuffer
from .skill_selector import CommandBuffer, SkillProgress
from .toy_env import BatchCommand, observation
from .trajectory import (
    Trajectory,
    assess,
    dtw_to_target,
    expand_target_pose,
    feature_map,
)

log = logging.getLogger(__name__)

Array = np.ndarray

QUALITY_SOFTENING = 10.0  # denominator of the buffered-trajectory quality score


@dataclass
class PoseState:
    """Minimal per-step state record kept inside trajectories (pose only)."""

    q: Array


@dataclass
class MetricsRecord:
    iteration: int
    total_reward: float
    mean_task_reward: float
    skill_task_rewards: list  # windowed per-skill average task reward
    sil_weight: float
    task_weight: float
    skill_dtw: list  # per-skill mean rollout DTW to target, this iteration
    skill_quality: list  # per-skill buffered-trajectory quality score
    buffer_thresholds: list
    episodes: int
    policy_loss: float
    value_loss: float
    disc_loss: float | None

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "total_reward": self.total_reward,
            "mean_task_reward": self.mean_task_reward,
            "skill_task_rewards": self.skill_task_rewards,
            "sil_weight": self.sil_weight,
            "task_weight": self.task_weight,
            "skill_dtw": self.skill_dtw,
            "skill_quality": self.skill_quality,
            "buffer_thresholds": self.buffer_thresholds,
            "episodes": self.episodes,
            "policy_loss": self.policy_loss,
            "value_loss": self.value_loss,
            "disc_loss": self.disc_loss,
        }


def dtw_quality_score(
    buffer: SilBuffer, target, dtw_scale: float, normalize: bool = False
) -> float | None:
    """Quality of a skill's buffered trajectories in (0, 1]; None if empty.

    exp(-max(|E[DTW] - scale|, 0) / 10). The deviation is nonnegative, so
    the max is a formality; it pins the sign convention under which larger
    deviation can only lower the score.
    """
    expectation = reward_shaper.buffer_dtw_expectation(buffer, target, normalize=normalize)
    if expectation is None:
        return None
    deviation = max(abs(expectation - dtw_scale), 0.0)
    return float(np.exp(-deviation / QUALITY_SOFTENING))


class Trainer:
    """Owns all module states and runs the training loop for one config."""

    def __init__(self, cfg: ExperimentConfig):
        cfg.validate()
        self.cfg = cfg
        self.mode = cfg.run.mode
        env = cfg.env
        self.targets = cfg.target_poses()
        self.num_skills = env.num_skills
        self.horizon = env.episode_length

        seed = cfg.run.seed
        self.rng_env = rng_stream(seed, "env")
        self.rng_policy = rng_stream(seed, "policy")
        self.rng_selector = rng_stream(seed, "selector")
        self.rng_disc = rng_stream(seed, "discriminator")
        init_rng = rng_stream(seed, "init")

        obs_dim = toy_env.observation_dim(env)
        self.policy = ppo_mod.init_policy(obs_dim, env.joint_count, cfg.ppo, init_rng)
        self.value = ppo_mod.init_value(obs_dim, cfg.ppo, init_rng)
        self.disc = disc_mod.init_discriminator(
            2 * env.joint_count,
            cfg.sil.disc_hidden,
            init_rng,
            gp_weight=cfg.sil.gp_weight,
            learning_rate=cfg.sil.disc_lr,
        )
        self.buffer = SilBuffer(self.num_skills, capacity=cfg.sil.capacity)
        self.commands = CommandBuffer(window=cfg.selector.window)
        self.iteration = 0
        self.last_skill_dtw: list = [None] * self.num_skills

        if self.mode == "il-by-tp":
            self._prefill_buffer_with_target_poses()

        self.weights = self._recompute_weights(mean_task_reward=0.0)

    # ------------------------------------------------------------------ setup

    def _prefill_buffer_with_target_poses(self) -> None:
        for target in self.targets:
            poses = expand_target_pose(target, self.horizon + 1)
            transitions = np.concatenate([poses[:-1], poses[1:]], axis=1)
            self.buffer.force_insert(target.skill_id, transitions, score=0.0)

    def _recompute_weights(self, mean_task_reward: float) -> RewardWeights:
        w_sil = reward_shaper.sil_weight(
            self.buffer,
            self.targets,
            self.cfg.rewards.dtw_scale,
            self.num_skills,
            normalize=self.cfg.rewards.dtw_normalize,
        )
        w_task = reward_shaper.task_weight(mean_task_reward, self.cfg.task_scale())
        return RewardWeights(
            sil_weight=w_sil,
            task_weight=w_task,
            dtw_scale=self.cfg.rewards.dtw_scale,
            task_scale=self.cfg.task_scale(),
        )

    # ------------------------------------------------------------- iteration

    def _sample_commands(self, num_envs: int) -> BatchCommand:
        if self.mode == "no-selector":
            stats = SkillProgress.untrained(self.cfg.env.optimal_rewards())
        else:
            stats = SkillProgress.from_buffer(self.commands, self.cfg.env.optimal_rewards())
        velocity = np.empty(num_envs)
        skills = np.empty(num_envs, dtype=np.int64)
        for i in range(num_envs):
            cmd = skill_selector.sample_command(
                stats, self.rng_selector, floor=self.cfg.selector.floor
            )
            velocity[i] = cmd.velocity
            skills[i] = cmd.skill_index
        return BatchCommand(velocity=velocity, skill_index=skills)

    def _collect_rollouts(self, cmd: BatchCommand):
        cfg = self.cfg
        env = cfg.env
        num_envs = cfg.ppo.num_envs
        horizon = self.horizon
        obs_dim = toy_env.observation_dim(env)
        joints = env.joint_count

        state = toy_env.reset(env, cmd, self.rng_env, batch=num_envs)
        obs = np.zeros((horizon, num_envs, obs_dim))
        actions = np.zeros((horizon, num_envs, joints))
        log_probs = np.zeros((horizon, num_envs))
        rewards = np.zeros((horizon, num_envs))
        task_rewards = np.zeros((horizon, num_envs))
        reg_rewards = np.zeros((horizon, num_envs))
        values = np.zeros((horizon, num_envs))
        poses = np.zeros((horizon + 1, num_envs, joints))
        transitions = np.zeros((horizon, num_envs, 2 * joints))
        lengths = np.full(num_envs, horizon, dtype=np.int64)
        terminated = np.zeros(num_envs, dtype=bool)
        finished = np.zeros(num_envs, dtype=bool)
        buffer_ready = not self.buffer.is_empty()

        poses[0] = state.q
        for t in range(horizon):
            step_obs = observation(state, cmd, env)
            act, lp = ppo_mod.sample_actions(self.policy, step_obs, self.rng_policy)
            vals = ppo_mod.numerics.forward(self.value.net, step_obs)[:, 0]
            prev_q = state.q
            state, r_task, r_reg, done = toy_env.step(state, act, cmd, env, self.rng_env)
            feats = np.concatenate([prev_q, state.q], axis=1)
            if buffer_ready:
                r_sil = disc_mod.sil_reward(self.disc, feats)
            else:
                r_sil = np.zeros(num_envs)
            r_total = reward_shaper.total_reward(r_sil, r_task, r_reg, self.weights)

            obs[t] = step_obs
            actions[t] = act
            log_probs[t] = lp
            rewards[t] = r_total
            task_rewards[t] = r_task
            reg_rewards[t] = r_reg
            values[t] = vals
            poses[t + 1] = state.q
            transitions[t] = feats

            newly_done = done & ~finished
            if np.any(newly_done):
                lengths[newly_done] = t + 1
                terminated[newly_done] = toy_env.tilt_terminated(state, env)[newly_done]
            finished |= done

        final_obs = observation(state, cmd, env)
        bootstrap = ppo_mod.numerics.forward(self.value.net, final_obs)[:, 0]
        rollout = ppo_mod.RolloutBuffer(
            obs=obs,
            actions=actions,
            log_probs=log_probs,
            rewards=rewards,
            task_rewards=task_rewards,
            values=values,
            lengths=lengths,
            terminated=terminated,
            bootstrap_values=bootstrap,
        )
        extras = {
            "poses": poses,
            "transitions": transitions,
            "reg_rewards": reg_rewards,
            "cmd": cmd,
        }
        return rollout, extras

    def _episode_trajectory(self, extras, rollout, env_idx: int) -> Trajectory:
        length = int(rollout.lengths[env_idx])
        qs = extras["poses"][: length + 1, env_idx]
        return Trajectory(
            skill_id=int(extras["cmd"].skill_index[env_idx]),
            states=[PoseState(q) for q in qs],
            actions=rollout.actions[:length, env_idx],
            task_rewards=rollout.task_rewards[:length, env_idx],
            terminated=bool(rollout.terminated[env_idx]),
        )

    def _assess_and_admit(self, rollout, extras) -> list:
        """Per-episode assessment, buffer admission, and rollout DTW metrics."""
        sil_cfg = self.cfg.sil
        per_skill_dtw: list[list[float]] = [[] for _ in range(self.num_skills)]
        for b in range(rollout.num_envs):
            traj = self._episode_trajectory(extras, rollout, b)
            skill = traj.skill_id
            target = self.targets[skill]
            feats, pose_seq = feature_map(traj)
            d = dtw_to_target(pose_seq, target, normalize=sil_cfg.dtw_normalize)
            per_skill_dtw[skill].append(d)

            mean_task = float(traj.task_rewards.mean())
            self.commands.record_episode(skill, mean_task)

            if self.mode == "il-by-tp":
                continue  # admissions disabled; buffer holds the fixed dataset
            if self.mode == "no-dtw":
                score = float(traj.task_rewards.sum())
            else:
                sign = 1.0 if sil_cfg.eq1_additive else -1.0
                score = float(traj.task_rewards.sum()) + sign * d
            self.buffer.maybe_insert(skill, feats, score)
        return [
            float(np.mean(ds)) if ds else None for ds in per_skill_dtw
        ]

    def _update_discriminator(self, extras, rollout) -> float | None:
        """Alg-style epochs with fresh minibatches; None when not ready."""
        if self.buffer.is_empty():
            return None
        batch = self.cfg.sil.disc_batch
        mask = rollout.valid_mask
        policy_pool = extras["transitions"][mask]
        if policy_pool.shape[0] == 0:
            return None
        losses = []
        for _ in range(self.cfg.sil.disc_epochs):
            buf_batch = self.buffer.sample_transitions(batch, self.rng_disc)
            idx = self.rng_disc.integers(policy_pool.shape[0], size=batch)
            losses.extend(disc_mod.update(self.disc, buf_batch, policy_pool[idx], epochs=1))
        return float(np.mean(losses)) if losses else None

    def train_iteration(self) -> MetricsRecord:
        self.iteration += 1
        try:
            return self._train_iteration_inner()
        except DivergenceError as exc:
            raise DivergenceError(f"iteration {self.iteration}: {exc}") from exc

    def _train_iteration_inner(self) -> MetricsRecord:
        cmd = self._sample_commands(self.cfg.ppo.num_envs)
        rollout, extras = self._collect_rollouts(cmd)
        skill_dtw = self._assess_and_admit(rollout, extras)
        for s in range(self.num_skills):
            if skill_dtw[s] is not None:
                self.last_skill_dtw[s] = skill_dtw[s]

        ppo_stats = ppo_mod.ppo_update(
            self.policy, self.value, rollout, self.cfg.ppo, self.rng_policy
        )
        disc_loss = self._update_discriminator(extras, rollout)

        mask = rollout.valid_mask
        mean_task = float(rollout.task_rewards[mask].mean())
        mean_total = float(rollout.rewards[mask].mean())
        self.weights = self._recompute_weights(mean_task)

        quality = [
            dtw_quality_score(
                self.buffer,
                t,
                self.cfg.rewards.dtw_scale,
                normalize=self.cfg.rewards.dtw_normalize,
            )
            for t in self.targets
        ]
        thresholds = [
            None if not np.isfinite(x) else float(x) for x in self.buffer.thresholds
        ]
        record = MetricsRecord(
            iteration=self.iteration,
            total_reward=mean_total,
            mean_task_reward=mean_task,
            skill_task_rewards=[
                self.commands.average_reward(s) for s in range(self.num_skills)
            ],
            sil_weight=self.weights.sil_weight,
            task_weight=self.weights.task_weight,
            skill_dtw=skill_dtw,
            skill_quality=quality,
            buffer_thresholds=thresholds,
            episodes=rollout.num_envs,
            policy_loss=ppo_stats["policy_loss"],
            value_loss=ppo_stats["value_loss"],
            disc_loss=disc_loss,
        )
        log.debug(
            "iter %d r=%.4f r_task=%.4f w_sil=%.4g w_task=%.4g",
            self.iteration,
            record.total_reward,
            record.mean_task_reward,
            record.sil_weight,
            record.task_weight,
        )
        return record

    def train(self, iterations: int) -> list[MetricsRecord]:
        return [self.train_iteration() for _ in range(iterations)]

    # ------------------------------------------------------------- evaluation

    def _run_episode(
        self,
        skill: int,
        velocity: float,
        rng: np.random.Generator,
        switch: tuple[int, int] | None = None,
    ) -> dict:
        """One deterministic-policy episode; optional (step, new_skill) switch."""
        env = self.cfg.env
        state = toy_env.reset(env, None, rng)
        current_skill = skill
        qs = [state.q.copy()]
        acts, task_rs, reg_rs = [], [], []
        for t in range(self.horizon):
            if switch is not None and t == switch[0]:
                current_skill = switch[1]
            cmd = BatchCommand(velocity=np.asarray(velocity), skill_index=np.asarray(current_skill))
            obs = observation(state, cmd, env)
            action = ppo_mod.mean_action(self.policy, obs)
            state, r_task, r_reg, done = toy_env.step(state, action, cmd, env, rng)
            qs.append(state.q.copy())
            acts.append(action)
            task_rs.append(float(r_task))
            reg_rs.append(float(r_reg))
            if done:
                break
        return {
            "poses": np.array(qs),
            "actions": np.array(acts),
            "task_rewards": np.array(task_rs),
            "reg_rewards": np.array(reg_rs),
            "terminated": bool(toy_env.tilt_terminated(state, env)),
        }

    def evaluate(
        self,
        episodes: int | None = None,
        transition_episodes: int | None = None,
        traces_dir=None,
    ) -> dict:
        """Per-skill DTW, cross-skill DTW matrix, and transition success rate."""
        run_cfg = self.cfg.run
        episodes = run_cfg.eval_episodes if episodes is None else episodes
        transition_episodes = (
            run_cfg.transition_episodes if transition_episodes is None else transition_episodes
        )
        if episodes < 1:
            raise InputError("evaluation needs at least one episode per skill")
        rng = rng_stream(run_cfg.seed, "eval")
        normalize = self.cfg.sil.dtw_normalize

        skill_dtw: list[float] = []
        rep_sequences: list[Array] = []
        for s in range(self.num_skills):
            dists = []
            for e in range(episodes):
                velocity = float(rng.uniform(-0.5, 0.5))
                ep = self._run_episode(s, velocity, rng)
                dists.append(dtw_to_target(ep["poses"], self.targets[s], normalize=normalize))
                if e == 0:
                    # per-step poses, exactly the rows the trace CSV carries,
                    # so the matrix can be recomputed offline from the dump
                    rep_sequences.append(ep["poses"][: ep["actions"].shape[0]])
                    if traces_dir is not None:
                        toy_env.write_trace_csv(
                            f"{traces_dir}/skill_{self.cfg.env.skills[s].name}.csv",
                            ep["poses"],
                            ep["actions"],
                            ep["task_rewards"],
                            ep["reg_rewards"],
                        )
            skill_dtw.append(float(np.mean(dists)))

        matrix = [
            [float(dtw_distance(rep_sequences[i], rep_sequences[j])) for j in range(self.num_skills)]
            for i in range(self.num_skills)
        ]

        reference = [
            self.last_skill_dtw[s] if self.last_skill_dtw[s] is not None else skill_dtw[s]
            for s in range(self.num_skills)
        ]
        transitions = []
        successes = 0
        for _ in range(transition_episodes):
            if self.num_skills < 2:
                break
            pair = rng.choice(self.num_skills, size=2, replace=False)
            from_skill, to_skill = int(pair[0]), int(pair[1])
            max_switch = max(2, self.horizon - 100)
            switch_step = int(rng.integers(1, max_switch))
            velocity = float(rng.uniform(-0.5, 0.5))
            ep = self._run_episode(from_skill, velocity, rng, switch=(switch_step, to_skill))
            post = ep["poses"][switch_step:]
            window = post[: min(101, post.shape[0])]
            if window.shape[0] < 2:
                continue
            post_dtw = dtw_to_target(window, self.targets[to_skill], normalize=normalize)
            threshold = run_cfg.transition_threshold_scale * reference[to_skill]
            ok = bool(post_dtw <= threshold)
            successes += ok
            transitions.append(
                {
                    "from": from_skill,
                    "to": to_skill,
                    "switch_step": switch_step,
                    "post_dtw": post_dtw,
                    "threshold": threshold,
                    "success": ok,
                }
            )
        return {
            "skills": [s.name for s in self.cfg.env.skills],
            "episodes_per_skill": episodes,
            "skill_dtw": skill_dtw,
            "dtw_matrix": matrix,
            "transitions": transitions,
            "transition_success_rate": (successes / len(transitions)) if transitions else None,
            "config_hash": self.cfg.content_hash(),
        }
