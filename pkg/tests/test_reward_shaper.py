import numpy as np
import pytest

from autosil.errors import ConfigError
from autosil.reward_shaper import (
    RewardWeights,
    buffer_dtw_expectation,
    sil_weight,
    task_weight,
    total_reward,
)
from autosil.sil_buffer import SilBuffer
from autosil.trajectory import ImitationFeatures, TargetPose, expand_target_pose
from oracles import dtw_brute_force


def fill_buffer_with_pose(buf, skill, pose, frames=5, score=1.0):
    poses = np.tile(pose, (frames, 1))
    transitions = np.concatenate([poses[:-1], poses[1:]], axis=1)
    buf.maybe_insert(skill, ImitationFeatures(transitions), score)


def test_buffer_dtw_expectation_empty_skill_is_none():
    buf = SilBuffer(num_skills=1)
    assert buffer_dtw_expectation(buf, TargetPose(0, np.zeros(2))) is None


def test_buffer_dtw_expectation_exact_match_zero():
    buf = SilBuffer(num_skills=1)
    target = TargetPose(0, np.array([0.3, -0.3]))
    fill_buffer_with_pose(buf, 0, target.pose)
    assert buffer_dtw_expectation(buf, target) == 0.0


def test_buffer_dtw_expectation_matches_oracle():
    buf = SilBuffer(num_skills=1)
    rng = np.random.default_rng(0)
    target = TargetPose(0, rng.normal(size=2))
    dists = []
    for score in (1.0, 2.0):
        poses = rng.normal(size=(6, 2))
        transitions = np.concatenate([poses[:-1], poses[1:]], axis=1)
        buf.maybe_insert(0, ImitationFeatures(transitions), score)
        dists.append(dtw_brute_force(poses, expand_target_pose(target, 6)))
    assert buffer_dtw_expectation(buf, target) == pytest.approx(np.mean(dists), abs=1e-12)


def test_sil_weight_peak_at_scale():
    # every skill's buffered expectation equals dtw_scale -> weight = 1/N
    targets = [TargetPose(0, np.zeros(2)), TargetPose(1, np.zeros(2))]
    buf = SilBuffer(num_skills=2)
    for s in range(2):
        poses = np.tile(np.array([2.0, 0.0]), (2, 1))
        transitions = np.concatenate([poses[:-1], poses[1:]], axis=1)
        buf.maybe_insert(s, ImitationFeatures(transitions), 1.0)
    expect = buffer_dtw_expectation(buf, targets[0])
    w = sil_weight(buf, targets, dtw_scale=expect, num_skills=2)
    assert w == pytest.approx(0.5)


def test_sil_weight_direct_substitution():
    # two skills with deviations 1 and 2 -> 0.5 * exp(-3)
    buf = SilBuffer(num_skills=2)
    t0 = TargetPose(0, np.array([0.0]))
    t1 = TargetPose(1, np.array([0.0]))
    # skill 0: single transition of two identical frames at distance d0
    for skill, dist in ((0, 2.0), (1, 3.0)):
        poses = np.array([[dist], [dist]])
        transitions = np.concatenate([poses[:-1], poses[1:]], axis=1)
        buf.maybe_insert(skill, ImitationFeatures(transitions), 1.0)
    # each expectation: dtw of 2 frames against 1 target frame = 2 * dist
    e0 = buffer_dtw_expectation(buf, t0)
    e1 = buffer_dtw_expectation(buf, t1)
    assert (e0, e1) == (4.0, 6.0)
    # scale 5 -> deviations (1, 1); scale 3 -> deviations (1, 3)
    w = sil_weight(buf, [t0, t1], dtw_scale=5.0, num_skills=2)
    assert w == pytest.approx(0.5 * np.exp(-(1.0 + 1.0)))
    w2 = sil_weight(buf, [t0, t1], dtw_scale=3.0, num_skills=2)
    assert w2 == pytest.approx(0.5 * np.exp(-(1.0 + 3.0)))


def test_sil_weight_empty_skill_contributes_scale():
    buf = SilBuffer(num_skills=2)
    t0 = TargetPose(0, np.zeros(1))
    t1 = TargetPose(1, np.zeros(1))
    fill_buffer_with_pose(buf, 0, np.zeros(1))  # expectation 0
    w = sil_weight(buf, [t0, t1], dtw_scale=2.5, num_skills=2)
    assert w == pytest.approx(0.5 * np.exp(-(2.5 + 2.5)))


def test_sil_weight_randomized_recompute():
    rng = np.random.default_rng(3)
    buf = SilBuffer(num_skills=3, capacity=4)
    targets = [TargetPose(s, rng.normal(size=2)) for s in range(3)]
    for s in range(3):
        for k in range(rng.integers(0, 4)):
            poses = rng.normal(size=(rng.integers(2, 6), 2))
            transitions = np.concatenate([poses[:-1], poses[1:]], axis=1)
            buf.maybe_insert(s, ImitationFeatures(transitions), float(k))
    scale = 1.7
    total_dev = 0.0
    for t in targets:
        entries = buf.entries(t.skill_id)
        if entries:
            e = np.mean(
                [
                    dtw_brute_force(x.poses, expand_target_pose(t, x.poses.shape[0]))
                    for x in entries
                ]
            )
        else:
            e = 0.0
        total_dev += abs(e - scale)
    expected = np.exp(-total_dev) / 3
    assert sil_weight(buf, targets, scale, 3) == pytest.approx(expected, abs=1e-12)


def test_task_weight_values():
    assert task_weight(0.8, 0.8) == 1.0
    assert task_weight(1.8, 0.8) == pytest.approx(np.exp(-1.0))
    assert task_weight(-1.2, 0.8) == pytest.approx(np.exp(-2.0))


def test_task_weight_rejects_bad_scale():
    with pytest.raises(ConfigError):
        task_weight(0.5, 0.0)


def weights(sil=0.5, task=0.5):
    return RewardWeights(sil_weight=sil, task_weight=task, dtw_scale=1.0, task_scale=1.0)


def test_total_reward_task_term_vanishes_at_full_weight():
    w = weights(sil=0.25, task=1.0)
    r = total_reward(1.0, 5.0, -0.1, w)
    assert r == pytest.approx(0.25 * 1.0 - 0.1)


def test_total_reward_arithmetic_example():
    w = weights(sil=0.5, task=0.5)
    assert total_reward(1.0, 2.0, -0.1, w) == pytest.approx(1.15)


def test_total_reward_randomized_recompute():
    rng = np.random.default_rng(4)
    for _ in range(100):
        w = weights(sil=rng.uniform(0.01, 0.5), task=rng.uniform(0.01, 1.0))
        r_sil, r_task, r_reg = rng.normal(size=3)
        expected = (
            w.sil_weight * w.task_weight * r_sil
            + (1 - w.task_weight) * r_task
            + 1.0 * r_reg
        )
        assert total_reward(r_sil, r_task, r_reg, w) == pytest.approx(expected, abs=1e-12)


def test_total_reward_linear_coefficients():
    # finite-difference the formula in each argument
    w = weights(sil=0.3, task=0.6)
    base = total_reward(0.0, 0.0, 0.0, w)
    assert total_reward(1.0, 0.0, 0.0, w) - base == pytest.approx(0.3 * 0.6)
    assert total_reward(0.0, 1.0, 0.0, w) - base == pytest.approx(0.4)
    assert total_reward(0.0, 0.0, 1.0, w) - base == pytest.approx(1.0)


def test_total_reward_vectorized():
    w = weights()
    r = total_reward(np.ones(3), np.full(3, 2.0), np.full(3, -0.1), w)
    assert r.shape == (3,)
    assert np.allclose(r, 1.15)


def test_weights_validation():
    with pytest.raises(ConfigError):
        RewardWeights(0.1, 0.5, dtw_scale=-1.0, task_scale=1.0)
