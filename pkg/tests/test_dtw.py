import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from autosil.dtw import as_pose_sequence, dtw_distance, expected_dtw
from autosil.errors import InputError
from oracles import dtw_brute_force, dtw_brute_force_paths


def test_identical_sequences_have_zero_distance():
    rng = np.random.default_rng(0)
    seq = rng.normal(size=(9, 4))
    assert dtw_distance(seq, seq) == 0.0


def test_single_frame_is_l2_distance():
    assert dtw_distance([[0.0, 0.0]], [[3.0, 4.0]]) == 5.0


def test_empty_sequence_rejected():
    with pytest.raises(InputError):
        dtw_distance(np.zeros((0, 2)), np.ones((3, 2)))


def test_dimension_mismatch_rejected():
    with pytest.raises(InputError):
        dtw_distance(np.zeros((2, 2)), np.zeros((2, 3)))


def test_nonfinite_rejected():
    with pytest.raises(InputError):
        as_pose_sequence([[np.inf, 0.0]])


def test_matches_brute_force_small_grid():
    rng = np.random.default_rng(42)
    for _ in range(200):
        n, m = rng.integers(1, 7, size=2)
        j = int(rng.integers(1, 4))
        a = rng.normal(size=(n, j))
        b = rng.normal(size=(m, j))
        assert dtw_distance(a, b) == pytest.approx(dtw_brute_force(a, b), abs=1e-12)


def test_matches_explicit_path_enumeration():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(4, 2))
    b = rng.normal(size=(5, 2))
    assert dtw_distance(a, b) == pytest.approx(dtw_brute_force_paths(a, b), abs=1e-12)


pose_seqs = hnp.arrays(
    np.float64,
    st.tuples(st.integers(1, 8), st.just(3)),
    elements=st.floats(-5, 5, allow_nan=False),
)


@given(a=pose_seqs, b=pose_seqs)
@settings(max_examples=80, deadline=None)
def test_symmetry(a, b):
    assert dtw_distance(a, b) == pytest.approx(dtw_distance(b, a), abs=1e-9)


@given(a=pose_seqs)
@settings(max_examples=40, deadline=None)
def test_self_distance_zero(a):
    assert dtw_distance(a, a) == 0.0


@given(a=pose_seqs, b=pose_seqs)
@settings(max_examples=40, deadline=None)
def test_nonnegative(a, b):
    assert dtw_distance(a, b) >= 0.0


def test_monotone_under_frame_perturbation():
    # scaling one frame's deviation from its aligned partner never lowers
    # the distance; checked on a fixed diagonal alignment
    base = np.array([[0.0], [1.0], [2.0], [3.0]])
    target = base.copy()
    prev = dtw_distance(base, target)
    for scale in (0.5, 1.0, 2.0, 4.0):
        bumped = target.copy()
        bumped[2, 0] += scale
        d = dtw_distance(base, bumped)
        assert d >= prev
        prev = d


def test_normalized_mode_divides_by_length_and_joint_scale():
    a = np.array([[0.0], [0.0], [0.0]])
    b = np.array([[1.0], [1.0]])
    raw = dtw_distance(a, b)
    assert dtw_distance(a, b, normalize=True) == pytest.approx(raw / 5.0)
    a4 = np.tile(a, (1, 4))
    b4 = np.tile(b, (1, 4))
    assert dtw_distance(a4, b4, normalize=True) == pytest.approx(
        dtw_distance(a4, b4) / (5.0 * 2.0)
    )


def test_expected_dtw_single_trajectory():
    rng = np.random.default_rng(1)
    t = rng.normal(size=(5, 2))
    target = rng.normal(size=(3, 2))
    assert expected_dtw([t], target) == dtw_distance(t, target)


def test_expected_dtw_identical_to_target_is_zero():
    target = np.ones((4, 2))
    assert expected_dtw([target.copy(), target.copy()], target) == 0.0


def test_expected_dtw_is_mean_of_oracle_distances():
    rng = np.random.default_rng(2)
    t1 = rng.normal(size=(4, 2))
    t2 = rng.normal(size=(6, 2))
    target = rng.normal(size=(3, 2))
    d1 = dtw_brute_force(t1, target)
    d2 = dtw_brute_force(t2, target)
    assert expected_dtw([t1, t2], target) == pytest.approx((d1 + d2) / 2, abs=1e-12)


def test_expected_dtw_empty_set_rejected():
    with pytest.raises(InputError):
        expected_dtw([], np.zeros((2, 2)))


def test_longer_sequences_against_slow_dp():
    # independent quadratic DP without the row-scan trick
    def naive(a, b):
        a = np.atleast_2d(a)
        b = np.atleast_2d(b)
        n, m = a.shape[0], b.shape[0]
        cost = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
        table = np.full((n, m), np.inf)
        for i in range(n):
            for j in range(m):
                best = 0.0
                if i or j:
                    cands = []
                    if i:
                        cands.append(table[i - 1, j])
                    if j:
                        cands.append(table[i, j - 1])
                    if i and j:
                        cands.append(table[i - 1, j - 1])
                    best = min(cands)
                table[i, j] = cost[i, j] + best
        return table[-1, -1]

    rng = np.random.default_rng(3)
    for _ in range(10):
        a = rng.normal(size=(rng.integers(1, 40), 5))
        b = rng.normal(size=(rng.integers(1, 40), 5))
        assert dtw_distance(a, b) == pytest.approx(naive(a, b), rel=1e-12, abs=1e-12)
