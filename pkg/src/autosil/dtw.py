"""Dynamic Time Warping with an L2 ground metric for joint-position sequences.

A pose sequence is a float64 array of shape (frames, joints). The distance is
the classic unconstrained DTW: minimum cumulative Euclidean frame distance
over monotone alignments with steps {match, insert, delete}. No band
constraint, no path normalization by default (an optional length-normalized
mode divides by len(a) + len(b)).
"""
from __future__ import annotations

import numpy as np

from .errors import InputError

Array = np.ndarray


def as_pose_sequence(frames) -> Array:
    """Validate and convert to a (frames, joints) float64 array."""
    seq = np.asarray(frames, dtype=np.float64)
    if seq.ndim == 1:
        seq = seq[:, None]
    if seq.ndim != 2 or seq.shape[0] == 0:
        raise InputError(f"pose sequence must be non-empty 2-D, got shape {seq.shape}")
    if not np.all(np.isfinite(seq)):
        raise InputError("pose sequence contains non-finite entries")
    return seq


def dtw_distance(a, b, normalize: bool = False) -> float:
    """DTW distance between two pose sequences.

    Symmetric, zero iff the sequences are identical frame by frame. With
    normalize=True the raw distance is divided by (len(a) + len(b)) * sqrt(J),
    giving per-frame, per-joint-scale units that stay O(1) regardless of
    sequence length or joint count.

    Each row of the cumulative table is a min-plus prefix scan:
    D[i][j] = min(c[i][j] + R[j], c[i][j] + D[i][j-1]) with
    R[j] = min(D[i-1][j], D[i-1][j-1]) unrolls to
    D[i][j] = S[j] + running_min(R[k] - S[k-1]) where S is the cumulative
    row cost, so only two rows are ever stored.
    """
    a = as_pose_sequence(a)
    b = as_pose_sequence(b)
    if a.shape[1] != b.shape[1]:
        raise InputError(
            f"joint dimension mismatch: {a.shape[1]} vs {b.shape[1]}"
        )
    # pairwise frame costs, row at a time to bound memory at O(|b|)
    diff = a[:, None, :] - b[None, :, :]
    cost = np.sqrt((diff * diff).sum(axis=2))

    prev = np.cumsum(cost[0])
    for i in range(1, a.shape[0]):
        row_cost = cost[i]
        reach = np.empty_like(prev)
        reach[0] = prev[0]
        np.minimum(prev[1:], prev[:-1], out=reach[1:])
        cum = np.cumsum(row_cost)
        shifted = np.empty_like(cum)
        shifted[0] = 0.0
        shifted[1:] = cum[:-1]
        prev = cum + np.minimum.accumulate(reach - shifted)
    raw = float(prev[-1])
    if normalize:
        return raw / ((a.shape[0] + b.shape[0]) * np.sqrt(a.shape[1]))
    return raw


def expected_dtw(trajs, target, normalize: bool = False) -> float:
    """Arithmetic mean of dtw_distance(traj, target) over a set of sequences."""
    trajs = list(trajs)
    if not trajs:
        raise InputError("expected_dtw needs at least one trajectory")
    return float(np.mean([dtw_distance(t, target, normalize=normalize) for t in trajs]))
