"""Independent oracles used across the test suite.

Everything here is deliberately naive: central finite differences, exhaustive
warping-path enumeration, direct summation. None of it shares code with the
implementations it checks.
"""
from __future__ import annotations

import itertools

import numpy as np


def finite_diff_grads(fn, params: list[np.ndarray], h: float = 1e-5) -> list[np.ndarray]:
    """Central-difference gradient of scalar fn() w.r.t. a list of arrays.

    fn must read the (mutated-in-place) params on every call.
    """
    grads = []
    for p in params:
        g = np.zeros_like(p)
        flat_p = p.ravel()
        flat_g = g.ravel()
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + h
            up = fn()
            flat_p[i] = orig - h
            down = fn()
            flat_p[i] = orig
            flat_g[i] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


def grad_relative_error(analytic: list[np.ndarray], numeric: list[np.ndarray]) -> float:
    """Norm-based relative error between two gradient lists."""
    a = np.concatenate([g.ravel() for g in analytic])
    b = np.concatenate([g.ravel() for g in numeric])
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / denom)


def dtw_brute_force(a: np.ndarray, b: np.ndarray) -> float:
    """Exhaustive DTW: minimum cost over every monotone alignment path.

    A path starts at (0, 0), ends at (n-1, m-1), and moves by one of
    (+1, 0), (0, +1), (+1, +1) at each step. Cost is the sum of Euclidean
    frame distances along the path. Only feasible for short sequences.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    n, m = a.shape[0], b.shape[0]
    cost = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)

    best = [np.inf]

    def walk(i: int, j: int, acc: float) -> None:
        acc += cost[i, j]
        if acc >= best[0]:
            return
        if i == n - 1 and j == m - 1:
            best[0] = acc
            return
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, acc)
        if i + 1 < n:
            walk(i + 1, j, acc)
        if j + 1 < m:
            walk(i, j + 1, acc)

    walk(0, 0, 0.0)
    return best[0]


def gae_brute_force(
    rewards: np.ndarray,
    values: np.ndarray,
    bootstrap: float,
    terminal: bool,
    gamma: float,
    lam: float,
) -> np.ndarray:
    """Direct expansion of the advantage sum for one episode."""
    horizon = len(rewards)
    vals = np.append(values, 0.0 if terminal else bootstrap)
    deltas = rewards + gamma * vals[1:] - vals[:-1]
    adv = np.zeros(horizon)
    for t in range(horizon):
        acc = 0.0
        for k in range(t, horizon):
            acc += (gamma * lam) ** (k - t) * deltas[k]
        adv[t] = acc
    return adv


def all_monotone_paths(n: int, m: int):
    """Yield every monotone alignment path for an n x m grid (tiny n, m)."""
    def extend(path):
        i, j = path[-1]
        if i == n - 1 and j == m - 1:
            yield path
            return
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            ni, nj = i + di, j + dj
            if ni < n and nj < m:
                yield from extend(path + [(ni, nj)])

    yield from extend([(0, 0)])


def dtw_brute_force_paths(a: np.ndarray, b: np.ndarray) -> float:
    """Same oracle as dtw_brute_force, via explicit path enumeration."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    cost = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    best = np.inf
    for path in all_monotone_paths(a.shape[0], b.shape[0]):
        total = sum(cost[i, j] for i, j in path)
        best = min(best, total)
    return best
