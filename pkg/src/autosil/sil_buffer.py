"""Per-skill store of the policy's own best trajectories.

Admission is threshold-gated: an episode enters a skill's slots only if its
assessment value strictly exceeds that skill's current threshold, and the
threshold then ratchets up to the admitted value. Thresholds are per skill
(a single global one would let an easy skill starve the hard ones) and start
at -inf so the first finite episode of every skill is always kept. A skill
never loses its last entry; at capacity the lowest-scoring entry is evicted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .trajectory import ImitationFeatures, pose_sequence_from_transitions

Array = np.ndarray


@dataclass
class BufferEntry:
    transitions: Array  # (transitions, 2J)
    poses: Array  # (frames, J)
    score: float  # assessment value at admission time


class SilBuffer:
    def __init__(self, num_skills: int, capacity: int = 8):
        if num_skills < 1 or capacity < 1:
            raise InputError("need at least one skill and positive capacity")
        self.num_skills = num_skills
        self.capacity = capacity
        self._slots: list[list[BufferEntry]] = [[] for _ in range(num_skills)]
        self._thresholds = np.full(num_skills, -np.inf)

    def threshold(self, skill: int) -> float:
        return float(self._thresholds[skill])

    @property
    def thresholds(self) -> Array:
        return self._thresholds.copy()

    def entries(self, skill: int) -> list[BufferEntry]:
        return list(self._slots[skill])

    def populated_skills(self) -> list[int]:
        return [s for s in range(self.num_skills) if self._slots[s]]

    def total_entries(self) -> int:
        return sum(len(s) for s in self._slots)

    def is_empty(self) -> bool:
        return self.total_entries() == 0

    def maybe_insert(self, skill: int, feats, score: float) -> bool:
        """Admit iff score strictly beats the skill's threshold."""
        if not 0 <= skill < self.num_skills:
            raise InputError(f"skill {skill} out of range [0, {self.num_skills})")
        if not score > self._thresholds[skill]:
            return False
        transitions = feats.transitions if isinstance(feats, ImitationFeatures) else np.asarray(feats)
        entry = BufferEntry(
            transitions=np.array(transitions, dtype=np.float64),
            poses=pose_sequence_from_transitions(transitions),
            score=float(score),
        )
        slots = self._slots[skill]
        slots.append(entry)
        if len(slots) > self.capacity:
            slots.pop(min(range(len(slots)), key=lambda i: slots[i].score))
        self._thresholds[skill] = score
        return True

    def force_insert(self, skill: int, feats, score: float = 0.0) -> None:
        """Unconditional insert, bypassing the threshold (fixed-dataset mode)."""
        transitions = feats.transitions if isinstance(feats, ImitationFeatures) else np.asarray(feats)
        self._slots[skill].append(
            BufferEntry(
                transitions=np.array(transitions, dtype=np.float64),
                poses=pose_sequence_from_transitions(transitions),
                score=float(score),
            )
        )

    def sample_transitions(self, batch: int, rng: np.random.Generator) -> Array | None:
        """Uniform over populated skills, then entries, then transition rows.

        Returns None when the buffer is empty (caller skips the update).
        """
        populated = self.populated_skills()
        if not populated:
            return None
        dim = self._slots[populated[0]][0].transitions.shape[1]
        out = np.empty((batch, dim))
        skill_picks = rng.integers(len(populated), size=batch)
        for i in range(batch):
            slots = self._slots[populated[skill_picks[i]]]
            entry = slots[rng.integers(len(slots))]
            out[i] = entry.transitions[rng.integers(entry.transitions.shape[0])]
        return out

    def to_jsonable(self) -> dict:
        return {
            "num_skills": self.num_skills,
            "capacity": self.capacity,
            "thresholds": [
                None if not np.isfinite(t) else float(t) for t in self._thresholds
            ],
            "slots": [
                [
                    {"transitions": e.transitions.tolist(), "score": e.score}
                    for e in slots
                ]
                for slots in self._slots
            ],
        }

    @classmethod
    def from_jsonable(cls, blob: dict) -> "SilBuffer":
        buf = cls(int(blob["num_skills"]), int(blob["capacity"]))
        for skill, (slots, thr) in enumerate(zip(blob["slots"], blob["thresholds"])):
            for rec in slots:
                buf.force_insert(skill, np.asarray(rec["transitions"]), rec["score"])
            buf._thresholds[skill] = -np.inf if thr is None else float(thr)
        return buf
