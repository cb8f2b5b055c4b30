"""Concept guidance in embedding space.

A sparse keyframe bank keeps the initialization frame and a few mutually
dissimilar, confidently tracked appearances. Their normalized mean is the
concept vector. The concept is only handed to the decoder when the tracked
appearance drifts far enough from the latest keyframe.

The concept construction is mean pooling over keyframe summaries; it stands
in for a vision-language model, it does not reproduce one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entries import MemoryEntry
from .errors import DomainError
from .numerics import cosine_sim, normalize

DEFAULT_CAPACITY = 5
DEFAULT_TAU_DIV = 0.8
DEFAULT_TAU_SCENE = 0.3
MIN_KEYFRAME_CONFIDENCE = 0.8


@dataclass(frozen=True)
class Keyframe:
    frame_index: int
    summary: np.ndarray


class KeyframeBank:
    def __init__(self, anchor: MemoryEntry, capacity: int = DEFAULT_CAPACITY,
                 tau_div: float = DEFAULT_TAU_DIV,
                 min_confidence: float = MIN_KEYFRAME_CONFIDENCE):
        if capacity < 1:
            raise DomainError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.tau_div = tau_div
        self.min_confidence = min_confidence
        self.keyframes: list[Keyframe] = [Keyframe(anchor.frame_index, anchor.mask_summary)]

    def __len__(self):
        return len(self.keyframes)

    @property
    def latest(self) -> Keyframe:
        return max(self.keyframes, key=lambda kf: kf.frame_index)

    def maybe_add(self, entry: MemoryEntry) -> bool:
        """Add ``entry`` if it is confident and dissimilar to every keyframe."""
        if entry.confidence < self.min_confidence:
            return False
        sims = [cosine_sim(entry.mask_summary, kf.summary) for kf in self.keyframes]
        if max(sims) >= self.tau_div:
            return False
        if len(self.keyframes) == self.capacity:
            if self.capacity == 1:
                return False
            # nearest non-anchor neighbour of the newcomer
            victim = max(range(1, len(self.keyframes)), key=lambda i: (sims[i], -i))
            del self.keyframes[victim]
        self.keyframes.append(Keyframe(entry.frame_index, entry.mask_summary))
        return True

    def concept_vector(self) -> np.ndarray:
        # fixed summation order keeps the result independent of insertion order
        ordered = sorted(self.keyframes, key=lambda kf: kf.frame_index)
        return normalize(np.sum([kf.summary for kf in ordered], axis=0), "concept")

    def scene_change_score(self, current: np.ndarray) -> float:
        """``1 - cos(current, latest keyframe)``, in [0, 2]."""
        return 1.0 - cosine_sim(current, self.latest.summary)


def concept_active(score: float, tau_scene: float = DEFAULT_TAU_SCENE) -> bool:
    return score > tau_scene
