"""Mask decoder contract and its synthetic region-matching implementation."""

from __future__ import annotations

from typing import Protocol, Sequence

import numpy as np

from .entries import MemoryContext
from .errors import ContractViolation, DomainError
from .masks import BinaryMask, MaskCandidate
from .numerics import cosine_sim, normalize
from .scenario import Frame

DEFAULT_K = 3
DEFAULT_CONCEPT_ALPHA = 0.5


class Backend(Protocol):
    def decode(self, ctx: MemoryContext, concept: np.ndarray | None, frame: Frame,
               k: int = DEFAULT_K) -> list[MaskCandidate]:
        ...


def calibrate(match: float) -> float:
    """Map a cosine match in [-1, 1] to a predicted IoU in [0, 1]."""
    return min(1.0, max(0.0, (match + 1.0) / 2.0))


def query_vector(ctx: MemoryContext, concept: np.ndarray | None,
                 alpha: float = DEFAULT_CONCEPT_ALPHA) -> np.ndarray:
    """Memory query, optionally blended with a concept vector.

    With a concept: ``normalize((1 - alpha) * aggregated + alpha * concept)``.
    """
    q = ctx.aggregated_feature
    if concept is None:
        return q
    return normalize((1.0 - alpha) * q + alpha * np.asarray(concept, dtype=np.float64), "query")


class SyntheticBackend:
    """Rank frame regions by cosine match against the memory query.

    The top ``k`` regions become candidates with ``predicted_iou =
    (match + 1) / 2``; every candidate shares ``object_score = clip(best
    match, 0, 1)``. Missing slots are filled with the empty mask (the object
    absent hypothesis) scored ``1 - best match``. The list is returned sorted
    by predicted IoU, stable on ties.
    """

    def __init__(self, concept_alpha: float = DEFAULT_CONCEPT_ALPHA):
        if not 0.0 <= concept_alpha <= 1.0:
            raise DomainError(f"concept_alpha must lie in [0, 1], got {concept_alpha}")
        self.concept_alpha = concept_alpha

    def decode(self, ctx: MemoryContext, concept: np.ndarray | None, frame: Frame,
               k: int = DEFAULT_K) -> list[MaskCandidate]:
        if k < 1:
            raise DomainError(f"k must be >= 1, got {k}")
        if len(ctx) == 0:
            raise ContractViolation(f"empty memory context at frame {frame.index}")
        q = query_vector(ctx, concept, self.concept_alpha)

        matches = [cosine_sim(q, r.embedding) for r in frame.regions]
        order = sorted(range(len(matches)), key=lambda i: -matches[i])
        best = matches[order[0]] if matches else 0.0
        obj_score = min(1.0, max(0.0, best))

        out = []
        for i in order[:k]:
            r = frame.regions[i]
            out.append(MaskCandidate(frame.region_mask(r), calibrate(matches[i]), obj_score,
                                     r.region_id, r.embedding))
        absent = MaskCandidate(BinaryMask.empty(frame.width, frame.height),
                               min(1.0, max(0.0, 1.0 - best)), obj_score)
        out.extend([absent] * (k - len(out)))
        out.sort(key=lambda c: -c.predicted_iou)
        return out


def select_best(candidates: Sequence[MaskCandidate]) -> int:
    """Index of the highest predicted IoU; the first one wins ties."""
    if len(candidates) == 0:
        raise DomainError("no candidates to select from")
    best = 0
    for i, c in enumerate(candidates):
        if c.predicted_iou > candidates[best].predicted_iou:
            best = i
    return best
