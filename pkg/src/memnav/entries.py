"""Memory entries and the weighted memory context every policy assembles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError
from .numerics import encoding_norm, normalize

# Encodings are rescaled to this norm before being added to unit features.
DEFAULT_PE_SCALE = 0.1
UNIT_TOL = 1e-9


def _check_unit(v: np.ndarray, name: str) -> None:
    n = float(np.linalg.norm(v))
    if abs(n - 1.0) > UNIT_TOL:
        raise DomainError(f"{name} must be unit norm, got norm {n}")


@dataclass(frozen=True)
class MemoryEntry:
    """One stored frame.

    ``feature`` is the appearance embedding of the stored region and
    ``mask_summary`` the mean embedding under its mask; both unit norm.
    ``confidence`` is the predicted IoU of the candidate that produced it.
    """

    frame_index: int
    feature: np.ndarray = field(repr=False, compare=False)
    mask_summary: np.ndarray = field(repr=False, compare=False)
    confidence: float = 1.0
    object_score: float = 1.0
    is_anchor: bool = False

    def __post_init__(self):
        if self.frame_index < 1:
            raise DomainError(f"frame_index must be >= 1, got {self.frame_index}")
        _check_unit(self.feature, "feature")
        _check_unit(self.mask_summary, "mask_summary")
        if not 0.0 <= self.confidence <= 1.0:
            raise DomainError(f"confidence must lie in [0, 1], got {self.confidence}")
        if not 0.0 <= self.object_score <= 1.0:
            raise DomainError(f"object_score must lie in [0, 1], got {self.object_score}")


@dataclass(frozen=True)
class ContextItem:
    entry: MemoryEntry
    encoding: np.ndarray = field(repr=False)
    weight: float


@dataclass(frozen=True)
class MemoryContext:
    """Weighted memory entries with their encodings, plus the fused query feature."""

    items: tuple[ContextItem, ...]
    aggregated_feature: np.ndarray | None = field(repr=False, default=None)

    def __len__(self):
        return len(self.items)

    @property
    def weights(self) -> list[float]:
        return [it.weight for it in self.items]

    @property
    def frame_indices(self) -> list[int]:
        return [it.entry.frame_index for it in self.items]

    @classmethod
    def empty(cls) -> "MemoryContext":
        return cls(())


def build_context(entries: Sequence[MemoryEntry], encodings: Sequence[np.ndarray],
                  weights: Sequence[float], pe_scale: float = DEFAULT_PE_SCALE) -> MemoryContext:
    """Fuse ``sum_i w_i * (feature_i + scaled encoding_i)`` and normalize it.

    Each encoding is rescaled to norm ``pe_scale`` (raw interleaved encodings
    have norm ``sqrt(d_model / 2)``), so positional information perturbs the
    query without swamping the unit appearance features.
    """
    if not (len(entries) == len(encodings) == len(weights)):
        raise DomainError("entries, encodings and weights must have equal length")
    if not entries:
        return MemoryContext.empty()
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w < 0) or abs(math.fsum(w) - 1.0) > 1e-9:
        raise DomainError(f"weights must be nonnegative and sum to 1, got sum {w.sum()}")
    d = entries[0].feature.shape[0]
    scale = pe_scale / encoding_norm(d)
    acc = np.zeros(d, dtype=np.float64)
    for e, enc, wi in zip(entries, encodings, w):
        acc += wi * (e.feature + scale * enc)
    items = tuple(ContextItem(e, np.asarray(enc, dtype=np.float64), float(wi))
                  for e, enc, wi in zip(entries, encodings, w))
    return MemoryContext(items, normalize(acc, "aggregated feature"))
