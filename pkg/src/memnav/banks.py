"""FIFO memory bank and the distractor-aware variant.

The FIFO bank keeps the initialization frame plus the six most recent stored
frames. The distractor-aware bank splits memory into a small set of
non-time-stamped anchors (``dfm``) and a longer time-stamped FIFO (``ram``)
whose inserts must pass a similarity gate against the target concept.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .entries import DEFAULT_PE_SCALE, MemoryContext, MemoryEntry, build_context
from .errors import ContractViolation, DomainError
from .numerics import cosine_sim, pe_original

FIFO_WINDOW = 6
DEFAULT_CAPACITY_FACTOR = 5
DEFAULT_TAU_D = 0.5
DEFAULT_TAU_A = 0.8
DEFAULT_DFM_CAP = 4
REDUCTIONS = ("anchor", "max")


class FifoBank:
    """Anchor entry plus a bounded first-in-first-out window of recent entries."""

    def __init__(self, anchor: MemoryEntry, window: int = FIFO_WINDOW):
        if window < 1:
            raise DomainError(f"window must be >= 1, got {window}")
        self.anchor = anchor
        self.window = window
        self.recent: deque[MemoryEntry] = deque(maxlen=window)

    @property
    def last_index(self) -> int:
        return self.recent[-1].frame_index if self.recent else self.anchor.frame_index

    def update(self, entry: MemoryEntry) -> MemoryEntry | None:
        """Append ``entry``; return the evicted entry, if any."""
        if entry.frame_index <= self.last_index:
            raise ContractViolation(
                f"out-of-order update: frame {entry.frame_index} after {self.last_index}")
        evicted = self.recent[0] if len(self.recent) == self.window else None
        self.recent.append(entry)
        return evicted

    def entries(self) -> list[MemoryEntry]:
        return [self.anchor, *self.recent]

    def encodings(self) -> list[np.ndarray]:
        """Zero for the anchor; window position (1 = newest) for the rest."""
        d = self.anchor.feature.shape[0]
        n = len(self.recent)
        return [np.zeros(d)] + [pe_original(n - i, d) for i in range(n)]

    def assemble(self, current_index: int | None = None,
                 pe_scale: float = DEFAULT_PE_SCALE) -> MemoryContext:
        entries = self.entries()
        w = 1.0 / len(entries)
        return build_context(entries, self.encodings(), [w] * len(entries), pe_scale)

    def copy(self) -> "FifoBank":
        other = FifoBank(self.anchor, self.window)
        other.recent.extend(self.recent)
        return other


@dataclass(frozen=True)
class AdmitDecision:
    frame_index: int
    similarity: float
    admitted: bool


class DamBank:
    """Distractor-aware memory: ``dfm`` anchors plus a gated ``ram`` FIFO.

    Parameters
    ----------
    anchor : MemoryEntry
        Frame-1 entry; permanent member of ``dfm``.
    capacity_factor : int
        ``ram`` holds up to ``capacity_factor * 6`` entries.
    tau_d : float
        Admission threshold on the gate similarity (inclusive).
    tau_a : float
        Minimum confidence for promoting an entry into ``dfm``.
    dfm_cap : int
        Maximum ``dfm`` size, anchor included.
    reduction : {"anchor", "max"}
        Gate similarity against the anchor concept only, or the maximum over
        every stored mask summary.
    """

    def __init__(self, anchor: MemoryEntry, capacity_factor: int = DEFAULT_CAPACITY_FACTOR,
                 tau_d: float = DEFAULT_TAU_D, tau_a: float = DEFAULT_TAU_A,
                 dfm_cap: int = DEFAULT_DFM_CAP, reduction: str = "anchor"):
        if capacity_factor < 1:
            raise DomainError(f"capacity_factor must be >= 1, got {capacity_factor}")
        if not -1.0 <= tau_d <= 1.0:
            raise DomainError(f"tau_d must lie in [-1, 1], got {tau_d}")
        if dfm_cap < 1:
            raise DomainError(f"dfm_cap must be >= 1, got {dfm_cap}")
        if reduction not in REDUCTIONS:
            raise DomainError(f"reduction must be one of {REDUCTIONS}, got {reduction!r}")
        self.capacity_factor = capacity_factor
        self.capacity = capacity_factor * FIFO_WINDOW
        self.tau_d = tau_d
        self.tau_a = tau_a
        self.dfm_cap = dfm_cap
        self.reduction = reduction
        self.dfm: list[MemoryEntry] = [anchor]
        self.ram: deque[MemoryEntry] = deque(maxlen=self.capacity)
        self.admitted_similarity: dict[int, float] = {}
        self.distractor_frames: set[int] = set()
        self.evictions = 0

    @property
    def anchor(self) -> MemoryEntry:
        return self.dfm[0]

    @property
    def last_index(self) -> int:
        return self.ram[-1].frame_index if self.ram else self.anchor.frame_index

    def gate_similarity(self, entry: MemoryEntry, anchor_concept: np.ndarray) -> float:
        s = cosine_sim(entry.mask_summary, anchor_concept)
        if self.reduction == "max":
            for e in (*self.dfm, *self.ram):
                s = max(s, cosine_sim(entry.mask_summary, e.mask_summary))
        return s

    def admit(self, entry: MemoryEntry, anchor_concept: np.ndarray) -> AdmitDecision:
        if entry.frame_index <= self.last_index:
            raise ContractViolation(
                f"out-of-order admission: frame {entry.frame_index} after {self.last_index}")
        s = self.gate_similarity(entry, anchor_concept)
        if s < self.tau_d:
            self.distractor_frames.add(entry.frame_index)
            return AdmitDecision(entry.frame_index, s, False)
        if len(self.ram) == self.capacity:
            old = self.ram[0]
            self.admitted_similarity.pop(old.frame_index, None)
            self.evictions += 1
        self.ram.append(entry)
        self.admitted_similarity[entry.frame_index] = s
        return AdmitDecision(entry.frame_index, s, True)

    def note_distractor(self, frame_index: int) -> None:
        """Record that a competing look-alike was seen at ``frame_index``."""
        self.distractor_frames.add(frame_index)

    def can_promote(self, entry: MemoryEntry) -> bool:
        return entry.frame_index in self.distractor_frames and entry.confidence >= self.tau_a

    def promote_anchor(self, entry: MemoryEntry) -> None:
        """Add ``entry`` to ``dfm``, dropping the oldest promoted entry past the cap."""
        if not self.can_promote(entry):
            raise ContractViolation(
                f"frame {entry.frame_index} does not qualify for promotion "
                f"(distractor event: {entry.frame_index in self.distractor_frames}, "
                f"confidence {entry.confidence} vs tau_a {self.tau_a})")
        self.dfm.append(entry)
        if len(self.dfm) > self.dfm_cap:
            del self.dfm[1]

    def entries(self) -> list[MemoryEntry]:
        dfm_ids = {e.frame_index for e in self.dfm}
        return [*self.dfm, *(e for e in self.ram if e.frame_index not in dfm_ids)]

    def assemble(self, current_index: int | None = None,
                 pe_scale: float = DEFAULT_PE_SCALE) -> MemoryContext:
        """Anchors unencoded; ram entries encoded by window position (1 = newest)."""
        d = self.anchor.feature.shape[0]
        dfm_ids = {e.frame_index for e in self.dfm}
        entries = list(self.dfm)
        encs = [np.zeros(d) for _ in self.dfm]
        n = len(self.ram)
        for i, e in enumerate(self.ram):
            if e.frame_index in dfm_ids:
                continue
            entries.append(e)
            encs.append(pe_original(n - i, d))
        w = 1.0 / len(entries)
        return build_context(entries, encs, [w] * len(entries), pe_scale)
