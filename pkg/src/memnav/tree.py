"""Constrained tree memory: a beam of memory pathways with uncertainty weights.

Each pathway owns a FIFO bank and one uncertainty ``sigma = 1 - predicted_iou``
per stored non-anchor node. Per frame every pathway decodes ``k`` candidates;
the ``|pathways| * k`` children are ranked by cumulative predicted IoU and the
best ``P`` survive. Scores equal to 12 decimals count as ties and are broken
by lower parent id, then lower candidate index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backend import Backend
from .banks import FIFO_WINDOW, FifoBank
from .entries import DEFAULT_PE_SCALE, MemoryContext, MemoryEntry, build_context
from .errors import DomainError, MemnavError
from .masks import MaskCandidate
from .numerics import neg_exp_weights
from .scenario import Frame

DEFAULT_PATHWAYS = 3
MAX_PATHWAYS = 8
TIE_DECIMALS = 12


@dataclass
class Pathway:
    id: int
    bank: FifoBank
    node_sigmas: list[float] = field(default_factory=list)
    cumulative_score: float = 0.0
    parent: int | None = None
    last_candidate: MaskCandidate | None = None


@dataclass
class TreeState:
    pathways: list[Pathway]
    max_pathways: int = DEFAULT_PATHWAYS
    cursor: int = 1
    next_id: int = 1

    @classmethod
    def start(cls, anchor: MemoryEntry, max_pathways: int = DEFAULT_PATHWAYS,
              window: int = FIFO_WINDOW) -> "TreeState":
        if not 1 <= max_pathways <= MAX_PATHWAYS:
            raise DomainError(f"pathway count must lie in [1, {MAX_PATHWAYS}], got {max_pathways}")
        root = Pathway(0, FifoBank(anchor, window))
        return cls([root], max_pathways, cursor=anchor.frame_index, next_id=1)


@dataclass(frozen=True)
class Child:
    parent_id: int
    candidate_index: int
    score: float
    candidate: MaskCandidate


@dataclass(frozen=True)
class StepResult:
    state: TreeState
    children: tuple[Child, ...]
    survivors: tuple[Child, ...]


class PathwayError(MemnavError):
    def __init__(self, pathway_id: int, cause: Exception):
        super().__init__(f"pathway {pathway_id}: {cause}")
        self.pathway_id = pathway_id


def tree_weights(pathway: Pathway) -> list[float]:
    """Anchor gets ``1 / (1 + n)``; the rest share the remainder by ``exp(-sigma)``."""
    n = len(pathway.bank.recent)
    if n == 0:
        return [1.0]
    w_anchor = 1.0 / (1 + n)
    rel = neg_exp_weights(pathway.node_sigmas)
    return [w_anchor, *((1.0 - w_anchor) * rel).tolist()]


def tree_aggregate(pathway: Pathway, pe_scale: float = DEFAULT_PE_SCALE) -> MemoryContext:
    bank = pathway.bank
    if len(pathway.node_sigmas) != len(bank.recent):
        raise DomainError("node_sigmas out of sync with stored entries")
    return build_context(bank.entries(), bank.encodings(), tree_weights(pathway), pe_scale)


def rank_children(children: list[Child], limit: int) -> list[Child]:
    key = lambda c: (-round(c.score, TIE_DECIMALS), c.parent_id, c.candidate_index)  # noqa: E731
    return sorted(children, key=key)[:limit]


def tree_step(state: TreeState, frame: Frame, backend: Backend, k: int, make_entry,
              concept: np.ndarray | None = None, pe_scale: float = DEFAULT_PE_SCALE) -> StepResult:
    """Advance every pathway by one frame and prune to the best ``max_pathways``.

    ``make_entry(frame_index, candidate)`` turns a chosen candidate into a
    memory entry, or returns ``None`` when nothing should be stored.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    by_id = {p.id: p for p in state.pathways}
    children: list[Child] = []
    for p in state.pathways:
        try:
            cands = backend.decode(tree_aggregate(p, pe_scale), concept, frame, k)
        except MemnavError as e:
            raise PathwayError(p.id, e) from e
        for ci, c in enumerate(cands):
            children.append(Child(p.id, ci, p.cumulative_score + c.predicted_iou, c))

    survivors = rank_children(children, state.max_pathways)
    next_id = state.next_id
    new_paths = []
    for ch in survivors:
        parent = by_id[ch.parent_id]
        bank = parent.bank.copy()
        sigmas = list(parent.node_sigmas)
        entry = make_entry(frame.index, ch.candidate)
        if entry is not None:
            if bank.update(entry) is not None:
                sigmas.pop(0)
            sigmas.append(1.0 - ch.candidate.predicted_iou)
        new_paths.append(Pathway(next_id, bank, sigmas, ch.score, parent.id, ch.candidate))
        next_id += 1

    new_state = TreeState(new_paths, state.max_pathways, frame.index, next_id)
    return StepResult(new_state, tuple(children), tuple(survivors))


def tree_select(state: TreeState) -> Pathway:
    """Highest cumulative score; lowest id on ties."""
    if not state.pathways:
        raise DomainError("tree has no pathways")
    return min(state.pathways, key=lambda p: (-round(p.cumulative_score, TIE_DECIMALS), p.id))
