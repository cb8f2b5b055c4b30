"""Quality-gated memory pool sampled in recent and early groups.

Only frames whose predicted IoU and object score both clear their thresholds
enter the pool. At each step a few groups are drawn from the pool (the most
recent entries for short-term dynamics, the earliest for identity), every
entry is encoded by its clamped frame gap to the current frame, and the
groups are fused with equal weights.
"""

from __future__ import annotations

from dataclasses import dataclass

from .entries import DEFAULT_PE_SCALE, MemoryContext, MemoryEntry, build_context
from .errors import ContractViolation, DomainError
from .numerics import MAX_TEMPORAL_GAP, pe_improved

DEFAULT_TAU_IOU = 0.7
DEFAULT_TAU_OBJ = 0.7
DEFAULT_MAX_SIZE = 256
DEFAULT_GROUPS = 2
DEFAULT_GROUP_SIZE = 6


@dataclass(frozen=True)
class PoolDecision:
    frame_index: int
    predicted_iou: float
    object_score: float
    admitted: bool


@dataclass(frozen=True)
class GroupPlan:
    n_groups: int = DEFAULT_GROUPS
    group_size: int = DEFAULT_GROUP_SIZE
    strategy: str = "recent_plus_early"

    def __post_init__(self):
        if self.n_groups < 1 or self.group_size < 1:
            raise DomainError("n_groups and group_size must be >= 1")
        if self.strategy != "recent_plus_early":
            raise DomainError(f"unknown sampling strategy {self.strategy!r}")


class MemoryPool:
    """Append-ordered store of high-confidence entries; frame 1 is permanent."""

    def __init__(self, anchor: MemoryEntry, tau_iou: float = DEFAULT_TAU_IOU,
                 tau_obj: float = DEFAULT_TAU_OBJ, max_size: int = DEFAULT_MAX_SIZE):
        if not (0.0 <= tau_iou <= 1.0 and 0.0 <= tau_obj <= 1.0):
            raise DomainError("pool thresholds must lie in [0, 1]")
        if max_size < 2:
            raise DomainError(f"max_size must be >= 2, got {max_size}")
        self.tau_iou = tau_iou
        self.tau_obj = tau_obj
        self.max_size = max_size
        self.entries: list[MemoryEntry] = [anchor]
        self.decisions: dict[int, PoolDecision] = {}
        self.evictions = 0

    @property
    def anchor(self) -> MemoryEntry:
        return self.entries[0]

    def __len__(self):
        return len(self.entries)

    def admit(self, entry: MemoryEntry) -> PoolDecision:
        if entry.frame_index <= self.entries[-1].frame_index:
            raise ContractViolation(
                f"out-of-order admission: frame {entry.frame_index} "
                f"after {self.entries[-1].frame_index}")
        ok = entry.confidence >= self.tau_iou and entry.object_score >= self.tau_obj
        decision = PoolDecision(entry.frame_index, entry.confidence, entry.object_score, ok)
        if ok:
            if len(self.entries) == self.max_size:
                del self.entries[1]
                self.evictions += 1
            self.entries.append(entry)
            self.decisions[entry.frame_index] = decision
        return decision

    def check_plan(self, plan: GroupPlan) -> None:
        if plan.n_groups * plan.group_size > self.max_size:
            raise DomainError("n_groups * group_size exceeds the pool's max_size")

    def sample(self, plan: GroupPlan) -> list[list[MemoryEntry]]:
        """Recent group first, then the early group (which holds frame 1).

        Extra groups beyond two are contiguous windows spaced evenly between.
        """
        n, s = len(self.entries), plan.group_size
        groups = [self.entries[max(0, n - s):]]
        if plan.n_groups >= 2:
            groups.append(self.entries[:s])
        extra = plan.n_groups - 2
        for g in range(1, extra + 1):
            start = round(g * max(0, n - s) / (extra + 1))
            groups.append(self.entries[start:start + s])
        return groups


def pool_assemble(groups: list[list[MemoryEntry]], current_index: int,
                  pe_scale: float = DEFAULT_PE_SCALE,
                  max_gap: int = MAX_TEMPORAL_GAP) -> MemoryContext:
    """Encode every entry by its gap to ``current_index``; fuse groups uniformly.

    An entry appearing in several groups contributes once per group.
    """
    groups = [g for g in groups if g]
    if not groups:
        raise DomainError("need at least one nonempty group")
    d = groups[0][0].feature.shape[0]
    entries, encs, weights = [], [], []
    for g in groups:
        w = 1.0 / (len(groups) * len(g))
        for e in g:
            entries.append(e)
            encs.append(pe_improved(current_index, e.frame_index, d, max_gap))
            weights.append(w)
    return build_context(entries, encs, weights, pe_scale)
