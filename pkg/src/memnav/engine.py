"""Per-object tracking sessions under one of four memory policies.

The session sees ground truth exactly once, for frame 1, to build the anchor
entry. Every later frame is stripped of ground truth before it reaches the
policy. The step loop is::

    assemble memory -> (concept check) -> decode -> select -> record -> update

A selection of the empty mask stores nothing, so memory is never filled with
absence frames.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from typing import Any

import numpy as np

from . import banks, concept as concept_mod, pool as pool_mod, tree as tree_mod
from .backend import DEFAULT_CONCEPT_ALPHA, DEFAULT_K, SyntheticBackend, calibrate, select_best
from .entries import DEFAULT_PE_SCALE, MemoryContext, MemoryEntry
from .errors import ConfigError, ContractViolation
from .masks import BinaryMask, MaskCandidate, rle_encode
from .metrics import DEFAULT_TOLERANCE_PX, MetricReport, frame_scores, jf_mean, region_j
from .scenario import Frame, Scenario

POLICIES = ("fifo", "dam", "tree", "pool")


@dataclass
class SessionConfig:
    policy: str = "fifo"
    k: int = DEFAULT_K
    pe_scale: float = DEFAULT_PE_SCALE
    # distractor-aware memory
    capacity_factor: int = banks.DEFAULT_CAPACITY_FACTOR
    tau_d: float = banks.DEFAULT_TAU_D
    tau_a: float = banks.DEFAULT_TAU_A
    dfm_cap: int = banks.DEFAULT_DFM_CAP
    dam_reduction: str = "anchor"
    # tree memory
    pathways: int = tree_mod.DEFAULT_PATHWAYS
    # memory pool
    tau_iou: float = pool_mod.DEFAULT_TAU_IOU
    tau_obj: float = pool_mod.DEFAULT_TAU_OBJ
    max_pool: int = pool_mod.DEFAULT_MAX_SIZE
    n_groups: int = pool_mod.DEFAULT_GROUPS
    group_size: int = pool_mod.DEFAULT_GROUP_SIZE
    # concept guidance
    concept: bool = False
    tau_div: float = concept_mod.DEFAULT_TAU_DIV
    tau_scene: float = concept_mod.DEFAULT_TAU_SCENE
    concept_alpha: float = DEFAULT_CONCEPT_ALPHA
    n_keyframes: int = concept_mod.DEFAULT_CAPACITY
    seed: int = 0

    def validate(self) -> "SessionConfig":
        if self.policy not in POLICIES:
            raise ConfigError("policy", f"must be one of {{{','.join(POLICIES)}}}, got {self.policy!r}")
        if not isinstance(self.k, int) or self.k < 1:
            raise ConfigError("k", "must be an integer >= 1")
        if self.pe_scale < 0:
            raise ConfigError("pe_scale", "must be >= 0")
        if not isinstance(self.capacity_factor, int) or self.capacity_factor < 1:
            raise ConfigError("capacity_factor", "must be an integer >= 1")
        if not -1.0 <= self.tau_d <= 1.0:
            raise ConfigError("tau_d", "must lie in [-1, 1]")
        if self.tau_a < 0:
            raise ConfigError("tau_a", "must be >= 0")
        if not isinstance(self.dfm_cap, int) or self.dfm_cap < 1:
            raise ConfigError("dfm_cap", "must be an integer >= 1")
        if self.dam_reduction not in banks.REDUCTIONS:
            raise ConfigError("dam_reduction", f"must be one of {banks.REDUCTIONS}")
        if not isinstance(self.pathways, int) or not 1 <= self.pathways <= tree_mod.MAX_PATHWAYS:
            raise ConfigError("pathways", f"must be an integer in [1, {tree_mod.MAX_PATHWAYS}]")
        for name in ("tau_iou", "tau_obj", "concept_alpha"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(name, "must lie in [0, 1]")
        if not isinstance(self.max_pool, int) or self.max_pool < 2:
            raise ConfigError("max_pool", "must be an integer >= 2")
        if not isinstance(self.n_groups, int) or self.n_groups < 1:
            raise ConfigError("n_groups", "must be an integer >= 1")
        if not isinstance(self.group_size, int) or self.group_size < 1:
            raise ConfigError("group_size", "must be an integer >= 1")
        if self.n_groups * self.group_size > self.max_pool:
            raise ConfigError("group_size", "n_groups * group_size must not exceed max_pool")
        if not isinstance(self.n_keyframes, int) or self.n_keyframes < 1:
            raise ConfigError("n_keyframes", "must be an integer >= 1")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SessionConfig":
        allowed = {f.name for f in fields(cls)}
        for key in data:
            if key not in allowed:
                raise ConfigError(key, "unknown key")
        return cls(**data).validate()


@dataclass(frozen=True)
class FrameRecord:
    index: int
    mask: BinaryMask
    predicted_iou: float
    object_score: float
    concept_active: bool
    digest: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class TrackRecord:
    object_id: int
    policy: str
    frames: tuple[FrameRecord, ...]

    def masks(self) -> list[BinaryMask]:
        return [fr.mask for fr in self.frames]

    def to_json(self) -> str:
        rows = []
        for fr in self.frames:
            rows.append({
                "frame": fr.index,
                "mask_rle": rle_encode(fr.mask).decode("ascii"),
                "predicted_iou": fr.predicted_iou,
                "object_score": fr.object_score,
                "concept_active": fr.concept_active,
                "digest": fr.digest,
            })
        doc = {"object_id": self.object_id, "policy": self.policy, "frames": rows}
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def entry_from_candidate(frame_index: int, cand: MaskCandidate) -> MemoryEntry | None:
    """Memory entry for a chosen candidate; ``None`` for the empty hypothesis."""
    if cand.region_id is None or cand.embedding is None:
        return None
    return MemoryEntry(frame_index, cand.embedding, cand.embedding,
                       cand.predicted_iou, cand.object_score)


def anchor_entry(frame: Frame, gt: BinaryMask) -> MemoryEntry:
    """Build the frame-1 anchor from the region that best overlaps the given mask."""
    if gt.is_empty():
        raise ConfigError("object_id", "object has an empty ground-truth mask at frame 1")
    best, best_j = None, 0.0
    for r in frame.regions:
        j = region_j(frame.region_mask(r), gt)
        if j > best_j:
            best, best_j = r, j
    if best is None:
        raise ConfigError("object_id", "no region overlaps the frame-1 ground truth")
    return MemoryEntry(frame.index, best.embedding, best.embedding, 1.0, 1.0, is_anchor=True)


class _Policy:
    """Memory state behind one session; subclasses wrap a specific bank."""

    def context(self, t: int) -> MemoryContext:
        raise NotImplementedError

    def store(self, t: int, cand: MaskCandidate, others: list[MaskCandidate],
              concept_vec: np.ndarray | None = None) -> tuple[dict, MemoryEntry | None]:
        raise NotImplementedError


class _FifoPolicy(_Policy):
    def __init__(self, anchor, cfg):
        self.bank = banks.FifoBank(anchor)
        self.pe_scale = cfg.pe_scale

    def context(self, t):
        return self.bank.assemble(t, self.pe_scale)

    def store(self, t, cand, others, concept_vec=None):
        entry = entry_from_candidate(t, cand)
        if entry is not None:
            self.bank.update(entry)
        return {"stored": entry is not None,
                "memory": [e.frame_index for e in self.bank.entries()]}, entry


class _DamPolicy(_Policy):
    def __init__(self, anchor, cfg):
        self.bank = banks.DamBank(anchor, cfg.capacity_factor, cfg.tau_d, cfg.tau_a,
                                  cfg.dfm_cap, cfg.dam_reduction)
        self.pe_scale = cfg.pe_scale
        self.competitor_iou = calibrate(cfg.tau_d)

    def context(self, t):
        return self.bank.assemble(t, self.pe_scale)

    def store(self, t, cand, others, concept_vec=None):
        entry = entry_from_candidate(t, cand)
        digest = {"stored": False, "promoted": False}
        # a competing region that would itself pass the gate marks a distractor event
        if any(o.region_id is not None and o.predicted_iou >= self.competitor_iou
               for o in others):
            self.bank.note_distractor(t)
        if entry is not None:
            ref = concept_vec if concept_vec is not None else self.bank.anchor.mask_summary
            dec = self.bank.admit(entry, ref)
            digest["stored"] = dec.admitted
            digest["similarity"] = dec.similarity
            if dec.admitted and self.bank.can_promote(entry):
                self.bank.promote_anchor(entry)
                digest["promoted"] = True
        digest["dfm"] = [e.frame_index for e in self.bank.dfm]
        digest["ram"] = [e.frame_index for e in self.bank.ram]
        return digest, entry


class _PoolPolicy(_Policy):
    def __init__(self, anchor, cfg):
        self.pool = pool_mod.MemoryPool(anchor, cfg.tau_iou, cfg.tau_obj, cfg.max_pool)
        self.plan = pool_mod.GroupPlan(cfg.n_groups, cfg.group_size)
        self.pool.check_plan(self.plan)
        self.pe_scale = cfg.pe_scale

    def context(self, t):
        return pool_mod.pool_assemble(self.pool.sample(self.plan), t, self.pe_scale)

    def store(self, t, cand, others, concept_vec=None):
        entry = entry_from_candidate(t, cand)
        digest = {"stored": False}
        if entry is not None:
            digest["stored"] = self.pool.admit(entry).admitted
        digest["pool_size"] = len(self.pool)
        return digest, entry


def run_session(scenario: Scenario, object_id: int, config: SessionConfig,
                backend=None) -> TrackRecord:
    """Track ``object_id`` from its frame-1 mask through the rest of the video."""
    cfg = config.validate()
    if not 0 <= object_id < len(scenario.config.objects):
        raise ConfigError("object_id", f"scenario has {len(scenario.config.objects)} objects")
    backend = backend or SyntheticBackend(cfg.concept_alpha)

    # the only ground-truth read of the session
    anchor = anchor_entry(scenario.frame(1), scenario.gt_mask(object_id, 1))
    frames = scenario.tracking_frames()[1:]

    keyframes = (concept_mod.KeyframeBank(anchor, cfg.n_keyframes, cfg.tau_div)
                 if cfg.concept else None)

    if cfg.policy == "tree":
        return _run_tree(anchor, frames, object_id, cfg, backend, keyframes)

    policy = {"fifo": _FifoPolicy, "dam": _DamPolicy, "pool": _PoolPolicy}[cfg.policy](anchor, cfg)
    records = []
    for frame in frames:
        t = frame.index
        ctx = policy.context(t)
        concept_vec, active = _concept_for(keyframes, cfg, backend, ctx, frame)
        cands = backend.decode(ctx, concept_vec, frame, cfg.k)
        best_i = select_best(cands)
        best = cands[best_i]
        others = [c for i, c in enumerate(cands) if i != best_i]
        gate_ref = keyframes.concept_vector() if keyframes is not None else None
        digest, entry = policy.store(t, best, others, gate_ref)
        if keyframes is not None and entry is not None:
            keyframes.maybe_add(entry)
        records.append(FrameRecord(t, best.mask, best.predicted_iou, best.object_score,
                                   active, digest))
    return TrackRecord(object_id, cfg.policy, tuple(records))


def _concept_for(keyframes, cfg, backend, ctx, frame):
    """Concept vector for this frame, or ``None`` while the scene is unchanged."""
    if keyframes is None or not frame.regions:
        return None, False
    probe = backend.decode(ctx, None, frame, 1)[0]
    if probe.embedding is None:
        return None, False
    score = keyframes.scene_change_score(probe.embedding)
    if concept_mod.concept_active(score, cfg.tau_scene):
        return keyframes.concept_vector(), True
    return None, False


def _run_tree(anchor, frames, object_id, cfg, backend, keyframes) -> TrackRecord:
    state = tree_mod.TreeState.start(anchor, cfg.pathways)
    records = []
    for frame in frames:
        lead = tree_mod.tree_select(state)
        concept_vec, active = _concept_for(
            keyframes, cfg, backend, tree_mod.tree_aggregate(lead, cfg.pe_scale), frame)
        step = tree_mod.tree_step(state, frame, backend, cfg.k, entry_from_candidate,
                                  concept_vec, cfg.pe_scale)
        state = step.state
        chosen = tree_mod.tree_select(state)
        cand = chosen.last_candidate
        if keyframes is not None:
            entry = entry_from_candidate(frame.index, cand)
            if entry is not None:
                keyframes.maybe_add(entry)
        digest = {
            "selected": chosen.id,
            "pathway_scores": [p.cumulative_score for p in state.pathways],
            "memory": [e.frame_index for e in chosen.bank.entries()],
        }
        records.append(FrameRecord(frame.index, cand.mask, cand.predicted_iou,
                                   cand.object_score, active, digest))
    return TrackRecord(object_id, "tree", tuple(records))


# -- evaluation ----------------------------------------------------------------

def evaluate(record: TrackRecord, scenario: Scenario, object_id: int | None = None,
             tolerance_px: int = DEFAULT_TOLERANCE_PX) -> MetricReport:
    oid = record.object_id if object_id is None else object_id
    if len(record.frames) != scenario.num_frames - 1:
        raise ContractViolation(
            f"record has {len(record.frames)} frames, scenario needs {scenario.num_frames - 1}")
    rows = []
    for fr in record.frames:
        j, f = frame_scores(fr.mask, scenario.gt_mask(oid, fr.index), tolerance_px)
        rows.append((fr.index, j, f))
    return jf_mean(rows)


def window_jf(report: MetricReport, start: int, end: int | None = None) -> float:
    """Mean J&F over evaluated frames with ``start <= index < end``."""
    rows = [r for r in report.per_frame if r[0] >= start and (end is None or r[0] < end)]
    if not rows:
        raise ContractViolation(f"no frames in window [{start}, {end})")
    return float(np.mean([(j + f) / 2.0 for _, j, f in rows]))


def false_positive_flags(record: TrackRecord, scenario: Scenario,
                         object_id: int | None = None) -> list[bool]:
    """Per frame: nonempty prediction while the target is hidden, or a prediction
    that misses the target (IoU < 0.5) while overlapping a distractor."""
    oid = record.object_id if object_id is None else object_id
    flags = []
    for fr in record.frames:
        gt = scenario.gt_mask(oid, fr.index)
        if fr.mask.is_empty():
            flags.append(False)
            continue
        if gt.is_empty():
            flags.append(True)
            continue
        frame = scenario.frame(fr.index)
        on_distractor = any(
            r.source[0] == "distractor" and bool((frame.region_mask(r).bits & fr.mask.bits).any())
            for r in frame.regions)
        flags.append(region_j(fr.mask, gt) < 0.5 and on_distractor)
    return flags


def false_positive_rate(record: TrackRecord, scenario: Scenario,
                        object_id: int | None = None) -> float:
    flags = false_positive_flags(record, scenario, object_id)
    return sum(flags) / len(flags)
