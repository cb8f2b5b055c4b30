"""Deterministic synthetic videos: moving rectangles with identity embeddings.

Every object and distractor is an axis-aligned rectangle carrying a unit
identity vector. A visible object emits one region per frame whose observed
embedding is ``normalize(identity + noise)`` with isotropic Gaussian noise of
per-component scale ``noise_sigma``.

Random streams
--------------
All randomness comes from numpy's PCG64 bit generator seeded through
``SeedSequence(entropy=seed, spawn_key=(stream, index))``. Streams are named,
so adding a distractor never perturbs the draws of an existing object:

=======  ==========================================
stream   purpose
=======  ==========================================
0        identity of object ``index``
1        per-frame noise of object ``index``
2        orthogonal mixing direction of distractor ``index``
3        per-frame noise of distractor ``index``
4        orthogonal mixing direction of look-alike object ``index``
=======  ==========================================

Noise is drawn for every frame, visible or not, so occlusion intervals do not
shift later draws.

Similar identities
------------------
A distractor (or a look-alike object) with mixing weight ``delta`` gets::

    identity = normalize((1 - delta) * source + delta * u)

where ``u`` is a random unit vector orthogonal to ``source``. Its cosine to
the source identity is then exactly ``(1 - delta) / sqrt((1 - delta)**2 + delta**2)``,
which decreases monotonically from 1 at ``delta = 0`` to 0 at ``delta = 1``.
See :func:`mix_similarity`.
"""

from __future__ import annotations

import json
import math
from dataclasses import MISSING, asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .masks import BinaryMask
from .numerics import DEFAULT_D_MODEL, normalize

STREAM_IDENTITY = 0
STREAM_OBJECT_NOISE = 1
STREAM_DISTRACTOR_MIX = 2
STREAM_DISTRACTOR_NOISE = 3
STREAM_LOOKALIKE_MIX = 4


def rng_stream(seed: int, stream: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream, index))
    return np.random.Generator(np.random.PCG64(ss))


def mix_similarity(delta: float) -> float:
    """Cosine between a source identity and its ``delta``-mixed counterpart."""
    a = 1.0 - delta
    return a / math.hypot(a, delta)


def random_unit(rng: np.random.Generator, d: int) -> np.ndarray:
    return normalize(rng.standard_normal(d))


def mix_identity(source: np.ndarray, delta: float, rng: np.random.Generator) -> np.ndarray:
    r = rng.standard_normal(source.shape[0])
    r -= np.dot(r, source) * source
    u = normalize(r)
    return normalize((1.0 - delta) * source + delta * u)


def _round(x: float) -> int:
    return math.floor(x + 0.5)


@dataclass
class ObjectSpec:
    """A tracked object.

    ``occlusions`` holds ``[start, end)`` frame intervals during which the
    object is absent. ``lookalike_of``/``lookalike_delta`` make this object's
    identity a mix of an earlier object's identity.
    """

    x: float
    y: float
    w: int
    h: int
    vx: float = 0.0
    vy: float = 0.0
    occlusions: list[list[int]] = field(default_factory=list)
    lookalike_of: int | None = None
    lookalike_delta: float = 0.5

    def visible(self, t: int) -> bool:
        return not any(s <= t < e for s, e in self.occlusions)


@dataclass
class DistractorSpec:
    """A non-target region whose identity resembles ``target_object``."""

    target_object: int
    delta: float
    x: float
    y: float
    w: int
    h: int
    vx: float = 0.0
    vy: float = 0.0


@dataclass
class ScenarioConfig:
    objects: list[ObjectSpec]
    distractors: list[DistractorSpec] = field(default_factory=list)
    width: int = 32
    height: int = 32
    num_frames: int = 48
    noise_sigma: float = 0.0
    seed: int = 0
    d_model: int = DEFAULT_D_MODEL

    def validate(self) -> "ScenarioConfig":
        if not isinstance(self.width, int) or self.width <= 0:
            raise ConfigError("width", "must be a positive integer")
        if not isinstance(self.height, int) or self.height <= 0:
            raise ConfigError("height", "must be a positive integer")
        if not isinstance(self.num_frames, int) or self.num_frames < 2:
            raise ConfigError("num_frames", "must be an integer >= 2")
        if not (isinstance(self.noise_sigma, (int, float)) and self.noise_sigma >= 0
                and math.isfinite(self.noise_sigma)):
            raise ConfigError("noise_sigma", "must be a finite real >= 0")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")
        if not isinstance(self.d_model, int) or self.d_model <= 0 or self.d_model % 2:
            raise ConfigError("d_model", "must be a positive even integer")
        if not self.objects:
            raise ConfigError("objects", "at least one object is required")
        for i, o in enumerate(self.objects):
            self._check_box(f"objects[{i}]", o)
            prev_end = None
            for k, iv in enumerate(o.occlusions):
                name = f"objects[{i}].occlusions[{k}]"
                if len(iv) != 2 or not all(isinstance(v, int) for v in iv):
                    raise ConfigError(name, "must be a [start, end) pair of integers")
                s, e = iv
                # frame 1 carries the given ground truth, so it must be visible
                if not (2 <= s < e <= self.num_frames):
                    raise ConfigError(name, f"need 2 <= start < end <= {self.num_frames}")
                if prev_end is not None and s < prev_end:
                    raise ConfigError(name, "intervals must be sorted and non-overlapping")
                prev_end = e
            if o.lookalike_of is not None:
                if not isinstance(o.lookalike_of, int) or not 0 <= o.lookalike_of < i:
                    raise ConfigError(f"objects[{i}].lookalike_of", "must index an earlier object")
                if not 0.0 <= o.lookalike_delta <= 1.0:
                    raise ConfigError(f"objects[{i}].lookalike_delta", "must lie in [0, 1]")
        for j, d in enumerate(self.distractors):
            self._check_box(f"distractors[{j}]", d)
            if not isinstance(d.target_object, int) or not 0 <= d.target_object < len(self.objects):
                raise ConfigError(f"distractors[{j}].target_object", "must index an object")
            if not 0.0 <= d.delta <= 1.0:
                raise ConfigError(f"distractors[{j}].delta", "must lie in [0, 1]")
        return self

    def _check_box(self, name: str, s) -> None:
        if not isinstance(s.w, int) or not 1 <= s.w <= self.width:
            raise ConfigError(f"{name}.w", f"must be an integer in [1, {self.width}]")
        if not isinstance(s.h, int) or not 1 <= s.h <= self.height:
            raise ConfigError(f"{name}.h", f"must be an integer in [1, {self.height}]")
        for attr in ("x", "y", "vx", "vy"):
            v = getattr(s, attr)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"{name}.{attr}", "must be a finite real")

    # -- JSON ---------------------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = _strict(data, cls, "")
        objs = data.get("objects")
        if not isinstance(objs, list):
            raise ConfigError("objects", "must be a list")
        data["objects"] = [ObjectSpec(**_strict(o, ObjectSpec, f"objects[{i}]"))
                           for i, o in enumerate(objs)]
        dis = data.get("distractors", [])
        if not isinstance(dis, list):
            raise ConfigError("distractors", "must be a list")
        data["distractors"] = [DistractorSpec(**_strict(d, DistractorSpec, f"distractors[{j}]"))
                               for j, d in enumerate(dis)]
        try:
            cfg = cls(**data)
        except TypeError as e:
            raise ConfigError("<root>", str(e)) from None
        return cfg.validate()

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError("<document>", f"invalid JSON: {e}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        return cls.from_json(Path(path).read_text())


def _strict(data, cls, prefix: str) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(prefix or "<root>", "must be a JSON object")
    allowed = {f.name for f in fields(cls)}
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{prefix}.{key}" if prefix else key, "unknown key")
    for f in fields(cls):
        if f.default is MISSING and f.default_factory is MISSING and f.name not in data:
            raise ConfigError(f"{prefix}.{f.name}" if prefix else f.name, "missing required key")
    return dict(data)


# -- generated data ------------------------------------------------------------

@dataclass(frozen=True)
class Region:
    """One emitted rectangle. ``source`` is ``("object", i)`` or ``("distractor", j)``."""

    region_id: int
    rect: tuple[int, int, int, int]
    embedding: np.ndarray = field(repr=False, compare=False)
    source: tuple[str, int] = ("object", 0)

    def mask(self, width: int, height: int) -> BinaryMask:
        return BinaryMask.from_rect(width, height, *self.rect)


@dataclass(frozen=True)
class Frame:
    """A video frame. ``gt_masks`` is ``None`` once stripped for tracking."""

    index: int
    width: int
    height: int
    regions: tuple[Region, ...]
    gt_masks: tuple[BinaryMask, ...] | None = None

    def without_gt(self) -> "Frame":
        return Frame(self.index, self.width, self.height, self.regions, None)

    def region_mask(self, region: Region) -> BinaryMask:
        return region.mask(self.width, self.height)


@dataclass(frozen=True)
class Event:
    frame: int
    kind: str
    object_id: int


@dataclass(frozen=True)
class Scenario:
    config: ScenarioConfig
    identities: tuple[np.ndarray, ...]
    distractor_identities: tuple[np.ndarray, ...]
    frames: tuple[Frame, ...]
    events: tuple[Event, ...]

    @property
    def num_frames(self) -> int:
        return len(self.frames)

    def frame(self, t: int) -> Frame:
        return self.frames[t - 1]

    def gt_mask(self, object_id: int, t: int) -> BinaryMask:
        return self.frames[t - 1].gt_masks[object_id]

    def tracking_frames(self) -> tuple[Frame, ...]:
        return tuple(f.without_gt() for f in self.frames)

    def reappearances(self, object_id: int) -> list[int]:
        return [e.frame for e in self.events if e.kind == "reappear" and e.object_id == object_id]

    def digest(self) -> bytes:
        """Canonical byte serialization, used to check determinism."""
        parts = [self.config.to_json().encode()]
        for v in self.identities + self.distractor_identities:
            parts.append(v.tobytes())
        for fr in self.frames:
            for r in fr.regions:
                parts.append(repr((fr.index, r.region_id, r.rect, r.source)).encode())
                parts.append(r.embedding.tobytes())
        parts.append(repr(self.events).encode())
        return b"".join(parts)


def _position(spec, t: int, width: int, height: int) -> tuple[int, int, int, int]:
    x = _round(spec.x + spec.vx * (t - 1))
    y = _round(spec.y + spec.vy * (t - 1))
    x = min(max(x, 0), width - spec.w)
    y = min(max(y, 0), height - spec.h)
    return (x, y, spec.w, spec.h)


def _observe(identity: np.ndarray, sigma: float, noise: np.ndarray) -> np.ndarray:
    if sigma == 0.0:
        return identity.copy()
    return normalize(identity + sigma * noise)


def generate(config: ScenarioConfig) -> Scenario:
    """Render a scenario. A pure function of ``config``."""
    cfg = config.validate()
    d, seed, T = cfg.d_model, cfg.seed, cfg.num_frames

    identities: list[np.ndarray] = []
    for i, o in enumerate(cfg.objects):
        if o.lookalike_of is None:
            identities.append(random_unit(rng_stream(seed, STREAM_IDENTITY, i), d))
        else:
            identities.append(mix_identity(identities[o.lookalike_of], o.lookalike_delta,
                                           rng_stream(seed, STREAM_LOOKALIKE_MIX, i)))
    dis_ids = [mix_identity(identities[s.target_object], s.delta,
                            rng_stream(seed, STREAM_DISTRACTOR_MIX, j))
               for j, s in enumerate(cfg.distractors)]

    obj_noise = [rng_stream(seed, STREAM_OBJECT_NOISE, i).standard_normal((T, d))
                 for i in range(len(cfg.objects))]
    dis_noise = [rng_stream(seed, STREAM_DISTRACTOR_NOISE, j).standard_normal((T, d))
                 for j in range(len(cfg.distractors))]

    n_obj = len(cfg.objects)
    frames = []
    events = []
    for t in range(1, T + 1):
        regions = []
        gts = []
        for i, o in enumerate(cfg.objects):
            rect = _position(o, t, cfg.width, cfg.height)
            if o.visible(t):
                emb = _observe(identities[i], cfg.noise_sigma, obj_noise[i][t - 1])
                regions.append(Region(i, rect, emb, ("object", i)))
                gts.append(BinaryMask.from_rect(cfg.width, cfg.height, *rect))
            else:
                gts.append(BinaryMask.empty(cfg.width, cfg.height))
            if t > 1 and o.visible(t) != o.visible(t - 1):
                events.append(Event(t, "reappear" if o.visible(t) else "occlude", i))
        for j, s in enumerate(cfg.distractors):
            rect = _position(s, t, cfg.width, cfg.height)
            emb = _observe(dis_ids[j], cfg.noise_sigma, dis_noise[j][t - 1])
            regions.append(Region(n_obj + j, rect, emb, ("distractor", j)))
        frames.append(Frame(t, cfg.width, cfg.height, tuple(regions), tuple(gts)))

    return Scenario(cfg, tuple(identities), tuple(dis_ids), tuple(frames), tuple(events))


# -- builtin suite -------------------------------------------------------------

BUILTIN_NAMES = ("short_clean", "long_occlusion", "crowded_distractors", "reappear_far")


def builtin_suite(name: str, seed: int | None = None) -> ScenarioConfig:
    """Return a fixed scenario config. ``seed`` overrides the documented default.

    ===================  ======  ======  ==========================================
    name                 frames  noise   contents
    ===================  ======  ======  ==========================================
    short_clean          20      0.0     one object, no events
    long_occlusion       48      0.02    target hidden on [14, 26) (12 frames);
                                         look-alike bystander (delta 0.6, cos 0.555)
    crowded_distractors  48      0.02    target hidden on [20, 26); distractors with
                                         delta 0.3, 0.25, 0.3, 0.2 (cos 0.919, 0.949,
                                         0.919, 0.970)
    reappear_far         160     0.02    target hidden on [12, 152) (140 frames, past
                                         the 128-frame encoding clamp), reappears on
                                         the far side; look-alike bystander
    ===================  ======  ======  ==========================================
    """
    if name == "short_clean":
        cfg = ScenarioConfig(
            objects=[ObjectSpec(x=4, y=4, w=6, h=6, vx=0.5, vy=0.3)],
            num_frames=20, noise_sigma=0.0, seed=11)
    elif name == "long_occlusion":
        cfg = ScenarioConfig(
            objects=[
                ObjectSpec(x=2, y=4, w=6, h=6, vx=0.1, vy=0.25, occlusions=[[14, 26]]),
                ObjectSpec(x=22, y=20, w=6, h=6, vx=-0.1, vy=-0.1,
                           lookalike_of=0, lookalike_delta=0.6),
            ],
            num_frames=48, noise_sigma=0.02, seed=12)
    elif name == "crowded_distractors":
        cfg = ScenarioConfig(
            objects=[ObjectSpec(x=13, y=13, w=5, h=5, vx=0.05, vy=-0.05,
                                occlusions=[[20, 26]])],
            distractors=[
                DistractorSpec(target_object=0, delta=0.3, x=1, y=1, w=5, h=5, vx=0.1, vy=0.05),
                DistractorSpec(target_object=0, delta=0.25, x=26, y=1, w=5, h=5, vx=-0.1, vy=0.05),
                DistractorSpec(target_object=0, delta=0.3, x=1, y=26, w=5, h=5, vx=0.1, vy=-0.05),
                DistractorSpec(target_object=0, delta=0.2, x=26, y=26, w=5, h=5, vx=-0.1, vy=-0.05),
            ],
            num_frames=48, noise_sigma=0.02, seed=13)
    elif name == "reappear_far":
        cfg = ScenarioConfig(
            objects=[
                ObjectSpec(x=2, y=2, w=6, h=6, vx=0.15, vy=0.0, occlusions=[[12, 152]]),
                ObjectSpec(x=14, y=22, w=6, h=6, vx=0.0, vy=0.0,
                           lookalike_of=0, lookalike_delta=0.6),
            ],
            num_frames=160, noise_sigma=0.02, seed=14)
    else:
        raise ConfigError("scenario", f"unknown builtin {name!r}; valid names: "
                          + ", ".join(BUILTIN_NAMES))
    if seed is not None:
        cfg.seed = seed
    return cfg.validate()
