"""Binary and soft masks, plus the ``RLE1`` text serialization.

File layout::

    RLE1 <width> <height>
    <run>,<run>,...

Runs alternate background/foreground over the row-major pixel order,
starting with background, and sum to ``width * height``. A mask whose first
pixel is foreground starts with a zero-length run. No other run is empty.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, FormatError

RLE_MAGIC = b"RLE1"


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Immutable ``height x width`` boolean grid."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.array(self.bits, dtype=bool, copy=True)
        if b.ndim != 2 or b.shape[0] == 0 or b.shape[1] == 0:
            raise DomainError(f"mask must be a nonempty 2-D grid, got shape {b.shape}")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @classmethod
    def empty(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def from_rect(cls, width: int, height: int, x: int, y: int, w: int, h: int) -> "BinaryMask":
        """Filled rectangle with top-left corner ``(x, y)``, clipped to the grid."""
        bits = np.zeros((height, width), dtype=bool)
        bits[max(y, 0):max(y + h, 0), max(x, 0):max(x + w, 0)] = True
        return cls(bits)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    def area(self) -> int:
        return int(self.bits.sum())

    def is_empty(self) -> bool:
        return not self.bits.any()

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.bits, other.bits))

    def __hash__(self):
        return hash((self.shape, self.bits.tobytes()))

    def __repr__(self):
        return f"BinaryMask({self.width}x{self.height}, area={self.area()})"


@dataclass(frozen=True, eq=False)
class SoftMask:
    """Per-pixel foreground probabilities in [0, 1]."""

    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64, copy=True)
        if p.ndim != 2 or p.size == 0:
            raise DomainError(f"soft mask must be a nonempty 2-D grid, got shape {p.shape}")
        if not np.all(np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0:
            raise DomainError("soft mask probabilities must lie in [0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_binary(cls, mask: BinaryMask) -> "SoftMask":
        return cls(mask.bits.astype(np.float64))

    @property
    def width(self) -> int:
        return self.probs.shape[1]

    @property
    def height(self) -> int:
        return self.probs.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.probs.shape


def run_lengths(mask: BinaryMask) -> list[int]:
    flat = mask.bits.reshape(-1)
    # positions where the value flips
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return runs


def rle_encode(mask: BinaryMask) -> bytes:
    header = f"RLE1 {mask.width} {mask.height}\n"
    body = ",".join(str(r) for r in run_lengths(mask)) + "\n"
    return (header + body).encode("ascii")


def rle_decode(data: bytes) -> BinaryMask:
    """Parse an ``RLE1`` document. Raises :class:`FormatError` on malformed input."""
    if isinstance(data, str):
        data = data.encode("ascii")
    nl = data.find(b"\n")
    if nl < 0:
        raise FormatError("missing header terminator", len(data))
    header = data[:nl].split(b" ")
    if len(header) != 3 or header[0] != RLE_MAGIC:
        raise FormatError("header must be 'RLE1 <width> <height>'", 0)
    try:
        width, height = int(header[1]), int(header[2])
    except ValueError:
        raise FormatError("non-integer dimensions in header", len(RLE_MAGIC) + 1) from None
    if width <= 0 or height <= 0:
        raise FormatError("dimensions must be positive", len(RLE_MAGIC) + 1)
    total = width * height

    body_start = nl + 1
    body = data[body_start:]
    if body.endswith(b"\n"):
        body = body[:-1]
    if not body:
        raise FormatError("truncated stream: no runs", body_start)

    flat = np.zeros(total, dtype=bool)
    pos = 0
    offset = body_start
    value = False
    for i, token in enumerate(body.split(b",")):
        if not token.isdigit():
            raise FormatError(f"invalid run token {token[:16]!r}", offset)
        run = int(token)
        if run == 0 and i > 0:
            raise FormatError("zero-length run after the first", offset)
        if pos + run > total:
            raise FormatError(f"runs exceed width*height={total}", offset)
        flat[pos:pos + run] = value
        pos += run
        value = not value
        offset += len(token) + 1
    if pos != total:
        raise FormatError(f"truncated stream: runs cover {pos} of {total} pixels", len(data))
    return BinaryMask(flat.reshape(height, width))


def write_rle(path, mask: BinaryMask) -> None:
    Path(path).write_bytes(rle_encode(mask))


def read_rle(path) -> BinaryMask:
    return rle_decode(Path(path).read_bytes())


@dataclass(frozen=True)
class MaskCandidate:
    """One decoder hypothesis: a mask, its predicted IoU and a presence score.

    ``region_id`` and ``embedding`` identify the frame region the mask was cut
    from; both are ``None`` for the empty (object absent) hypothesis.
    """

    mask: BinaryMask
    predicted_iou: float
    object_score: float
    region_id: int | None = None
    embedding: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for name in ("predicted_iou", "object_score"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise DomainError(f"{name} must lie in [0, 1], got {v}")
