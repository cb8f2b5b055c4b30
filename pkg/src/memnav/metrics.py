"""Region (J) and contour (F) accuracy, their mean, and the training-loss terms.

Conventions:

* J of two empty masks is 1.0 (absence correctly predicted).
* Boundary pixels are foreground pixels with at least one 4-neighbour that is
  background or off-grid.
* A boundary pixel matches when some boundary pixel of the other mask lies
  within Chebyshev distance ``tolerance_px``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .errors import DomainError
from .masks import BinaryMask, MaskCandidate, SoftMask

DEFAULT_TOLERANCE_PX = 1
BCE_EPS = 1e-7
DEFAULT_LAMBDAS = (1.0, 1.0, 1.0, 15.0)


def _check_dims(a, b) -> None:
    if a.shape != b.shape:
        raise DomainError(f"dimension mismatch: {a.shape} vs {b.shape}")


def region_j(pred: BinaryMask, gt: BinaryMask) -> float:
    _check_dims(pred, gt)
    union = int(np.logical_or(pred.bits, gt.bits).sum())
    if union == 0:
        return 1.0
    return int(np.logical_and(pred.bits, gt.bits).sum()) / union


def boundary(bits: np.ndarray) -> np.ndarray:
    padded = np.pad(bits, 1, constant_values=False)
    interior = (padded[1:-1, 1:-1] & padded[:-2, 1:-1] & padded[2:, 1:-1]
                & padded[1:-1, :-2] & padded[1:-1, 2:])
    return bits & ~interior


def _matched_fraction(src: np.ndarray, dst: np.ndarray, tol: int) -> float:
    if tol > 0:
        struct = np.ones((2 * tol + 1, 2 * tol + 1), dtype=bool)
        reach = ndimage.binary_dilation(dst, structure=struct)
    else:
        reach = dst
    return int((src & reach).sum()) / int(src.sum())


def contour_f(pred: BinaryMask, gt: BinaryMask, tolerance_px: int = DEFAULT_TOLERANCE_PX) -> float:
    _check_dims(pred, gt)
    if tolerance_px < 0:
        raise DomainError(f"tolerance_px must be >= 0, got {tolerance_px}")
    bp = boundary(pred.bits)
    bg = boundary(gt.bits)
    np_, ng = bool(bp.any()), bool(bg.any())
    if not np_ and not ng:
        return 1.0
    if not np_ or not ng:
        return 0.0
    precision = _matched_fraction(bp, bg, tolerance_px)
    recall = _matched_fraction(bg, bp, tolerance_px)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class MetricReport:
    """Sequence-level J, F and J&F with the per-frame values they average."""

    j: float
    f: float
    jf: float
    per_frame: tuple[tuple[int, float, float], ...] = field(default=())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["frame", "j", "f"])
        for idx, j, f in self.per_frame:
            w.writerow([idx, _fmt(j), _fmt(f)])
        w.writerow(["ALL", _fmt(self.j), _fmt(self.f)])
        return buf.getvalue()


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def frame_scores(pred: BinaryMask, gt: BinaryMask,
                 tolerance_px: int = DEFAULT_TOLERANCE_PX) -> tuple[float, float]:
    return region_j(pred, gt), contour_f(pred, gt, tolerance_px)


def jf_mean(per_frame: Iterable[tuple[int, float, float]]) -> MetricReport:
    """Average per-frame ``(index, j, f)`` rows. Frame 1 is given, so it is skipped."""
    rows = tuple((int(i), float(j), float(f)) for i, j, f in per_frame if int(i) != 1)
    if not rows:
        raise DomainError("no evaluated frames")
    j = math.fsum(r[1] for r in rows) / len(rows)
    f = math.fsum(r[2] for r in rows) / len(rows)
    return MetricReport(j=j, f=f, jf=(j + f) / 2.0, per_frame=rows)


def parse_metrics_csv(text: str) -> MetricReport:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["frame", "j", "f"]:
        raise DomainError("metrics CSV must start with header 'frame,j,f'")
    if len(rows) < 2 or rows[-1][0] != "ALL":
        raise DomainError("metrics CSV must end with an 'ALL' summary row")
    per = tuple((int(r[0]), float(r[1]), float(r[2])) for r in rows[1:-1])
    j, f = float(rows[-1][1]), float(rows[-1][2])
    return MetricReport(j=j, f=f, jf=(j + f) / 2.0, per_frame=per)


@dataclass(frozen=True)
class LossComponents:
    bce: float
    iou: float
    dice: float
    mask_score: float
    total: float


def bce_loss(pred: SoftMask, gt: BinaryMask) -> float:
    p = np.clip(pred.probs, BCE_EPS, 1.0 - BCE_EPS)
    g = gt.bits.astype(np.float64)
    return float(np.mean(-(g * np.log(p) + (1.0 - g) * np.log1p(-p))))


def soft_iou_loss(pred: SoftMask, gt: BinaryMask) -> float:
    p, g = pred.probs, gt.bits.astype(np.float64)
    union = float(np.maximum(p, g).sum())
    if union == 0.0:
        return 0.0
    return 1.0 - float(np.minimum(p, g).sum()) / union


def dice_loss(pred: SoftMask, gt: BinaryMask) -> float:
    p, g = pred.probs, gt.bits.astype(np.float64)
    denom = float(p.sum() + g.sum())
    if denom == 0.0:
        return 0.0
    return 1.0 - 2.0 * float((p * g).sum()) / denom


def mask_score_loss(candidates: Sequence[MaskCandidate], gt: BinaryMask) -> float:
    """Mean squared error between predicted and true IoU over the candidates."""
    if len(candidates) == 0:
        raise DomainError("need at least one candidate")
    errs = []
    for c in candidates:
        if not (0.0 <= c.predicted_iou <= 1.0):
            raise DomainError(f"predicted IoU {c.predicted_iou} outside [0, 1]")
        errs.append((c.predicted_iou - region_j(c.mask, gt)) ** 2)
    return math.fsum(errs) / len(errs)


def combine_losses(bce: float, iou: float, dice: float, mask_score: float,
                   lambdas: Sequence[float] = DEFAULT_LAMBDAS) -> float:
    l1, l2, l3, l4 = lambdas
    return l1 * bce + l2 * iou + l3 * dice + l4 * mask_score


def loss_components(pred: SoftMask, gt: BinaryMask, candidates: Sequence[MaskCandidate],
                    lambdas: Sequence[float] = DEFAULT_LAMBDAS) -> LossComponents:
    _check_dims(pred, gt)
    for c in candidates:
        _check_dims(c.mask, gt)
    bce = bce_loss(pred, gt)
    iou = soft_iou_loss(pred, gt)
    dice = dice_loss(pred, gt)
    ms = mask_score_loss(candidates, gt)
    return LossComponents(bce, iou, dice, ms, combine_losses(bce, iou, dice, ms, lambdas))
