import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from memnav.errors import DomainError
from memnav.masks import BinaryMask, MaskCandidate, SoftMask
from memnav.metrics import (MetricReport, combine_losses, contour_f, jf_mean, loss_components,
                            parse_metrics_csv, region_j)

from oracles import f_oracle, j_oracle


def mask_from(coords, w=4, h=4):
    bits = np.zeros((h, w), bool)
    for r, c in coords:
        bits[r, c] = True
    return BinaryMask(bits)


def test_region_j_examples():
    sq = BinaryMask.from_rect(8, 8, 1, 1, 3, 3)
    assert region_j(sq, sq) == 1.0
    pred = mask_from([(0, 0), (0, 1)])
    gt = mask_from([(0, 1), (0, 2)])
    assert region_j(pred, gt) == pytest.approx(1 / 3, abs=1e-12)
    assert region_j(BinaryMask.empty(4, 4), gt) == 0.0
    assert region_j(BinaryMask.empty(4, 4), BinaryMask.empty(4, 4)) == 1.0
    assert region_j(gt, BinaryMask.empty(4, 4)) == 0.0


def test_dimension_mismatch():
    with pytest.raises(DomainError):
        region_j(BinaryMask.empty(4, 4), BinaryMask.empty(4, 5))
    with pytest.raises(DomainError):
        contour_f(BinaryMask.empty(4, 4), BinaryMask.empty(5, 4))


def test_contour_f_examples():
    sq = BinaryMask.from_rect(8, 8, 1, 1, 3, 3)
    shifted = BinaryMask.from_rect(8, 8, 2, 1, 3, 3)
    assert contour_f(sq, sq) == 1.0
    # values frozen from the pixel-enumeration oracle
    assert contour_f(sq, shifted, 1) == 1.0
    assert contour_f(sq, shifted, 0) == 0.5
    assert contour_f(BinaryMask.empty(8, 8), sq) == 0.0
    assert contour_f(BinaryMask.empty(8, 8), BinaryMask.empty(8, 8)) == 1.0


def test_contour_border_pixels_count_as_boundary():
    full = BinaryMask(np.ones((3, 3), bool))
    inner = BinaryMask.from_rect(3, 3, 1, 1, 1, 1)
    # full mask: all 8 border pixels + no interior-only pixel except the centre
    assert contour_f(full, inner, 0) == pytest.approx(f_oracle(full.bits.tolist(), inner.bits.tolist(), 0))


def random_mask(rng, h, w):
    return BinaryMask(rng.random((h, w)) < rng.uniform(0.05, 0.7))


@pytest.mark.parametrize("seed", range(5))
def test_metric_oracle_agreement(seed):
    rng = np.random.default_rng(seed)
    for _ in range(20):
        h, w = rng.integers(1, 17, size=2)
        a, b = random_mask(rng, h, w), random_mask(rng, h, w)
        tol = int(rng.integers(0, 3))
        assert region_j(a, b) == float(j_oracle(a.bits.tolist(), b.bits.tolist()))
        assert contour_f(a, b, tol) == pytest.approx(f_oracle(a.bits.tolist(), b.bits.tolist(), tol), abs=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_symmetry(seed):
    rng = np.random.default_rng(seed)
    a, b = random_mask(rng, 6, 7), random_mask(rng, 6, 7)
    assert region_j(a, b) == region_j(b, a)
    assert contour_f(a, b) == pytest.approx(contour_f(b, a), abs=1e-15)
    assert 0.0 <= region_j(a, b) <= 1.0


def test_jf_mean_examples():
    r = jf_mean([(2, 0.5, 0.7)])
    assert r.jf == pytest.approx(0.6)
    r = jf_mean([(2, 1, 1), (3, 0, 0)])
    assert (r.j, r.f, r.jf) == (0.5, 0.5, 0.5)
    # frame 1 is given and never scored
    assert jf_mean([(1, 0, 0), (2, 1, 1)]).jf == 1.0
    with pytest.raises(DomainError):
        jf_mean([])
    with pytest.raises(DomainError):
        jf_mean([(1, 0.3, 0.3)])


def test_jf_mean_three_frames_against_oracle():
    gt = [BinaryMask.from_rect(6, 6, 1, 1, 3, 3), BinaryMask.from_rect(6, 6, 2, 1, 3, 3),
          BinaryMask.empty(6, 6)]
    pred = [BinaryMask.from_rect(6, 6, 1, 1, 3, 3), BinaryMask.from_rect(6, 6, 1, 1, 3, 3),
            BinaryMask.from_rect(6, 6, 0, 0, 2, 2)]
    rows = [(t + 2, region_j(p, g), contour_f(p, g)) for t, (p, g) in enumerate(zip(pred, gt))]
    rep = jf_mean(rows)
    js = [float(j_oracle(p.bits.tolist(), g.bits.tolist())) for p, g in zip(pred, gt)]
    fs = [f_oracle(p.bits.tolist(), g.bits.tolist(), 1) for p, g in zip(pred, gt)]
    assert rep.j == pytest.approx(sum(js) / 3, abs=1e-12)
    assert rep.f == pytest.approx(sum(fs) / 3, abs=1e-12)
    assert rep.jf == pytest.approx((rep.j + rep.f) / 2, abs=1e-12)


def test_metrics_csv_round_trip():
    rep = jf_mean([(2, 1.0, 0.5), (3, 0.25, 0.75)])
    text = rep.to_csv()
    assert text.splitlines()[0] == "frame,j,f"
    assert text.splitlines()[-1] == "ALL,0.625000,0.625000"
    back = parse_metrics_csv(text)
    assert back.per_frame == rep.per_frame
    assert isinstance(back, MetricReport)


# -- losses --------------------------------------------------------------------

def half_mask():
    bits = np.zeros((4, 4), bool)
    bits[:2] = True
    return BinaryMask(bits)


def test_perfect_prediction_zero_losses():
    gt = half_mask()
    cands = [MaskCandidate(gt, 1.0, 1.0), MaskCandidate(BinaryMask.empty(4, 4), 0.0, 1.0)]
    lc = loss_components(SoftMask.from_binary(gt), gt, cands)
    assert lc.iou == 0.0 and lc.dice == 0.0 and lc.mask_score == 0.0
    assert lc.bce == pytest.approx(-math.log(1 - 1e-7), rel=1e-6)


def test_bce_uniform_half():
    gt = half_mask()
    lc = loss_components(SoftMask(np.full((4, 4), 0.5)), gt, [MaskCandidate(gt, 1.0, 1.0)])
    assert lc.bce == pytest.approx(math.log(2), abs=1e-9)


def test_lambda4_weight():
    assert combine_losses(0.0, 0.0, 0.0, 0.1) == 1.5


def test_mask_score_is_mse():
    gt = half_mask()
    # true IoUs: 1.0 and 0.0
    cands = [MaskCandidate(gt, 0.8, 1.0), MaskCandidate(BinaryMask.empty(4, 4), 0.4, 1.0)]
    lc = loss_components(SoftMask.from_binary(gt), gt, cands)
    assert lc.mask_score == pytest.approx((0.04 + 0.16) / 2, abs=1e-15)


def test_loss_errors():
    gt = half_mask()
    with pytest.raises(DomainError):
        loss_components(SoftMask.from_binary(gt), gt, [])


def test_empty_conventions():
    empty = BinaryMask.empty(3, 3)
    lc = loss_components(SoftMask(np.zeros((3, 3))), empty, [MaskCandidate(empty, 1.0, 0.0)])
    assert lc.iou == 0.0 and lc.dice == 0.0 and lc.mask_score == 0.0


@pytest.mark.parametrize("seed", range(30))
def test_dice_iou_relation_on_hard_masks(seed):
    rng = np.random.default_rng(seed)
    p, g = random_mask(rng, 8, 8), random_mask(rng, 8, 8)
    if p.is_empty() and g.is_empty():
        return
    lc = loss_components(SoftMask.from_binary(p), g, [MaskCandidate(p, 0.5, 0.5)])
    j = region_j(p, g)
    assert 1 - lc.dice == pytest.approx(2 * j / (1 + j), abs=1e-9)
    assert lc.iou == pytest.approx(1 - j, abs=1e-12)


@given(st.lists(st.floats(0, 10), min_size=4, max_size=4), st.integers(0, 3), st.floats(0, 5))
def test_total_monotone(components, idx, bump):
    base = combine_losses(*components)
    bumped = list(components)
    bumped[idx] += bump
    assert combine_losses(*bumped) >= base
