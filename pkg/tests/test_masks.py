import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from memnav.errors import DomainError, FormatError
from memnav.masks import BinaryMask, MaskCandidate, SoftMask, rle_decode, rle_encode


def test_all_zero_mask_single_run():
    assert rle_encode(BinaryMask.empty(4, 4)) == b"RLE1 4 4\n16\n"


def test_all_one_mask_leading_zero_run():
    assert rle_encode(BinaryMask(np.ones((4, 4), bool))) == b"RLE1 4 4\n0,16\n"


def test_rect_and_row_major_layout():
    m = BinaryMask.from_rect(4, 3, 1, 1, 2, 1)
    assert rle_encode(m) == b"RLE1 4 3\n5,2,5\n"
    assert rle_decode(rle_encode(m)) == m


def test_round_trip_1000_seeds():
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        m = BinaryMask(rng.random((16, 16)) < rng.random())
        enc = rle_encode(m)
        dec = rle_decode(enc)
        assert dec == m
        assert rle_encode(dec) == enc


@given(arrays(bool, st.tuples(st.integers(1, 9), st.integers(1, 9))))
def test_round_trip_property(bits):
    m = BinaryMask(bits)
    assert rle_decode(rle_encode(m)) == m


@pytest.mark.parametrize("data, offset", [
    (b"RLE1 2 2\n5\n", 9),           # run exceeds area
    (b"RLE1 2 2\n1,2\n", 13),        # truncated: covers 3 of 4
    (b"RLE1 2 2\n1,x,3\n", 11),      # bad token
    (b"RLE2 2 2\n4\n", 0),           # bad magic
    (b"RLE1 2 2", 8),                # no header newline
    (b"RLE1 2 2\n", 9),              # no runs
    (b"RLE1 2 2\n1,0,3\n", 11),      # interior zero run
])
def test_decode_errors_report_offset(data, offset):
    with pytest.raises(FormatError) as exc:
        rle_decode(data)
    assert exc.value.offset == offset
    assert f"byte {offset}" in str(exc.value)


def test_mask_is_immutable():
    m = BinaryMask.empty(3, 3)
    with pytest.raises(ValueError):
        m.bits[0, 0] = True


def test_soft_mask_range_checked():
    with pytest.raises(DomainError):
        SoftMask(np.full((2, 2), 1.5))


def test_candidate_scores_checked():
    with pytest.raises(DomainError):
        MaskCandidate(BinaryMask.empty(2, 2), 1.2, 0.5)
