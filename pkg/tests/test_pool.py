import itertools

import numpy as np
import pytest

from memnav.banks import FifoBank
from memnav.errors import DomainError
from memnav.numerics import pe_improved
from memnav.pool import GroupPlan, MemoryPool, pool_assemble

from conftest import entry, rand_unit, unit


def anchor():
    return entry(1, unit(0), anchor=True)


def test_admit_clear_pass_and_conjunction():
    pool = MemoryPool(anchor(), 0.5, 0.5)
    assert pool.admit(entry(2, conf=0.9, obj=0.9)).admitted
    assert not pool.admit(entry(3, conf=0.9, obj=0.3)).admitted


def test_gate_truth_table():
    for conf_ok, obj_ok in itertools.product([True, False], repeat=2):
        pool = MemoryPool(anchor(), 0.5, 0.5)
        d = pool.admit(entry(2, conf=0.6 if conf_ok else 0.4, obj=0.6 if obj_ok else 0.4))
        assert d.admitted == (conf_ok and obj_ok)
        assert d.predicted_iou == (0.6 if conf_ok else 0.4)


def test_anchor_bypasses_gate():
    pool = MemoryPool(entry(1, unit(0), conf=0.0, obj=0.0, anchor=True), 0.9, 0.9)
    assert pool.entries[0].frame_index == 1


def test_overflow_keeps_anchor():
    pool = MemoryPool(anchor(), 0.0, 0.0, max_size=5)
    for t in range(2, 20):
        pool.admit(entry(t))
    assert [e.frame_index for e in pool.entries] == [1, 16, 17, 18, 19]
    assert pool.evictions == 14


def test_sample_large_pool():
    pool = MemoryPool(anchor(), 0.0, 0.0)
    for t in range(2, 21):
        pool.admit(entry(t))
    g1, g2 = pool.sample(GroupPlan(2, 6))
    assert [e.frame_index for e in g1] == list(range(15, 21))
    assert [e.frame_index for e in g2] == list(range(1, 7))


def test_sample_small_pool():
    pool = MemoryPool(anchor(), 0.0, 0.0)
    for t in (2, 3, 4):
        pool.admit(entry(t))
    g1, g2 = pool.sample(GroupPlan(2, 6))
    assert [e.frame_index for e in g1] == [e.frame_index for e in g2] == [1, 2, 3, 4]


def test_anchor_always_in_early_group():
    rng = np.random.default_rng(0)
    pool = MemoryPool(anchor(), 0.0, 0.0, max_size=30)
    for t in range(2, 200):
        if rng.random() < 0.7:
            pool.admit(entry(t))
        assert pool.sample(GroupPlan(2, 6))[1][0].frame_index == 1


def test_assemble_singleton():
    e = entry(1, unit(0), anchor=True)
    ctx = pool_assemble([[e]], 40)
    assert ctx.weights == [1.0]
    np.testing.assert_array_equal(ctx.items[0].encoding, pe_improved(40, 1))


def test_assemble_idempotent_fusion(rng):
    es = [entry(t, rand_unit(rng)) for t in (1, 2, 3)]
    one = pool_assemble([es], 10, pe_scale=0.0)
    two = pool_assemble([es, es], 10, pe_scale=0.0)
    np.testing.assert_allclose(one.aggregated_feature, two.aggregated_feature, atol=1e-12)


def test_clamp_propagates():
    a = pool_assemble([[entry(5)]], 205)
    b = pool_assemble([[entry(5)]], 133)
    np.testing.assert_array_equal(a.items[0].encoding, b.items[0].encoding)
    np.testing.assert_array_equal(a.aggregated_feature, b.aggregated_feature)


def test_fusion_weights_per_group():
    g1 = [entry(t) for t in (5, 6, 7)]
    g2 = [entry(1, anchor=True), entry(2)]
    ctx = pool_assemble([g1, g2], 8)
    assert ctx.weights == pytest.approx([1 / 6] * 3 + [1 / 4] * 2)
    per_group = [sum(ctx.weights[:3]), sum(ctx.weights[3:])]
    assert per_group == pytest.approx([0.5, 0.5], abs=1e-15)


def test_anchor_is_encoded_unlike_fifo():
    e = entry(1, unit(0), anchor=True)
    pool_ctx = pool_assemble([[e]], 9)
    fifo_ctx = FifoBank(e).assemble(9)
    assert np.any(pool_ctx.items[0].encoding != 0)
    np.testing.assert_array_equal(fifo_ctx.items[0].encoding, 0)


def test_retention_versus_fifo():
    # pre-occlusion target frames survive in the pool; FIFO forgets them after 7 other stores
    target, other = unit(0), unit(1)
    pool = MemoryPool(entry(1, target, anchor=True), 0.7, 0.7)
    fifo = FifoBank(entry(1, target, anchor=True))
    for t in range(2, 10):
        pool.admit(entry(t, target, conf=0.95, obj=0.95))
        fifo.update(entry(t, target, conf=0.95, obj=0.95))
    for t in range(10, 30):
        e = entry(t, other, conf=0.75, obj=0.5)
        pool.admit(e)
        fifo.update(e)
        if t - 10 + 1 >= 7:
            assert all(x.frame_index >= 10 for x in fifo.recent)
    assert [e.frame_index for e in pool.entries] == list(range(1, 10))
    for e in pool.entries[1:]:
        d = pool.decisions[e.frame_index]
        assert d.predicted_iou >= 0.7 and d.object_score >= 0.7


def test_plan_validation():
    with pytest.raises(DomainError):
        GroupPlan(0, 6)
    pool = MemoryPool(anchor(), max_size=10)
    with pytest.raises(DomainError):
        pool.check_plan(GroupPlan(2, 6))


def test_extra_groups():
    pool = MemoryPool(anchor(), 0.0, 0.0)
    for t in range(2, 41):
        pool.admit(entry(t))
    groups = pool.sample(GroupPlan(3, 4))
    assert len(groups) == 3
    assert [e.frame_index for e in groups[2]] == [19, 20, 21, 22]
