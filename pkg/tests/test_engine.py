import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frpsim.allocator import SCRATCH_BASE, FrpConfig, ObjectMap, ObjectRecord
from frpsim.encoding import add, unflatten
from frpsim.engine import WIDTHS, Outcome, check_bounds, decode, load, store
from frpsim.errors import FaultClass, UnmappedId
from frpsim.rng import RandomSource


@pytest.fixture
def heap(src):
    return ObjectMap(FrpConfig(), src)


def record(heap, p):
    return heap.lookup(unflatten(p).id)


def test_decode_plain_word_passes_through(heap):
    assert decode(heap, 0x0000564745119010) == 0x0000564745119010


def test_decode_linear(heap):
    p = heap.malloc(10)
    assert decode(heap, add(p, 3)) == record(heap, p).arena_base + 3


def test_decode_stale_pointer_faults(heap):
    p = heap.malloc(10)
    heap.free(p)
    with pytest.raises(UnmappedId):
        decode(heap, p)


def test_check_bounds_examples():
    rec = ObjectRecord(id=1, arena_base=4096, size=10, zero=0, encoded_base=0)
    assert check_bounds(rec, 4096, 4106)
    assert not check_bounds(rec, 4104, 4108)
    assert not check_bounds(rec, 4095, 4097)


def test_check_bounds_matches_per_byte_oracle():
    rng = random.Random(4)
    for _ in range(100_000):
        base = rng.randrange(0, 200)
        size = rng.randrange(0, 40)
        lb = rng.randrange(0, 260)
        ub = lb + rng.randrange(0, 40)
        rec = ObjectRecord(id=1, arena_base=base, size=size, zero=0, encoded_base=0)
        oracle = all(base <= b < base + size for b in range(lb, ub))
        assert check_bounds(rec, lb, ub) == oracle


def test_store_load_round_trip(heap):
    p = heap.malloc(16)
    value = (0x1122334455667788).to_bytes(8, "little")
    assert store(heap, p, 8, value).ok
    out = load(heap, p, 8)
    assert out.kind is Outcome.Ok and out.data == value


def test_straddling_read_zeroes_suffix(heap):
    p = heap.malloc(10)
    assert store(heap, p, 8, bytes(range(1, 9))).ok
    assert store(heap, add(p, 8), 2, b"\x09\x0a").ok
    out = load(heap, add(p, 6), 8)
    assert out.kind is Outcome.OobReadZeroed
    assert out.data == b"\x07\x08\x09\x0a\x00\x00\x00\x00"
    assert out.zeroed == (False,) * 4 + (True,) * 4


def test_read_past_end_all_zero(heap):
    p = heap.malloc(10)
    heap.malloc(10)  # neighbour bytes must never leak
    store(heap, p, 8, b"\xff" * 8)
    out = load(heap, add(p, 10), 8)
    assert out.kind is Outcome.OobReadZeroed
    assert out.data == bytes(8) and all(out.zeroed)


def test_oob_store_faults_without_writing(heap):
    p = heap.malloc(10)
    store(heap, p, 8, b"\x11" * 8)
    before = bytes(heap._arena)
    out = store(heap, add(p, 8), 4, b"\xaa" * 4)
    assert out.kind is Outcome.Fault and out.fault is FaultClass.OobWrite
    assert out.data is None
    assert bytes(heap._arena) == before


def test_store_after_free_faults(heap):
    p = heap.malloc(10)
    heap.free(p)
    out = store(heap, p, 1, b"\x01")
    assert out.fault is FaultClass.UnmappedId
    assert load(heap, p, 1).fault is FaultClass.UnmappedId


def test_zero_size_object_always_out_of_bounds(heap):
    p = heap.malloc(0)
    assert load(heap, p, 1).kind is Outcome.OobReadZeroed
    assert store(heap, p, 1, b"\x01").fault is FaultClass.OobWrite


def test_plain_words_use_scratch(heap):
    assert store(heap, SCRATCH_BASE + 64, 4, b"abcd").ok
    out = load(heap, SCRATCH_BASE + 64, 4)
    assert out.ok and out.data == b"abcd"
    stray = load(heap, 0x0000564745119010, 8)
    assert stray.kind is Outcome.OobReadZeroed and stray.data == bytes(8)
    assert store(heap, 0x10, 8, bytes(8)).fault is FaultClass.OobWrite


def test_plain_word_cannot_reach_heap_bytes(heap):
    p = heap.malloc(16)
    store(heap, p, 8, b"\x77" * 8)
    base = record(heap, p).arena_base
    out = load(heap, base, 8)
    assert out.data == bytes(8)


def test_widths():
    assert WIDTHS == {1, 2, 4, 8, 16, 32}
    heap = ObjectMap(FrpConfig(), RandomSource.seeded(1))
    p = heap.malloc(64)
    for w in sorted(WIDTHS):
        assert load(heap, p, w).ok
    with pytest.raises(ValueError):
        load(heap, p, 3)
    with pytest.raises(ValueError):
        store(heap, p, 4, b"\x00")


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 5000), st.data())
def test_decode_linearity(size, data):
    heap = ObjectMap(FrpConfig(), RandomSource.seeded(size))
    p = heap.malloc(size)
    rec = record(heap, p)
    i = data.draw(st.integers(-rec.zero, (1 << 24) - 1 - rec.zero))
    assert decode(heap, add(p, i)) == rec.arena_base + i


def test_negative_index_never_reads_object(heap):
    for _ in range(500):
        p = heap.malloc(16)
        store(heap, p, 16, b"\x55" * 16)
        rec = record(heap, p)
        out = load(heap, add(p, -1), 1)
        assert not out.ok
        if rec.zero > 0:
            assert out.kind is Outcome.OobReadZeroed and out.data == b"\x00"
        else:
            assert out.fault is FaultClass.UnmappedId


def test_forged_words_fault():
    heap = ObjectMap(FrpConfig(), RandomSource.seeded(77))
    for _ in range(100):
        heap.malloc(64)
    rng = random.Random(78)
    hits = 0
    for _ in range(100_000):
        w = rng.getrandbits(64) | (1 << 63)
        if not load(heap, w, 8).faulted:
            hits += 1
    assert hits == 0


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 64), st.integers(-80, 80), st.sampled_from(sorted(WIDTHS)))
def test_failed_store_leaves_arena_identical(size, off, width):
    heap = ObjectMap(FrpConfig(), RandomSource.seeded(size))
    p = heap.malloc(size)
    heap.malloc(32)
    before = bytes(heap._arena)
    out = store(heap, add(p, off), width, b"\xcc" * width)
    if out.faulted:
        assert bytes(heap._arena) == before
    else:
        assert 0 <= off and off + width <= size
