"""Pointer decoding, bounds checking and the load/store error policy.

Error policy:

* out-of-bounds bytes of a read are returned as zero (failure-oblivious);
* an out-of-bounds write aborts the whole store, nothing is committed;
* any access through an identifier with no live object faults, reads
  included.
"""

import enum
from dataclasses import dataclass

from .allocator import SCRATCH_BASE, SCRATCH_SIZE
from .encoding import OFFSET_BITS, OFFSET_MASK, TAG_SHIFT, WORD_MASK
from .errors import FaultClass, UnmappedId

WIDTHS = frozenset({1, 2, 4, 8, 16, 32})


class Outcome(enum.Enum):
    Ok = "Ok"
    OobReadZeroed = "OobReadZeroed"
    Fault = "Fault"


@dataclass(frozen=True)
class AccessOutcome:
    kind: Outcome
    data: bytes | None = None
    fault: FaultClass | None = None
    zeroed: tuple | None = None
    address: int | None = None

    @property
    def ok(self):
        return self.kind is Outcome.Ok

    @property
    def faulted(self):
        return self.kind is Outcome.Fault

    @classmethod
    def failure(cls, fault):
        return _FAILURES[fault]


_FAILURES = {f: AccessOutcome(Outcome.Fault, fault=f) for f in FaultClass}


def resolve(heap, word):
    """Decode ``word`` and return ``(address, record)``.

    ``record`` is None for plain (non-encoded) words.
    """
    word &= WORD_MASK
    if word >> TAG_SHIFT == 0:
        return word, None
    rec = heap.live.get(word >> OFFSET_BITS)
    if rec is None:
        raise UnmappedId(f"no live object for {word:#018x}")
    return rec.arena_base + ((word & OFFSET_MASK) - rec.zero), rec


def decode(heap, word):
    return resolve(heap, word)[0]


def check_bounds(rec, lb, ub):
    """True iff ``[lb, ub)`` lies wholly inside the object.

    An empty interval is trivially contained.
    """
    return lb >= ub or (lb >= rec.arena_base and ub <= rec.arena_base + rec.size)


def _check_width(width):
    if width not in WIDTHS:
        raise ValueError(f"unsupported access width {width}")


def _touch(caches, rec):
    for cache in caches:
        cache.access(rec.id, rec.size)


def load(heap, word, width, caches=()):
    _check_width(width)
    try:
        addr, rec = resolve(heap, word)
    except UnmappedId:
        return AccessOutcome.failure(FaultClass.UnmappedId)
    end = addr + width
    if rec is None:
        base, limit = SCRATCH_BASE, SCRATCH_BASE + SCRATCH_SIZE
    else:
        _touch(caches, rec)
        base, limit = rec.arena_base, rec.arena_base + rec.size
    if addr >= base and end <= limit:
        if rec is None:
            off = addr - SCRATCH_BASE
            data = bytes(heap.scratch[off:off + width])
        else:
            data = heap._read(addr, width)
        return AccessOutcome(Outcome.Ok, data=data, address=addr)
    lo, hi = max(addr, base), min(end, limit)
    buf = bytearray(width)
    if lo < hi:
        if rec is None:
            buf[lo - addr:hi - addr] = heap.scratch[lo - SCRATCH_BASE:hi - SCRATCH_BASE]
        else:
            buf[lo - addr:hi - addr] = heap._read(lo, hi - lo)
    zeroed = tuple(not (lo <= a < hi) for a in range(addr, end))
    return AccessOutcome(Outcome.OobReadZeroed, data=bytes(buf), zeroed=zeroed,
                         address=addr)


def store(heap, word, width, value, caches=()):
    _check_width(width)
    value = bytes(value)
    if len(value) != width:
        raise ValueError(f"store of {len(value)} bytes with width {width}")
    try:
        addr, rec = resolve(heap, word)
    except UnmappedId:
        return AccessOutcome.failure(FaultClass.UnmappedId)
    if rec is None:
        if addr < SCRATCH_BASE or addr + width > SCRATCH_BASE + SCRATCH_SIZE:
            return AccessOutcome.failure(FaultClass.OobWrite)
        off = addr - SCRATCH_BASE
        heap.scratch[off:off + width] = value
        return AccessOutcome(Outcome.Ok, address=addr)
    _touch(caches, rec)
    if not check_bounds(rec, addr, addr + width):
        return AccessOutcome.failure(FaultClass.OobWrite)
    heap._write(addr, value)
    return AccessOutcome(Outcome.Ok, address=addr)
