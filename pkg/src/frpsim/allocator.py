"""Simulated heap that hands out fully randomized encoded pointers.

`ObjectMap` owns three pieces of sensitive state: the id -> record map,
the random source and the backing arena.  None of them is reachable through
an encoded or plain word; callers only ever see encoded base values.
"""

from collections import defaultdict
from dataclasses import dataclass, field

from .encoding import (
    ID_BITS,
    ID_MASK,
    OFFSET_BITS,
    OFFSET_CAPACITY,
    PAGE_MASK,
    flatten,
    unflatten,
)
from .errors import IdExhaustion, InvalidFree, LargeAllocation
from .rng import RandomSource

ARENA_BASE = 0x0000_5600_0000_0010
SCRATCH_BASE = 0x0000_7FF0_0000_0000
SCRATCH_SIZE = 1 << 16
MAX_ALLOCATION = OFFSET_CAPACITY - 4096
# Fixed high identifier bits used when fewer than 40 bits are randomized.
ID_PATTERN = 0xA5A5A5A5A5
MAX_ID_RETRIES = 128
_ENUMERATE_LIMIT = 1 << 20
# ids below this value yield words with a zero top-16 field
_RESERVED_IDS = 1 << (ID_BITS - 16)


@dataclass(frozen=True)
class FrpConfig:
    """Randomization knobs.

    ``id_random_bits`` below 40 selects scaled-entropy mode: the remaining
    high identifier bits are pinned to ``ID_PATTERN`` so every minted word is
    still encoded, and bypasses become observable at small scale.
    """

    id_random_bits: int = 40
    offset_random_bits: int = 12
    page_random: bool = False
    align_random: bool = False
    track_all_ids: bool = True
    alignment: int = 16

    def __post_init__(self):
        if not 0 <= self.id_random_bits <= ID_BITS:
            raise ValueError("id_random_bits must be within 0..40")
        if not 0 <= self.offset_random_bits <= 12:
            raise ValueError("offset_random_bits must be within 0..12")
        if self.alignment != 16:
            raise ValueError("only 16-byte alignment is modeled")

    @property
    def scaled(self):
        return self.id_random_bits < ID_BITS

    @property
    def page_bits(self):
        return 8 if self.page_random else 0

    @property
    def align_bits(self):
        return 4 if self.align_random else 0

    @property
    def randomized_bits(self):
        return (self.id_random_bits + self.offset_random_bits
                + self.page_bits + self.align_bits)

    @property
    def fixed_id_bits(self):
        return ID_PATTERN & ~((1 << self.id_random_bits) - 1) & ID_MASK

    def id_space_size(self):
        """Number of identifiers the allocator may mint under this config."""
        n = 1 << self.id_random_bits
        return n - _RESERVED_IDS if not self.scaled else n

    def to_dict(self):
        return {
            "id_random_bits": self.id_random_bits,
            "offset_random_bits": self.offset_random_bits,
            "page_random": self.page_random,
            "align_random": self.align_random,
            "track_all_ids": self.track_all_ids,
            "alignment": self.alignment,
        }


def scaled_config(bits, **kwargs):
    """Config with ``bits`` randomized bits split between id and offset."""
    if not 0 <= bits <= ID_BITS + 12:
        raise ValueError("bits out of range")
    offset_bits = min(bits // 2, 12)
    return FrpConfig(id_random_bits=bits - offset_bits,
                     offset_random_bits=offset_bits, **kwargs)


@dataclass(slots=True)
class ObjectRecord:
    id: int
    arena_base: int
    size: int
    zero: int
    encoded_base: int
    live: bool = True
    chunk: int = field(default=0, repr=False)

    @property
    def arena_end(self):
        return self.arena_base + self.size


def _round_chunk(size):
    return max(16, (size + 15) & ~15)


class ObjectMap:
    """The object map plus the arena and random source backing it."""

    def __init__(self, config=None, source=None):
        self.config = config if config is not None else FrpConfig()
        self.source = source if source is not None else RandomSource.system()
        self.live = {}
        self.consumed = set() if self.config.track_all_ids else None
        self._arena = bytearray()
        self._cursor = 0
        self._free_chunks = defaultdict(list)
        self._scratch = None
        self.free_hooks = []

    def __len__(self):
        return len(self.live)

    def __contains__(self, id_):
        return id_ in self.live

    # -- identifiers -----------------------------------------------------

    def _used(self):
        return self.consumed if self.consumed is not None else self.live

    def _draw_id(self):
        cfg = self.config
        return cfg.fixed_id_bits | self.source.next_bits(cfg.id_random_bits)

    def _id_allowed(self, id_, used):
        if not self.config.scaled and id_ < _RESERVED_IDS:
            return False
        return id_ not in used

    def assign_id(self):
        """Fresh identifier never seen in the live map (or ever, if tracking)."""
        used = self._used()
        for _ in range(MAX_ID_RETRIES):
            id_ = self._draw_id()
            if self._id_allowed(id_, used):
                return id_
        cfg = self.config
        available = cfg.id_space_size() - len(used)
        if available <= 0:
            raise IdExhaustion(
                f"all {cfg.id_space_size()} identifiers are in use")
        if cfg.id_space_size() <= _ENUMERATE_LIMIT:
            start = 0 if cfg.scaled else _RESERVED_IDS
            free = [cfg.fixed_id_bits | r
                    for r in range(start, 1 << cfg.id_random_bits)
                    if (cfg.fixed_id_bits | r) not in used]
            return free[self.source.below(len(free))]
        while True:
            id_ = self._draw_id()
            if self._id_allowed(id_, used):
                return id_

    # -- allocation ------------------------------------------------------

    def _reserve(self, size):
        chunk = _round_chunk(size)
        reuse = self._free_chunks.get(chunk)
        if reuse:
            return ARENA_BASE + reuse.pop(), chunk
        offset = self._cursor
        self._cursor += chunk
        self._arena.extend(bytes(chunk))
        return ARENA_BASE + offset, chunk

    def _draw_zero(self, arena_base, size):
        cfg, src = self.config, self.source
        low = arena_base & PAGE_MASK
        if cfg.align_random:
            low = (low & ~0xF) | src.next_bits(4)
        if cfg.page_random:
            low = (low & 0xF) | (src.next_bits(8) << 4)
        high_max = (OFFSET_CAPACITY - low - size) >> 12
        legal = min(1 << cfg.offset_random_bits, high_max + 1)
        return (src.below(legal) << 12) | low

    def malloc(self, size):
        if size < 0:
            raise ValueError("size must be non-negative")
        if size > MAX_ALLOCATION:
            raise LargeAllocation(
                f"{size} bytes exceeds the {MAX_ALLOCATION}-byte encodable limit")
        id_ = self.assign_id()
        arena_base, chunk = self._reserve(size)
        zero = self._draw_zero(arena_base, size)
        rec = ObjectRecord(id_, arena_base, size, zero, flatten((id_, zero)),
                           chunk=chunk)
        self.live[id_] = rec
        if self.consumed is not None:
            self.consumed.add(id_)
        return rec.encoded_base

    def free(self, word):
        id_, _ = unflatten(word)
        rec = self.live.get(id_)
        if rec is None:
            raise InvalidFree(f"no live object for {word:#018x}")
        if word != rec.encoded_base:
            raise InvalidFree(f"{word:#018x} is not the base of its object")
        del self.live[id_]
        rec.live = False
        self._free_chunks[rec.chunk].append(rec.arena_base - ARENA_BASE)
        for hook in self.free_hooks:
            hook(rec)

    def lookup(self, id_):
        return self.live.get(id_)

    # -- backing storage (package internal) ----------------------------------

    def _read(self, addr, n):
        off = addr - ARENA_BASE
        return bytes(self._arena[off:off + n])

    def _write(self, addr, data):
        off = addr - ARENA_BASE
        self._arena[off:off + len(data)] = data

    @property
    def scratch(self):
        if self._scratch is None:
            self._scratch = bytearray(SCRATCH_SIZE)
        return self._scratch

    @property
    def arena_size(self):
        return self._cursor


# Free-function spellings of the allocator operations.
def assign_id(heap):
    return heap.assign_id()


def frp_malloc(heap, size):
    return heap.malloc(size)


def frp_free(heap, word):
    heap.free(word)


def lookup(heap, id_):
    return heap.lookup(id_)
