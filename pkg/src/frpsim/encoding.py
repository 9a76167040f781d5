"""Flattened 64-bit pointer encoding.

An encoded pointer is a plain machine word.  The 24 least significant bits
hold the byte offset and the remaining 40 bits hold the object identifier::

    63                    24 23          0
    +-----------------------+------------+
    |          id           |   offset   |
    +-----------------------+------------+

Words whose top 16 bits are all zero are ordinary (non-encoded) addresses.
Words are represented as Python ints in ``[0, 2**64)``.
"""

from typing import NamedTuple

OFFSET_BITS = 24
ID_BITS = 64 - OFFSET_BITS
OFFSET_CAPACITY = 1 << OFFSET_BITS  # 16 MiB, glibc's MMAP_THRESHOLD_MAX
OFFSET_MASK = OFFSET_CAPACITY - 1
ID_MASK = (1 << ID_BITS) - 1
WORD_MASK = (1 << 64) - 1
PAGE_MASK = 0xFFF
TAG_SHIFT = 48


class IdOffsetPair(NamedTuple):
    id: int
    offset: int


def flatten(pair):
    """Pack an ``(id, offset)`` pair into a 64-bit word."""
    id_, offset = pair
    if not 0 <= id_ <= ID_MASK:
        raise ValueError(f"id out of range: {id_:#x}")
    if not 0 <= offset <= OFFSET_MASK:
        raise ValueError(f"offset out of range: {offset:#x}")
    return (id_ << OFFSET_BITS) | offset


def unflatten(word):
    word &= WORD_MASK
    return IdOffsetPair(word >> OFFSET_BITS, word & OFFSET_MASK)


def is_encoded(word):
    """True iff any of the 16 most significant bits is set."""
    return ((word & WORD_MASK) >> TAG_SHIFT) != 0


def to_signed(value):
    value &= WORD_MASK
    return value - (1 << 64) if value >> 63 else value


def diff(p, q):
    """Two's-complement difference ``q - p`` as a signed 64-bit integer."""
    return to_signed(q - p)


def add(p, k):
    """Unchecked 64-bit pointer arithmetic ``p + k`` (wraps modulo 2**64)."""
    return (p + k) & WORD_MASK
