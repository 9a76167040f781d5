# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: the set-associative LRU core and the guess scanner."""

from cpython.mem cimport PyMem_Free, PyMem_Malloc
from libc.stdint cimport int64_t, uint8_t, uint64_t
from libc.string cimport memset

import numpy as np


cdef class LRUCore:
    """Set-associative LRU tag store, one timestamp per way."""

    cdef uint64_t *tags
    cdef uint64_t *stamps
    cdef uint8_t *valid
    cdef readonly Py_ssize_t sets
    cdef readonly Py_ssize_t ways
    cdef uint64_t clock

    def __cinit__(self, Py_ssize_t sets, Py_ssize_t ways):
        if sets <= 0 or ways <= 0:
            raise ValueError("sets and ways must be positive")
        self.sets = sets
        self.ways = ways
        self.clock = 0
        n = sets * ways
        self.tags = <uint64_t *> PyMem_Malloc(n * sizeof(uint64_t))
        self.stamps = <uint64_t *> PyMem_Malloc(n * sizeof(uint64_t))
        self.valid = <uint8_t *> PyMem_Malloc(n * sizeof(uint8_t))
        if not self.tags or not self.stamps or not self.valid:
            raise MemoryError()
        memset(self.tags, 0, n * sizeof(uint64_t))
        memset(self.stamps, 0, n * sizeof(uint64_t))
        memset(self.valid, 0, n * sizeof(uint8_t))

    def __dealloc__(self):
        PyMem_Free(self.tags)
        PyMem_Free(self.stamps)
        PyMem_Free(self.valid)

    cdef inline bint _access(self, uint64_t tag) noexcept nogil:
        cdef Py_ssize_t base = <Py_ssize_t> (tag % <uint64_t> self.sets) * self.ways
        cdef Py_ssize_t i, victim = -1
        cdef uint64_t oldest = 0
        self.clock += 1
        for i in range(base, base + self.ways):
            if self.valid[i] and self.tags[i] == tag:
                self.stamps[i] = self.clock
                return True
        for i in range(base, base + self.ways):
            if not self.valid[i]:
                victim = i
                break
            if victim < 0 or self.stamps[i] < oldest:
                victim = i
                oldest = self.stamps[i]
        self.tags[victim] = tag
        self.valid[victim] = 1
        self.stamps[victim] = self.clock
        return False

    def access(self, uint64_t tag):
        return self._access(tag)

    def invalidate(self, uint64_t tag):
        cdef Py_ssize_t base = <Py_ssize_t> (tag % <uint64_t> self.sets) * self.ways
        cdef Py_ssize_t i
        for i in range(base, base + self.ways):
            if self.valid[i] and self.tags[i] == tag:
                self.valid[i] = 0
                return True
        return False

    def run(self, uint64_t[::1] trace):
        """Access every tag in order; returns a uint8 hit mask."""
        cdef Py_ssize_t n = trace.shape[0], k
        out = np.empty(n, dtype=np.uint8)
        cdef uint8_t[::1] hits = out
        with nogil:
            for k in range(n):
                hits[k] = self._access(trace[k])
        return out

    def resident(self, Py_ssize_t set_index):
        """Tags resident in one set, most recently used first."""
        cdef Py_ssize_t base = set_index * self.ways, i
        found = []
        for i in range(base, base + self.ways):
            if self.valid[i]:
                found.append((self.stamps[i], self.tags[i]))
        found.sort(reverse=True)
        return [t for _, t in found]


def first_hit(uint64_t[::1] words, uint64_t[::1] ids, int64_t[::1] zeros,
              int64_t[::1] sizes, uint8_t[::1] targets, int64_t width):
    """Index of the first word whose access overlaps a target object.

    ``ids`` must be sorted ascending; ``zeros``, ``sizes`` and ``targets``
    are parallel to it.  Returns -1 when no word hits.
    """
    cdef Py_ssize_t n = words.shape[0], m = ids.shape[0], k, lo, hi, mid
    cdef uint64_t w, id_
    cdef int64_t rel
    cdef Py_ssize_t found = -1
    with nogil:
        for k in range(n):
            w = words[k]
            if (w >> 48) == 0:
                continue
            id_ = w >> 24
            lo = 0
            hi = m
            while lo < hi:
                mid = (lo + hi) >> 1
                if ids[mid] < id_:
                    lo = mid + 1
                else:
                    hi = mid
            if lo == m or ids[lo] != id_ or not targets[lo]:
                continue
            rel = <int64_t> (w & 0xFFFFFF) - zeros[lo]
            if rel < sizes[lo] and rel + width > 0:
                found = k
                break
    return found
