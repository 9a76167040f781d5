"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Same interface and same results; used when the extension is not built or
when ``FRPSIM_PURE_PYTHON`` is set.
"""

from collections import OrderedDict

import numpy as np


class LRUCore:
    def __init__(self, sets, ways):
        if sets <= 0 or ways <= 0:
            raise ValueError("sets and ways must be positive")
        self.sets = sets
        self.ways = ways
        self._sets = [OrderedDict() for _ in range(sets)]

    def access(self, tag):
        s = self._sets[tag % self.sets]
        if tag in s:
            s.move_to_end(tag)
            return True
        if len(s) >= self.ways:
            s.popitem(last=False)
        s[tag] = None
        return False

    def invalidate(self, tag):
        s = self._sets[tag % self.sets]
        if tag in s:
            del s[tag]
            return True
        return False

    def run(self, trace):
        access = self.access
        return np.fromiter((access(t) for t in np.asarray(trace).tolist()),
                           dtype=np.uint8, count=len(trace))

    def resident(self, set_index):
        return list(reversed(self._sets[set_index]))


def first_hit(words, ids, zeros, sizes, targets, width):
    table = {
        i: (z, s)
        for i, z, s, t in zip(ids.tolist(), zeros.tolist(), sizes.tolist(),
                               targets.tolist())
        if t
    }
    for k, w in enumerate(np.asarray(words).tolist()):
        if w >> 48 == 0:
            continue
        entry = table.get(w >> 24)
        if entry is None:
            continue
        rel = (w & 0xFFFFFF) - entry[0]
        if rel < entry[1] and rel + width > 0:
            return k
    return -1
