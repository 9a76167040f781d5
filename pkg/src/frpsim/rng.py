"""Randomness for identifier and offset randomization.

Two modes are supported:

* ``RandomSource.system()`` draws from the operating system CSPRNG
  (``secrets`` / ``os.urandom``).  Use this for anything security facing.
* ``RandomSource.seeded(seed)`` uses NumPy's PCG64 bit generator keyed by
  ``SeedSequence(seed)``.  Only raw 64-bit outputs are consumed, which NumPy
  guarantees to be stable across platforms and releases, so seeded runs are
  reproducible.  PCG64 is *not* cryptographically secure.
"""

import os
import secrets

import numpy as np

from .errors import EntropySourceError

_U64 = (1 << 64) - 1


class RandomSource:
    def __init__(self, seed=None, spawn_key=()):
        self.seed = seed
        self.spawn_key = tuple(spawn_key)
        if seed is None:
            self._bitgen = None
            try:
                os.urandom(8)
            except (NotImplementedError, OSError) as exc:
                raise EntropySourceError("system entropy source unavailable") from exc
        else:
            if not 0 <= seed <= _U64:
                raise ValueError("seed must be an unsigned 64-bit integer")
            ss = np.random.SeedSequence(seed, spawn_key=self.spawn_key)
            self._bitgen = np.random.PCG64(ss)

    @classmethod
    def seeded(cls, seed):
        return cls(int(seed))

    @classmethod
    def system(cls):
        return cls(None)

    @property
    def is_seeded(self):
        return self._bitgen is not None

    def next_bits(self, n):
        """Uniform integer in ``[0, 2**n)`` for ``0 <= n <= 64``."""
        if not 0 <= n <= 64:
            raise ValueError("bit count must be within 0..64")
        if n == 0:
            return 0
        if self._bitgen is None:
            return secrets.randbits(n)
        return int(self._bitgen.random_raw()) >> (64 - n)

    def below(self, bound):
        """Uniform integer in ``[0, bound)`` by rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        if bound == 1:
            return 0
        nbits = (bound - 1).bit_length()
        while True:
            v = self.next_bits(nbits)
            if v < bound:
                return v

    def bits_array(self, n, size):
        """``size`` independent draws of ``next_bits(n)`` as a uint64 array."""
        if not 0 <= n <= 64:
            raise ValueError("bit count must be within 0..64")
        if n == 0:
            return np.zeros(size, dtype=np.uint64)
        if self._bitgen is None:
            raw = np.frombuffer(os.urandom(8 * size), dtype="<u8").astype(np.uint64)
        else:
            raw = self._bitgen.random_raw(size)
        return raw >> np.uint64(64 - n)

    def spawn(self, index):
        """Independent child source derived from this one by ``index``."""
        if self._bitgen is None:
            return RandomSource.system()
        return RandomSource(self.seed, self.spawn_key + (int(index),))

    def __repr__(self):
        if self._bitgen is None:
            return "RandomSource.system()"
        return f"RandomSource(seed={self.seed}, spawn_key={self.spawn_key})"
