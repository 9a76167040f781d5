"""Translation cache model: set-associative LRU keyed by object id.

The set index is ``id % set_count``; identifiers are random already so no
further hashing is applied.  The cycle model is linear: every lookup pays
``hit_latency`` and a miss additionally pays ``miss_penalty`` for the walk of
the object map in memory.
"""

from dataclasses import asdict, dataclass

from . import kernels

TABLE_SIZES = (128, 512, 1024, 4096)


@dataclass(frozen=True)
class CacheConfig:
    entries: int = 4096
    associativity: int = 8
    entry_bytes: int = 16
    hit_latency: int = 2
    miss_penalty: int = 100

    def __post_init__(self):
        if self.entries <= 0 or self.associativity <= 0:
            raise ValueError("entries and associativity must be positive")
        if self.entries % self.associativity:
            raise ValueError("entries must be divisible by associativity")

    @property
    def set_count(self):
        return self.entries // self.associativity

    @property
    def capacity_bytes(self):
        return self.entries * self.entry_bytes


@dataclass
class CacheStats:
    hits: int = 0
    misses: int = 0
    invalidations: int = 0
    estimated_cycles: int = 0
    unique_objects: int = 0
    accesses: int = 0
    mean_object_bytes: float = 0.0

    @property
    def miss_rate(self):
        total = self.hits + self.misses
        return self.misses / total if total else 0.0

    def to_dict(self):
        d = asdict(self)
        d["miss_rate"] = self.miss_rate
        return d


def estimate_cycles(stats, cfg):
    return (stats.hits * cfg.hit_latency
            + stats.misses * (cfg.hit_latency + cfg.miss_penalty))


class CacheModel:
    def __init__(self, config=None, backend=None):
        self.config = config if config is not None else CacheConfig()
        impl = kernels if backend is None else kernels.backends()[backend]
        self._core = impl.LRUCore(self.config.set_count, self.config.associativity)
        self.hits = 0
        self.misses = 0
        self.invalidations = 0
        self._sizes = {}

    def access(self, id_, size=None):
        """Look up ``id_``; returns True on a hit."""
        hit = self._core.access(id_)
        if hit:
            self.hits += 1
        else:
            self.misses += 1
        if size is not None:
            self._sizes.setdefault(id_, size)
        return hit

    def run(self, ids):
        """Batch access of a uint64 id array; returns the per-access hit mask."""
        mask = self._core.run(ids)
        n_hit = int(mask.sum())
        self.hits += n_hit
        self.misses += len(mask) - n_hit
        return mask

    def invalidate(self, id_):
        if self._core.invalidate(id_):
            self.invalidations += 1
            return True
        return False

    def resident(self, set_index):
        return self._core.resident(set_index)

    def stats(self):
        n = len(self._sizes)
        s = CacheStats(
            hits=self.hits,
            misses=self.misses,
            invalidations=self.invalidations,
            unique_objects=n,
            accesses=self.hits + self.misses,
            mean_object_bytes=sum(self._sizes.values()) / n if n else 0.0,
        )
        s.estimated_cycles = estimate_cycles(s, self.config)
        return s


def cache_access(cache, id_):
    return "hit" if cache.access(id_) else "miss"


def cache_invalidate(cache, id_):
    cache.invalidate(id_)
