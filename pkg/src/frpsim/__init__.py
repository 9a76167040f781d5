"""Fully randomized pointer simulator.

A simulated heap whose pointers are random 64-bit identifiers plus offsets,
decoded on every access with bounds and use-after-free checking, together
with a translation-cache model and bypass-attack experiments.
"""

from .allocator import FrpConfig, ObjectMap, ObjectRecord, scaled_config
from .cache import CacheConfig, CacheModel, CacheStats, estimate_cycles
from .encoding import IdOffsetPair, diff, flatten, is_encoded, unflatten
from .engine import AccessOutcome, Outcome, check_bounds, decode, load, store
from .errors import (
    FaultClass,
    FrpError,
    IdExhaustion,
    InvalidFree,
    LargeAllocation,
    OobWrite,
    UnmappedId,
)
from .harness import (
    AttackKind,
    AttackReport,
    AttackSpec,
    entropy,
    monte_carlo_bypass,
    run_attack,
)
from .rng import RandomSource

__version__ = "0.1.0"
