"""Bypass-attack experiments and the closed-form entropy of a configuration.

Attacks are driven through the real allocator and access engine.  Target
objects are filled with ``SENTINEL`` bytes; an attempt succeeds when it
reads a sentinel byte (or, for write attacks, commits a store into a
target).  Faulting attempts are counted and the attacker simply retries.
"""

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import NamedTuple

import numpy as np

from . import kernels
from .allocator import ObjectMap, _round_chunk
from .encoding import OFFSET_BITS, PAGE_MASK, add, diff
from .engine import Outcome, load, resolve, store
from .errors import IdExhaustion, UnmappedId

SENTINEL = 0xA7
VICTIM_FILL = 0x5A
ATTACK_FILL = 0xEE


class Entropy(NamedTuple):
    exact: int
    log2: float


def entropy(id_bits, offset_bits, page_bits=0, align_bits=0, scaled=None):
    """Number of equally likely target encodings facing an attacker.

    Full-width identifiers (40 bits) exclude the value already held by the
    attacker and the identifiers reserved for plain addresses (zero top 16
    bits).  In scaled mode those identifiers cannot be minted in the first
    place, so the count is a plain power of two.
    """
    if not 0 <= id_bits <= 40:
        raise ValueError("id_bits must be within 0..40")
    if not 0 <= offset_bits <= 12:
        raise ValueError("offset_bits must be within 0..12")
    if page_bits not in (0, 8) or align_bits not in (0, 4):
        raise ValueError("page_bits must be 0 or 8 and align_bits 0 or 4")
    if scaled is None:
        scaled = id_bits < 40
    rest = offset_bits + page_bits + align_bits
    if scaled:
        exact = 1 << (id_bits + rest)
    else:
        if id_bits < 16:
            raise ValueError("full-width mode needs at least 16 id bits")
        exact = ((1 << id_bits) - 1 - (1 << (id_bits - 16))) << rest
    return Entropy(exact, math.log2(exact))


def config_entropy(cfg):
    return entropy(cfg.id_random_bits, cfg.offset_random_bits,
                   cfg.page_bits, cfg.align_bits)


class AttackerView:
    """The attacker's coordinates over a configuration's randomized bits.

    A guess is an integer ``k`` in ``[0, 2**cfg.randomized_bits)`` laid out
    (low to high) as align bits, page bits, offset bits above the page and
    random id bits.  Bits the allocator does not randomize are taken from
    ``known_low`` (the target's page offset, known through layout knowledge)
    or from the fixed identifier pattern.
    """

    def __init__(self, cfg, known_low=0):
        self.cfg = cfg
        self.known_low = known_low & PAGE_MASK
        self.bits = cfg.randomized_bits
        self._ab = cfg.align_bits
        self._pb = cfg.page_bits
        self._ob = cfg.offset_random_bits
        self._ib = cfg.id_random_bits
        self._fixed = cfg.fixed_id_bits

    @property
    def size(self):
        return 1 << self.bits

    def compose(self, k):
        k &= self.size - 1
        if self._ab:
            align, k = k & 0xF, k >> 4
        else:
            align = self.known_low & 0xF
        if self._pb:
            page, k = k & 0xFF, k >> 8
        else:
            page = (self.known_low >> 4) & 0xFF
        high, k = k & ((1 << self._ob) - 1), k >> self._ob
        id_ = self._fixed | (k & ((1 << self._ib) - 1))
        return (id_ << OFFSET_BITS) | (high << 12) | (page << 4) | align

    def compose_array(self, ks):
        ks = np.asarray(ks, dtype=np.uint64)
        u = np.uint64
        if self._ab:
            align, ks = ks & u(0xF), ks >> u(4)
        else:
            align = u(self.known_low & 0xF)
        if self._pb:
            page, ks = ks & u(0xFF), ks >> u(8)
        else:
            page = u((self.known_low >> 4) & 0xFF)
        high, ks = ks & u((1 << self._ob) - 1), ks >> u(self._ob)
        id_ = u(self._fixed) | (ks & u((1 << self._ib) - 1))
        return (id_ << u(OFFSET_BITS)) | (high << u(12)) | (page << u(4)) | align

    def coords(self, word):
        """Inverse of ``compose`` for a word minted under this config."""
        id_, zero = word >> OFFSET_BITS, word & ((1 << OFFSET_BITS) - 1)
        k = id_ & ((1 << self._ib) - 1)
        k = (k << self._ob) | ((zero >> 12) & ((1 << self._ob) - 1))
        if self._pb:
            k = (k << 8) | ((zero >> 4) & 0xFF)
        if self._ab:
            k = (k << 4) | (zero & 0xF)
        return k


class AttackKind(enum.Enum):
    OF = "of"
    UF = "uf"
    UAF = "uaf"


@dataclass(frozen=True)
class AttackSpec:
    """One attack experiment.

    ``order="literal"`` walks ``p + w*(1+i)`` (overflow) or ``p - w*(1+i)``
    (underflow) for element width ``w``.  ``order="enumerate"`` walks the
    attacker's guess space sequentially starting next to the victim, which
    is the best an attacker can do against randomized encodings.
    """

    kind: AttackKind
    max_attempts: int = 10_000
    victim_size: int = 8
    target_size: int = 8
    spray_count: int = 1
    trials: int = 1
    order: str = "literal"
    access: str = "read"
    width: int = 8

    def __post_init__(self):
        if self.max_attempts < 1 or self.trials < 1:
            raise ValueError("max_attempts and trials must be at least 1")
        if self.spray_count < 1:
            raise ValueError("spray_count must be at least 1")
        if self.order not in ("literal", "enumerate"):
            raise ValueError("order must be 'literal' or 'enumerate'")
        if self.access not in ("read", "write"):
            raise ValueError("access must be 'read' or 'write'")


@dataclass
class AttackReport:
    trials: int = 0
    successes: int = 0
    attempts_per_success: list = field(default_factory=list)
    total_attempts: int = 0
    outcomes: Counter = field(default_factory=Counter)
    exhausted_trials: int = 0

    @property
    def mean_attempts(self):
        a = self.attempts_per_success
        return sum(a) / len(a) if a else math.nan

    @property
    def margin_95(self):
        """Half-width of the normal 95% interval on ``mean_attempts``."""
        a = self.attempts_per_success
        if len(a) < 2:
            return math.nan
        return 1.959963984540054 * float(np.std(a, ddof=1)) / math.sqrt(len(a))

    def to_dict(self):
        return {
            "trials": self.trials,
            "successes": self.successes,
            "total_attempts": self.total_attempts,
            "mean_attempts": None if math.isnan(self.mean_attempts) else self.mean_attempts,
            "margin_95": None if math.isnan(self.margin_95) else self.margin_95,
            "outcomes": dict(sorted(self.outcomes.items())),
            "exhausted_trials": self.exhausted_trials,
        }


def _fill(heap, word, size, byte):
    if size:
        rec = heap.lookup(word >> OFFSET_BITS)
        heap._write(rec.arena_base, bytes([byte]) * size)


def place_targets(heap, count, size):
    """Allocate ``count`` sentinel-filled targets sharing one page offset.

    Filler objects are allocated between targets so each target starts at
    the same address modulo 4096; an attacker with layout knowledge can then
    aim at all of them with a single guess of the page offset.
    """
    pad = (-_round_chunk(size)) % 4096
    targets = []
    for n in range(count):
        w = heap.malloc(size)
        _fill(heap, w, size, SENTINEL)
        targets.append(w)
        if pad and n + 1 < count:
            heap.malloc(pad)
    return targets


def _classify(out):
    if out.kind is Outcome.Fault:
        return out.fault.value
    return out.kind.value


def _attempt(heap, word, spec, target_ids):
    """Return ``(outcome_label, success)`` for one attack access."""
    if spec.access == "read":
        out = load(heap, word, spec.width)
        if out.faulted:
            return _classify(out), False
        mask = out.zeroed or (False,) * spec.width
        hit = any(b == SENTINEL and not z for b, z in zip(out.data, mask))
        return _classify(out), hit
    try:
        _, rec = resolve(heap, word)
    except UnmappedId:
        rec = None
    out = store(heap, word, spec.width, bytes([ATTACK_FILL]) * spec.width)
    return _classify(out), out.ok and rec is not None and rec.id in target_ids


def _run_overflow(spec, heap, report):
    sign = 1 if spec.kind is AttackKind.OF else -1
    p = heap.malloc(spec.victim_size)
    _fill(heap, p, spec.victim_size, VICTIM_FILL)
    targets = place_targets(heap, spec.spray_count, spec.target_size)
    target_ids = {t >> OFFSET_BITS for t in targets}
    view = AttackerView(heap.config, targets[0])
    kp = view.coords(p)
    for i in range(spec.max_attempts):
        if spec.order == "literal":
            k = sign * spec.width * (1 + i)
        else:
            k = diff(p, view.compose(kp + sign * (1 + i)))
        label, hit = _attempt(heap, add(p, k), spec, target_ids)
        report.outcomes[label] += 1
        report.total_attempts += 1
        if hit:
            return i + 1
    return None


def _run_uaf(spec, heap, report):
    p = heap.malloc(spec.victim_size)
    _fill(heap, p, spec.victim_size, VICTIM_FILL)
    heap.free(p)
    target_ids = set()
    for i in range(spec.max_attempts):
        try:
            t = heap.malloc(spec.target_size)
        except IdExhaustion:
            report.exhausted_trials += 1
            return None
        _fill(heap, t, spec.target_size, SENTINEL)
        target_ids.add(t >> OFFSET_BITS)
        label, hit = _attempt(heap, p, spec, target_ids)
        report.outcomes[label] += 1
        report.total_attempts += 1
        if hit:
            return i + 1
    return None


def run_attack(spec, cfg, src):
    """Run ``spec.trials`` independent repetitions of one attack."""
    report = AttackReport()
    for t in range(spec.trials):
        heap = ObjectMap(cfg, src.spawn(t))
        try:
            if spec.kind is AttackKind.UAF:
                n = _run_uaf(spec, heap, report)
            else:
                n = _run_overflow(spec, heap, report)
        except IdExhaustion:
            report.exhausted_trials += 1
            n = None
        report.trials += 1
        if n is not None:
            report.successes += 1
            report.attempts_per_success.append(n)
    return report


def wilson_interval(successes, trials, confidence=0.95):
    if trials <= 0:
        raise ValueError("trials must be positive")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    ph = successes / trials
    denom = 1 + z * z / trials
    centre = (ph + z * z / (2 * trials)) / denom
    half = z * math.sqrt(ph * (1 - ph) / trials + z * z / (4 * trials * trials)) / denom
    low = 0.0 if successes == 0 else max(0.0, centre - half)
    high = 1.0 if successes == trials else min(1.0, centre + half)
    return low, high


@dataclass(frozen=True)
class BypassEstimate:
    successes: int
    trials: int
    estimate: float
    low: float
    high: float
    expected: float

    @property
    def covered(self):
        return self.low <= self.expected <= self.high

    def to_dict(self):
        return {
            "successes": self.successes,
            "trials": self.trials,
            "estimate": self.estimate,
            "ci95": [self.low, self.high],
            "expected": self.expected,
            "covered": self.covered,
        }


def monte_carlo_bypass(cfg, guesses, trials, src, spray_count=1, target_size=8,
                       width=8, confidence=0.95):
    """Estimate the chance that ``guesses`` uniform guesses hit a target.

    Each trial builds a fresh heap with ``spray_count`` hidden targets and
    lets the attacker dereference ``guesses`` uniformly random encodings.
    """
    if guesses < 1 or trials < 1:
        raise ValueError("guesses and trials must be at least 1")
    spec = AttackSpec(AttackKind.OF, width=width)
    bits = cfg.randomized_bits
    successes = 0
    for t in range(trials):
        tsrc = src.spawn(t)
        heap = ObjectMap(cfg, tsrc)
        targets = place_targets(heap, spray_count, target_size)
        view = AttackerView(cfg, targets[0])
        for _ in range(guesses):
            word = view.compose(tsrc.next_bits(bits))
            if _attempt(heap, word, spec, ())[1]:
                successes += 1
                break
    n_space = config_entropy(cfg).exact
    expected = 1 - (1 - min(1.0, spray_count / n_space)) ** guesses
    low, high = wilson_interval(successes, trials, confidence)
    return BypassEstimate(successes, trials, successes / trials, low, high, expected)


def _object_table(heap, target_ids):
    recs = sorted(heap.live.values(), key=lambda r: r.id)
    return (
        np.array([r.id for r in recs], dtype=np.uint64),
        np.array([r.zero for r in recs], dtype=np.int64),
        np.array([r.size for r in recs], dtype=np.int64),
        np.array([r.id in target_ids for r in recs], dtype=np.uint8),
    )


def guess_until_hit(cfg, trials, src, spray_count=1, target_size=8, width=8,
                    max_attempts=None, backend=None, chunk=None):
    """Random guessing with replacement until a target is hit.

    Returns an `AttackReport` whose ``attempts_per_success`` has one entry per
    successful trial.  Guess batches are scanned with the decode kernel.
    """
    impl = kernels if backend is None else kernels.backends()[backend]
    bits = cfg.randomized_bits
    if chunk is None:
        chunk = min(max(64, 4 << bits), 1 << 16)
    if max_attempts is None:
        max_attempts = 64 << bits
    report = AttackReport()
    for t in range(trials):
        tsrc = src.spawn(t)
        heap = ObjectMap(cfg, tsrc)
        targets = place_targets(heap, spray_count, target_size)
        view = AttackerView(cfg, targets[0])
        table = _object_table(heap, {w >> OFFSET_BITS for w in targets})
        done = 0
        found = None
        while done < max_attempts:
            n = min(chunk, max_attempts - done)
            words = view.compose_array(tsrc.bits_array(bits, n))
            idx = impl.first_hit(words, *table, width)
            if idx >= 0:
                found = done + idx + 1
                break
            done += n
        report.trials += 1
        report.total_attempts += found if found is not None else done
        if found is not None:
            report.successes += 1
            report.attempts_per_success.append(found)
    return report
