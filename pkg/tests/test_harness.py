import math

import numpy as np
import pytest
from scipy import stats

from frpsim.allocator import FrpConfig, ObjectMap, scaled_config
from frpsim.encoding import OFFSET_CAPACITY
from frpsim.errors import FaultClass
from frpsim.harness import (
    AttackerView,
    AttackKind,
    AttackSpec,
    config_entropy,
    entropy,
    guess_until_hit,
    monte_carlo_bypass,
    place_targets,
    run_attack,
    wilson_interval,
)
from frpsim.rng import RandomSource


def test_entropy_reported_values():
    assert 51.99 <= entropy(40, 12).log2 <= 52.0
    assert round(entropy(40, 12, 8, 0).log2) == 60
    assert round(entropy(40, 12, 8, 4).log2) == 64


def test_entropy_exact_big_integer():
    assert entropy(40, 12).exact == (2**40 - 1 - 2**24) * 4096
    assert entropy(40, 12, 8, 4).exact == (2**40 - 1 - 2**24) * 2**24


def test_entropy_domain():
    with pytest.raises(ValueError):
        entropy(40, 13)
    with pytest.raises(ValueError):
        entropy(40, 12, 4, 0)
    with pytest.raises(ValueError):
        entropy(12, 0, scaled=False)
    assert entropy(8, 4) == (4096, 12.0)
    assert entropy(0, 0).exact == 1


def enumerate_encodings(cfg, size=8, arena_low=0x010):
    """Distinct target words the allocator can mint, by brute force."""
    z = np.arange(OFFSET_CAPACITY, dtype=np.int64)
    ok = (z + size <= OFFSET_CAPACITY) & ((z >> 12) < 2**cfg.offset_random_bits)
    if not cfg.align_random:
        ok &= (z & 0xF) == (arena_low & 0xF)
    if not cfg.page_random:
        ok &= ((z >> 4) & 0xFF) == ((arena_low >> 4) & 0xFF)
    n_ids = sum(1 for r in range(2**cfg.id_random_bits))
    return n_ids * int(ok.sum())


@pytest.mark.parametrize("cfg", [
    FrpConfig(id_random_bits=4, offset_random_bits=0),
    FrpConfig(id_random_bits=3, offset_random_bits=5),
    FrpConfig(id_random_bits=2, offset_random_bits=2, align_random=True),
    FrpConfig(id_random_bits=1, offset_random_bits=3, page_random=True),
    FrpConfig(id_random_bits=1, offset_random_bits=3, page_random=True, align_random=True),
    FrpConfig(id_random_bits=8, offset_random_bits=8),
])
def test_entropy_equals_enumeration(cfg):
    assert config_entropy(cfg).exact == enumerate_encodings(cfg)


def test_minted_words_inside_enumerated_space():
    cfg = FrpConfig(id_random_bits=3, offset_random_bits=3, track_all_ids=False)
    heap = ObjectMap(cfg, RandomSource.seeded(3))
    words = set()
    for _ in range(2000):
        (t,) = place_targets(heap, 1, 8)
        words.add(t)
        heap.free(t)
    view = AttackerView(cfg, next(iter(words)))
    space = {view.compose(k) for k in range(view.size)}
    assert words <= space
    assert len(words) == len(space) == config_entropy(cfg).exact


@pytest.mark.parametrize("cfg", [scaled_config(9), FrpConfig(),
                                 FrpConfig(page_random=True, align_random=True),
                                 FrpConfig(id_random_bits=5, offset_random_bits=2,
                                           align_random=True)])
def test_attacker_view_round_trip(cfg):
    view = AttackerView(cfg, 0x4A0)
    rng = np.random.default_rng(0)
    ks = rng.integers(0, min(view.size, 2**62), size=500, dtype=np.uint64)
    words = view.compose_array(ks)
    for k, w in zip(ks.tolist(), words.tolist()):
        assert view.compose(k) == w
        assert view.coords(w) == k


@pytest.mark.parametrize("kind", list(AttackKind))
def test_full_entropy_attacks_fail(kind, src):
    rep = run_attack(AttackSpec(kind, max_attempts=10_000), FrpConfig(), src)
    assert rep.successes == 0 and rep.total_attempts == 10_000
    allowed = {"UnmappedId", "OobReadZeroed"}
    assert set(rep.outcomes) <= allowed


def test_full_entropy_write_attacks_fault(src):
    for kind in (AttackKind.OF, AttackKind.UF):
        rep = run_attack(AttackSpec(kind, max_attempts=2000, access="write"), FrpConfig(), src)
        assert rep.successes == 0
        assert set(rep.outcomes) <= {"UnmappedId", "OobWrite"}


def test_enumerate_order_at_full_entropy(src):
    rep = run_attack(AttackSpec(AttackKind.OF, order="enumerate", trials=2), FrpConfig(), src)
    assert rep.successes == 0


def exact_enumeration_mean(id_bits, off_bits, sign):
    """Mean attempts for sequential enumeration, over every placement."""
    n_id, n_off = 2**id_bits, 2**off_bits
    iv, ov, it, ot = np.meshgrid(np.arange(n_id), np.arange(n_off),
                                 np.arange(n_id), np.arange(n_off), indexing="ij")
    keep = iv != it
    kp = (iv << off_bits) | ov
    kt = (it << off_bits) | ot
    d = (sign * (kt - kp)) % (n_id * n_off)
    return d[keep].mean(), int(d[keep].max())


@pytest.mark.parametrize("kind,sign", [(AttackKind.OF, 1), (AttackKind.UF, -1)])
def test_sequential_enumeration_scaled(kind, sign, src):
    cfg = scaled_config(10)
    trials = 10_000 if kind is AttackKind.OF else 2000
    rep = run_attack(AttackSpec(kind, max_attempts=2**10, trials=trials, order="enumerate"),
                     cfg, src)
    mean, worst = exact_enumeration_mean(cfg.id_random_bits, cfg.offset_random_bits, sign)
    assert rep.successes == trials
    assert max(rep.attempts_per_success) <= worst < 2**10
    assert abs(rep.mean_attempts - 2**9) <= 0.05 * 2**9
    assert abs(rep.mean_attempts - mean) <= 4 * 296 / math.sqrt(trials)


def test_enumeration_write_attack_succeeds(src):
    rep = run_attack(AttackSpec(AttackKind.OF, max_attempts=2**6, trials=200,
                                order="enumerate", access="write"), scaled_config(6), src)
    assert rep.successes == 200


def test_uaf_tracked_vs_untracked_scaled(src):
    spec = AttackSpec(AttackKind.UAF, max_attempts=200, trials=2000)
    tracked = run_attack(spec, FrpConfig(id_random_bits=4, offset_random_bits=0), src)
    untracked = run_attack(spec, FrpConfig(id_random_bits=4, offset_random_bits=0,
                                           track_all_ids=False), src)
    assert tracked.successes == 0
    assert tracked.outcomes["UnmappedId"] == tracked.total_attempts
    # Only the first reallocation reuses the freed bytes (same page offset),
    # and it reissues the stale id with probability 1/16.
    lo, hi = binomial_99(2000, 1 / 16)
    assert lo <= untracked.successes <= hi
    assert set(untracked.attempts_per_success) == {1}


def test_report_statistics():
    rep = run_attack(AttackSpec(AttackKind.OF, max_attempts=2**6, trials=300, order="enumerate"),
                     scaled_config(6), RandomSource.seeded(1))
    d = rep.to_dict()
    assert d["successes"] == 300 and d["margin_95"] > 0
    assert rep.successes <= rep.trials


def binomial_99(trials, p):
    return stats.binom.interval(0.99, trials, p)


def test_monte_carlo_8_bits(src):
    est = monte_carlo_bypass(scaled_config(8), 1, 100_000, src)
    lo, hi = binomial_99(100_000, 1 / 256)
    assert lo <= est.successes <= hi
    assert est.covered


def test_monte_carlo_degenerate_zero_bits(src):
    est = monte_carlo_bypass(scaled_config(0), 1, 200, src)
    assert est.estimate == 1.0


def test_monte_carlo_spray(src):
    trials = 40_000
    est = monte_carlo_bypass(scaled_config(8), 1, trials, src, spray_count=4)
    lo, hi = binomial_99(trials, 4 / 256)
    assert lo <= est.successes <= hi


def test_spray_linearity(src):
    trials = 20_000
    for n in (1, 2, 4, 8):
        est = monte_carlo_bypass(scaled_config(10), 1, trials, src.spawn(n), spray_count=n)
        lo, hi = binomial_99(trials, n / 1024)
        assert lo <= est.successes <= hi, n


def test_monotone_in_bits(src):
    estimates = [monte_carlo_bypass(scaled_config(b), 1, 40_000, src.spawn(b)).estimate
                 for b in (4, 8, 12)]
    assert estimates == sorted(estimates, reverse=True)


def test_multiple_guesses(src):
    est = monte_carlo_bypass(scaled_config(6), 4, 20_000, src)
    assert est.expected == pytest.approx(1 - (63 / 64) ** 4)
    assert est.covered


def test_guess_until_hit_backends_agree():
    from frpsim import kernels

    cfg = scaled_config(8)
    reps = [guess_until_hit(cfg, 300, RandomSource.seeded(4), backend=b)
            for b in kernels.backends()]
    assert all(r.attempts_per_success == reps[0].attempts_per_success for r in reps)


def test_guess_until_hit_mean(src):
    rep = guess_until_hit(scaled_config(8), 10_000, src)
    assert rep.successes == 10_000
    assert abs(rep.mean_attempts - 256) <= 0.05 * 256


def test_wilson_interval():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert wilson_interval(0, 10)[0] == 0.0
    with pytest.raises(ValueError):
        wilson_interval(0, 0)


def test_attack_spec_validation():
    with pytest.raises(ValueError):
        AttackSpec(AttackKind.OF, max_attempts=0)
    with pytest.raises(ValueError):
        AttackSpec(AttackKind.OF, order="random")
