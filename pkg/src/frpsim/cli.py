"""Command-line front end.

``frpsim run --trace FILE`` replays a workload trace, ``frpsim attack`` runs
an overflow/underflow/use-after-free bypass experiment, ``frpsim entropy``
evaluates the closed-form entropy and ``frpsim montecarlo`` estimates the
bypass probability by random guessing.  Every subcommand prints one JSON
document.  Without ``--seed`` a seed is drawn from system entropy and echoed.
"""

import argparse
import json
import secrets
import sys

from .allocator import FrpConfig, scaled_config
from .cache import TABLE_SIZES, CacheConfig
from .harness import (
    AttackKind,
    AttackSpec,
    config_entropy,
    entropy,
    guess_until_hit,
    monte_carlo_bypass,
    run_attack,
)
from .kernels import BACKEND
from .rng import RandomSource
from .trace import TraceError, parse_trace, run_trace


def _entries(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad entry list {text!r}") from None
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("cache entries must be positive")
    return vals


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=_seed, help="u64 seed (default: system entropy)")
    p.add_argument("--id-bits", type=int, default=40)
    p.add_argument("--offset-bits", type=int, default=12)
    p.add_argument("--page-random", action="store_true")
    p.add_argument("--align-random", action="store_true")
    p.add_argument("--track-all-ids", action=argparse.BooleanOptionalAction,
                   default=True)
    p.add_argument("--cache-entries", type=_entries, default=list(TABLE_SIZES))
    p.add_argument("--cache-ways", type=int, default=8)
    p.add_argument("-o", "--output", help="write the JSON report here")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="frpsim", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="replay a trace file")
    run.add_argument("--trace", required=True)

    atk = sub.add_parser("attack", parents=[common], help="bypass attack experiment")
    atk.add_argument("--kind", choices=[k.value for k in AttackKind], required=True)
    atk.add_argument("--attempts", type=int, default=10_000)
    atk.add_argument("--trials", type=int, default=1)
    atk.add_argument("--spray", type=int, default=1)
    atk.add_argument("--victim-size", type=int, default=8)
    atk.add_argument("--target-size", type=int, default=8)
    atk.add_argument("--order", choices=["literal", "enumerate"], default="literal")
    atk.add_argument("--access", choices=["read", "write"], default="read")
    atk.add_argument("--width", type=int, default=8)

    ent = sub.add_parser("entropy", parents=[common], help="closed-form entropy")
    ent.add_argument("--id", type=int, default=40)
    ent.add_argument("--offset", type=int, default=12)
    ent.add_argument("--page", action="store_true")
    ent.add_argument("--align", action="store_true")

    mc = sub.add_parser("montecarlo", parents=[common], help="random-guess bypass estimate")
    mc.add_argument("--bits", type=int,
                    help="total randomized bits (overrides --id-bits/--offset-bits)")
    mc.add_argument("--guesses", type=int, default=1)
    mc.add_argument("--trials", type=int, default=10_000)
    mc.add_argument("--spray", type=int, default=1)
    mc.add_argument("--until-hit", action="store_true",
                    help="also measure mean attempts until a hit")
    return parser


def _config(args):
    opts = dict(page_random=args.page_random, align_random=args.align_random,
                track_all_ids=args.track_all_ids)
    if getattr(args, "bits", None) is not None:
        return scaled_config(args.bits, **opts)
    return FrpConfig(id_random_bits=args.id_bits,
                     offset_random_bits=args.offset_bits, **opts)


def _entropy_dict(ent):
    return {"exact": ent.exact, "log2": ent.log2}


def _execute(args):
    if args.command == "entropy":
        ent = entropy(args.id, args.offset, 8 if args.page else 0,
                      4 if args.align else 0)
        return {"id_bits": args.id, "offset_bits": args.offset,
                "page_bits": 8 if args.page else 0,
                "align_bits": 4 if args.align else 0, **_entropy_dict(ent)}

    cfg = _config(args)
    seed = args.seed if args.seed is not None else secrets.randbits(64)
    if args.command == "run":
        with open(args.trace, encoding="utf-8") as fh:
            ops = parse_trace(fh.read())
        caches = [CacheConfig(entries=e, associativity=args.cache_ways)
                  for e in args.cache_entries]
        return run_trace(ops, cfg, caches, seed)

    src = RandomSource.seeded(seed)
    out = {"seed": seed, "config": cfg.to_dict(),
           "entropy": _entropy_dict(config_entropy(cfg))}
    if args.command == "attack":
        spec = AttackSpec(AttackKind(args.kind), max_attempts=args.attempts,
                          victim_size=args.victim_size, target_size=args.target_size,
                          spray_count=args.spray, trials=args.trials,
                          order=args.order, access=args.access, width=args.width)
        out["attack"] = {"kind": args.kind, "order": args.order, "access": args.access,
                         "max_attempts": args.attempts, "spray_count": args.spray}
        out["report"] = run_attack(spec, cfg, src).to_dict()
        return out
    est = monte_carlo_bypass(cfg, args.guesses, args.trials, src.spawn(0),
                             spray_count=args.spray)
    out["montecarlo"] = {"guesses": args.guesses, "spray_count": args.spray,
                         **est.to_dict()}
    if args.until_hit:
        rep = guess_until_hit(cfg, args.trials, src.spawn(1), spray_count=args.spray)
        out["until_hit"] = {**rep.to_dict(), "kernel": BACKEND}
    return out


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        report = _execute(args)
    except (OSError, TraceError, ValueError) as exc:
        print(f"frpsim: error: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(report, indent=2) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0
