"""Workload trace format and replay.

One operation per line, ``#`` starts a comment::

    alloc   LABEL SIZE
    free    LABEL
    lea     DST SRC DELTA        # DST = SRC + DELTA, unchecked 64-bit add
    load    LABEL WIDTH
    store   LABEL WIDTH 0xVALUE  # VALUE stored little-endian
    raw_load 0xWORD WIDTH

Sizes, widths and deltas are decimal; words and values are hexadecimal.
"""

import datetime
from dataclasses import dataclass

from .allocator import ObjectMap
from .cache import CacheModel
from .encoding import WORD_MASK, add
from .engine import WIDTHS, Outcome, load, store
from .errors import FrpError
from .harness import config_entropy
from .rng import RandomSource

REPORT_FORMAT = "frpsim-run/1"


class TraceError(ValueError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class TraceOp:
    op: str
    line: int
    label: str | None = None
    src: str | None = None
    size: int | None = None
    delta: int | None = None
    width: int | None = None
    value: int | None = None
    word: int | None = None


_ARITY = {"alloc": 2, "free": 1, "lea": 3, "load": 2, "store": 3, "raw_load": 2}


def _dec(tok, line, what):
    try:
        return int(tok, 10)
    except ValueError:
        raise TraceError(line, f"{what} must be a decimal integer, got {tok!r}") from None


def _hex(tok, line, what):
    if not tok.lower().startswith("0x"):
        raise TraceError(line, f"{what} must be hexadecimal with a 0x prefix")
    try:
        return int(tok, 16)
    except ValueError:
        raise TraceError(line, f"bad hexadecimal {what} {tok!r}") from None


def _width(tok, line):
    w = _dec(tok, line, "width")
    if w not in WIDTHS:
        raise TraceError(line, f"width must be one of {sorted(WIDTHS)}")
    return w


def parse_trace(text):
    ops = []
    defined = set()

    def use(label, line):
        if label not in defined:
            raise TraceError(line, f"undefined label {label!r}")

    def define(label, line):
        if label in defined:
            raise TraceError(line, f"duplicate label {label!r}")
        defined.add(label)

    for n, raw in enumerate(text.splitlines(), 1):
        toks = raw.split("#", 1)[0].split()
        if not toks:
            continue
        name, args = toks[0], toks[1:]
        if name not in _ARITY:
            raise TraceError(n, f"unknown operation {name!r}")
        if len(args) != _ARITY[name]:
            raise TraceError(n, f"{name} takes {_ARITY[name]} operands")
        if name == "alloc":
            size = _dec(args[1], n, "size")
            if size < 0:
                raise TraceError(n, "size must be non-negative")
            define(args[0], n)
            ops.append(TraceOp("alloc", n, label=args[0], size=size))
        elif name == "free":
            use(args[0], n)
            ops.append(TraceOp("free", n, label=args[0]))
        elif name == "lea":
            use(args[1], n)
            delta = _dec(args[2], n, "delta")
            if not -(1 << 63) <= delta < (1 << 64):
                raise TraceError(n, "delta does not fit in 64 bits")
            define(args[0], n)
            ops.append(TraceOp("lea", n, label=args[0], src=args[1], delta=delta))
        elif name == "load":
            use(args[0], n)
            ops.append(TraceOp("load", n, label=args[0], width=_width(args[1], n)))
        elif name == "store":
            use(args[0], n)
            width = _width(args[1], n)
            value = _hex(args[2], n, "value")
            if value >> (8 * width):
                raise TraceError(n, f"value does not fit in {width} bytes")
            ops.append(TraceOp("store", n, label=args[0], width=width, value=value))
        else:
            word = _hex(args[0], n, "word")
            if word > WORD_MASK:
                raise TraceError(n, "word does not fit in 64 bits")
            ops.append(TraceOp("raw_load", n, word=word, width=_width(args[1], n)))
    return ops


def _access_result(out):
    res = {"outcome": out.kind.value}
    if out.kind is Outcome.Fault:
        res["fault"] = out.fault.value
    if out.data is not None:
        res["data"] = out.data.hex()
    if out.zeroed is not None:
        res["zeroed"] = [i for i, z in enumerate(out.zeroed) if z]
    return res


def run_trace(ops, cfg, cache_cfgs, seed):
    """Replay ``ops`` and return the report as a JSON-ready dict."""
    heap = ObjectMap(cfg, RandomSource.seeded(seed))
    caches = [CacheModel(c) for c in cache_cfgs]

    def invalidate(rec):
        for c in caches:
            c.invalidate(rec.id)

    heap.free_hooks.append(invalidate)
    words = {}
    results = []
    for op in ops:
        res = {"line": op.line, "op": op.op}
        if op.label is not None:
            res["label"] = op.label
        if op.op == "alloc":
            try:
                words[op.label] = heap.malloc(op.size)
                res["outcome"] = Outcome.Ok.value
            except FrpError as exc:
                words[op.label] = 0
                res.update(outcome=Outcome.Fault.value, fault=exc.fault.value)
            res["word"] = f"{words[op.label]:#018x}"
        elif op.op == "free":
            try:
                heap.free(words[op.label])
                res["outcome"] = Outcome.Ok.value
            except FrpError as exc:
                res.update(outcome=Outcome.Fault.value, fault=exc.fault.value)
        elif op.op == "lea":
            words[op.label] = add(words[op.src], op.delta)
            res.update(outcome=Outcome.Ok.value, word=f"{words[op.label]:#018x}")
        elif op.op == "load":
            res.update(_access_result(load(heap, words[op.label], op.width, caches)))
        elif op.op == "store":
            value = op.value.to_bytes(op.width, "little")
            res.update(_access_result(
                store(heap, words[op.label], op.width, value, caches)))
        else:
            res["word"] = f"{op.word:#018x}"
            res.update(_access_result(load(heap, op.word, op.width, caches)))
        results.append(res)

    counts = {k.value: 0 for k in Outcome}
    faults = {}
    for res in results:
        counts[res["outcome"]] += 1
        if "fault" in res:
            faults[res["fault"]] = faults.get(res["fault"], 0) + 1
    ent = config_entropy(cfg)
    return {
        "format": REPORT_FORMAT,
        "seed": seed,
        "config": cfg.to_dict(),
        "entropy": {"exact": ent.exact, "log2": ent.log2},
        "ops": results,
        "totals": {"ops": len(results), **counts, "faults": dict(sorted(faults.items()))},
        "caches": [
            {"entries": c.config.entries, "associativity": c.config.associativity,
             "capacity_bytes": c.config.capacity_bytes, **c.stats().to_dict()}
            for c in caches
        ],
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
