"""Batch front end: JSON reports on stdout, human logs on stderr.

Exit codes: 0 success, 2 usage or parse error, 3 failed precondition,
4 verification failure, 5 step budget exhausted. All randomness flows
from --seed; the set sampler and the engine receive the two words of
numpy's SeedSequence(seed).generate_state(2), in that order.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from .bohr import BohrSet, RegularitySearchError, dimension_estimate, find_regular_dilate
from .constructions import (
    ConstructionError,
    GuardError,
    IntegerSet,
    behrend,
    elkin,
    greedy_ap_free,
    random_set,
    verify_ap_free,
)
from .groups import Group, GroupMeasure, GroupSubset, cyclic
from .increment import (
    DEFAULT_CONFIG,
    EngineConfig,
    EntryCheckError,
    IncrementCertificate,
    VerificationError,
    replay_certificate,
    roth_engine_energy,
    roth_engine_main,
)
from .progressions import ProgressionError, count_3aps
from .riesz import PreconditionError, RetryBudgetError
from .spectrum import SpectrumError, large_spectrum

EXIT_USAGE = 2
EXIT_PRECONDITION = 3
EXIT_VERIFICATION = 4
EXIT_BUDGET = 5

GUARD_BYTES_DEFAULT = 1 << 30

log = logging.getLogger("rothlab")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    """Seed, engine-constant overrides, and output destination for a run."""

    seed: int = 0
    constants: dict = field(default_factory=dict)
    out: str | None = None
    threads: int = 1

    def to_json(self) -> dict:
        return {"seed": self.seed, "constants": dict(self.constants),
                "out": self.out, "threads": self.threads}

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        return cls(seed=int(data.get("seed", 0)),
                   constants=dict(data.get("constants", {})),
                   out=data.get("out"),
                   threads=int(data.get("threads", 1)))

    def engine_config(self) -> EngineConfig:
        base = DEFAULT_CONFIG.to_json()
        allowed = {f.name: f.type for f in fields(EngineConfig)}
        for key, value in self.constants.items():
            if key not in allowed:
                raise UsageError(f"unknown engine constant {key!r}")
            current = base[key]
            base[key] = type(current)(value) if not isinstance(current, str) else str(value)
        return EngineConfig.from_json(base)


def _guard_bytes() -> int:
    raw = os.environ.get("ROTHLAB_GUARD_BYTES", "")
    try:
        return int(raw) if raw else GUARD_BYTES_DEFAULT
    except ValueError:
        raise UsageError(f"ROTHLAB_GUARD_BYTES is not an integer: {raw!r}")


def _check_enumeration(order: int):
    # a handful of complex-valued work arrays of the group's size
    needed = 64 * order
    cap = _guard_bytes()
    if needed > cap:
        raise GuardError(
            f"order {order} needs about {needed} bytes, over the cap {cap}")


def _parse_group(args) -> Group:
    if getattr(args, "factors", None):
        factors = tuple(int(v) for v in _parse_ints(args.factors))
        if not factors or any(f < 1 for f in factors):
            raise UsageError(f"invalid factors {args.factors!r}")
        return Group(factors)
    if getattr(args, "modulus", None) is None:
        raise UsageError("one of --modulus or --factors is required")
    if args.modulus < 1:
        raise UsageError(f"modulus must be positive, got {args.modulus}")
    return cyclic(args.modulus)


def _parse_ints(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(tok) for tok in text.split(",")]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}")


def _residues(group: Group, args) -> GroupSubset:
    if getattr(args, "file", None):
        with open(args.file) as fh:
            data = json.load(fh)
        elems = data["elements"] if isinstance(data, dict) else data
        elems = [int(e) for e in elems]
    else:
        elems = _parse_ints(args.set if args.set is not None else "")
    for e in elems:
        if not 0 <= e < group.order:
            raise UsageError(f"element {e} outside residues 0..{group.order - 1}")
    return GroupSubset.from_indices(group, elems)


def _emit(payload: dict, out: str | None, canonical: bool = False):
    if canonical:
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    else:
        text = json.dumps(payload, sort_keys=True, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text + "\n")


def _cmd_count(args) -> int:
    group = _parse_group(args)
    _check_enumeration(group.order)
    subset = _residues(group, args)
    pc = count_3aps(subset)
    _emit({"total": pc.total, "nontrivial": pc.nontrivial}, args.out)
    return 0


def _cmd_spectrum(args) -> int:
    group = _parse_group(args)
    _check_enumeration(group.order)
    subset = _residues(group, args)
    mu = GroupMeasure.haar(group)
    report = large_spectrum(group, subset.mask.astype(float), mu, args.eps)
    _emit({
        "eps": report.eps,
        "l1": report.l1,
        "l2": report.l2,
        "ratio": report.ratio,
        "threshold": report.threshold,
        "characters": list(report.char_indices),
        "magnitudes": list(report.magnitudes),
    }, args.out)
    return 0


def _cmd_bohr(args) -> int:
    group = _parse_group(args)
    _check_enumeration(group.order)
    freqs = tuple(_parse_ints(args.frequencies))
    widths = tuple(float(w) for w in args.widths.split(",")) if args.widths else ()
    if len(freqs) != len(widths):
        raise UsageError("frequencies and widths must have matching lengths")
    b = BohrSet(group, freqs, widths)
    if args.dilate is not None:
        b = b.dilate(args.dilate)
    regularity = None
    if args.regularize:
        b, rep = find_regular_dilate(b)
        regularity = {"scale": b.scale, "dimension": rep.dimension,
                      "passed": rep.passed}
    _emit({
        "bohr": b.to_json(),
        "scale": b.scale,
        "rank": b.rank,
        "size": int(b.size()),
        "density": b.density(),
        "dimension": dimension_estimate(b),
        "regularity": regularity,
        "members": [int(x) for x in b.members().indices()] if args.members else None,
    }, args.out)
    return 0


def _cmd_construct(args) -> int:
    if args.method == "behrend":
        if (args.dimension is None) != (args.half_base is None):
            raise UsageError("give both --dimension and --half-base or neither")
        s = behrend(args.n, args.dimension, args.half_base)
    elif args.method == "elkin":
        s = elkin(args.n, thickness=args.thickness)
    elif args.method == "greedy":
        s = greedy_ap_free(args.n)
    else:
        seed = int(np.random.SeedSequence(args.seed).generate_state(2)[0])
        s = random_set(args.n, args.alpha, seed=seed)
    payload = s.to_json()
    payload["meta"] = s.meta
    _emit(payload, args.out)
    return 0


def _cmd_verify(args) -> int:
    if args.file:
        with open(args.file) as fh:
            s = IntegerSet.from_json(json.load(fh))
    else:
        elems = _parse_ints(args.set if args.set is not None else "")
        if args.n is None:
            raise UsageError("--n is required with --set")
        s = IntegerSet(args.n, tuple(sorted(set(elems))))
    free, witness = verify_ap_free(s, guard=args.guard)
    _emit({"N": s.n, "size": s.size, "free": free,
           "witness": list(witness) if witness else None}, args.out)
    return 0


def _cmd_engine(args) -> int:
    group = _parse_group(args)
    _check_enumeration(group.order)
    run = RunConfig(seed=args.seed,
                    constants=dict(kv.split("=", 1) for kv in args.constant),
                    out=args.out, threads=args.threads)
    config = run.engine_config()
    set_seed, engine_seed = (int(w) for w in
                             np.random.SeedSequence(run.seed).generate_state(2))
    if args.density is not None:
        if not 0.0 < args.density <= 1.0:
            raise UsageError(f"density {args.density} outside (0, 1]")
        rng = np.random.default_rng(set_seed)
        size = max(1, round(args.density * group.order))
        mask = np.zeros(group.order, dtype=bool)
        mask[rng.choice(group.order, size=size, replace=False)] = True
        subset = GroupSubset(group, mask)
    else:
        subset = _residues(group, args)
    log.info("engine=%s group order %d |A|=%d", args.engine, group.order,
             subset.cardinality)
    if args.engine == "energy":
        cert = roth_engine_energy(BohrSet(group, (), ()), subset, config=config,
                                  seed=engine_seed)
    else:
        cert = roth_engine_main(group, subset, config=config, seed=engine_seed)
    _emit(cert.to_json(), run.out, canonical=True)
    kind = cert.outcome.get("kind")
    log.info("outcome: %s after %d steps", kind, len(cert.steps))
    return EXIT_BUDGET if kind == "budget_exhausted" else 0


def _cmd_replay(args) -> int:
    with open(args.certificate) as fh:
        payload = json.load(fh)
    report = replay_certificate(payload)
    _emit({"matched": report.matched, "reverified": report.reverified,
           "passed": report.passed, "detail": report.detail}, args.out)
    return 0 if report.passed else EXIT_VERIFICATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rothlab",
        description="Progression counting, Bohr set experiments, and "
                    "certificate-producing density-increment engines.",
        epilog="Machine-readable JSON goes to stdout; logs go to stderr. "
               "ROTHLAB_GUARD_BYTES caps enumeration memory.")
    parser.add_argument("--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_group_args(p):
        p.add_argument("--modulus", type=int, help="cyclic group order")
        p.add_argument("--factors", help="invariant factors, comma separated")

    def add_set_args(p):
        p.add_argument("--set", help="comma-separated residues")
        p.add_argument("--file", help="JSON file with an elements array")

    def add_out(p):
        p.add_argument("--out", help="write JSON here instead of stdout")

    p = sub.add_parser("count", help="exact 3AP count of a residue set")
    add_group_args(p); add_set_args(p); add_out(p)
    p.set_defaults(func=_cmd_count)

    p = sub.add_parser("spectrum", help="large spectrum of a residue set")
    add_group_args(p); add_set_args(p); add_out(p)
    p.add_argument("--eps", type=float, required=True)
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("bohr", help="Bohr set size, dimension, regularization")
    add_group_args(p); add_out(p)
    p.add_argument("--frequencies", default="", help="comma-separated characters")
    p.add_argument("--widths", default="", help="comma-separated widths")
    p.add_argument("--dilate", type=float, help="extra dilation factor")
    p.add_argument("--regularize", action="store_true",
                   help="search for a regular dilate first")
    p.add_argument("--members", action="store_true", help="include the member list")
    p.set_defaults(func=_cmd_bohr)

    p = sub.add_parser("construct", help="progression-free set generators")
    p.add_argument("--method", required=True,
                   choices=["behrend", "elkin", "greedy", "random"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.5, help="random method density")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dimension", type=int)
    p.add_argument("--half-base", dest="half_base", type=int)
    p.add_argument("--thickness", type=int, default=2)
    add_out(p)
    p.set_defaults(func=_cmd_construct)

    p = sub.add_parser("verify", help="exhaustive progression-freeness oracle")
    add_set_args(p)
    p.add_argument("--n", type=int, help="range bound for --set input")
    p.add_argument("--guard", type=int, default=100_000)
    add_out(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("engine", help="run a density-increment engine")
    add_group_args(p); add_set_args(p); add_out(p)
    p.add_argument("--engine", choices=["energy", "main"], default="main")
    p.add_argument("--density", type=float,
                   help="sample a random set of this density instead of --set")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--constant", action="append", default=[],
                   metavar="NAME=VALUE", help="override an engine constant")
    p.add_argument("--threads", type=int, default=1,
                   help="reserved; runs are currently single-threaded")
    p.set_defaults(func=_cmd_engine)

    p = sub.add_parser("replay", help="re-verify an engine certificate")
    p.add_argument("certificate", help="certificate JSON file")
    add_out(p)
    p.set_defaults(func=_cmd_replay)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, format="%(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        log.error("usage: %s", exc)
        return EXIT_USAGE
    except (EntryCheckError, PreconditionError, GuardError, SpectrumError,
            ProgressionError, ConstructionError, RegularitySearchError) as exc:
        log.error("precondition: %s", exc)
        return EXIT_PRECONDITION
    except VerificationError as exc:
        log.error("verification: %s", exc)
        return EXIT_VERIFICATION
    except RetryBudgetError as exc:
        log.error("budget: %s", exc)
        return EXIT_BUDGET
    except FileNotFoundError as exc:
        log.error("missing file: %s", exc)
        return EXIT_USAGE
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        log.error("parse: %s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
