"""Command-line front end: check / classify / export.

Exit codes: 0 the property holds, 1 violated (witness printed as a timed
word with fractional timestamps), 2 refused (undecidable class, resource cap,
or an inconclusive bounded search) with the reason, 3 usage or parse errors.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from typing import Optional

from . import export
from .deciders import (
    OpacityVerdict,
    UndecidableClass,
    check_bounded,
    check_exists,
    check_opacity,
    is_oera,
)
from .model import ModelError, parse_model
from .observers import Dynamic, FirstN, ObservationCapExceeded, Static, unfold_first_n, unfold_tau, normalize_sequence
from .oracle import oracle_check
from .regions import RegionCapExceeded, augment_ticks, build_region_automaton

EXIT_HOLDS = 0
EXIT_VIOLATED = 1
EXIT_REFUSED = 2
EXIT_USAGE = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise _UsageError(f"bad rational {text!r}") from exc


def parse_observation(text: str):
    kind, _, rest = text.partition(":")
    try:
        if kind == "first":
            return FirstN(int(rest))
        if kind == "dynamic":
            return Dynamic(int(rest))
        if kind == "static":
            times = tuple(parse_rational(p) for p in rest.split(",")) if rest else ()
            return Static(times)
    except ValueError as exc:
        raise _UsageError(f"bad observation spec {text!r}: {exc}") from exc
    raise _UsageError(f"bad observation spec {text!r} (want first:N, static:LIST, or dynamic:N)")


def build_parser() -> _Parser:
    parser = _Parser(prog="topaq", description="timed-opacity verification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="decide an opacity property")
    check.add_argument("--mode", required=True, choices=["exists", "weak", "full"])
    check.add_argument("--obs", help="first:N | static:t1,t2,... | dynamic:N")
    check.add_argument("--engine", default="auto", choices=["auto", "discrete", "oera", "oracle"])
    check.add_argument("--horizon", help="oracle horizon (rational)")
    check.add_argument("--granularity", help="oracle granularity (rational)")
    check.add_argument("--max-steps", type=int, help="oracle step budget")
    check.add_argument("--scale", action="store_true", help="scale non-integer model constants")
    check.add_argument("file")

    classify = sub.add_parser("classify", help="report the automaton's class and applicable deciders")
    classify.add_argument("--scale", action="store_true")
    classify.add_argument("file")

    exp = sub.add_parser("export", help="export the model or derived automata")
    exp.add_argument("--what", default="ta", choices=["ta", "region-automaton", "tick"])
    exp.add_argument("--format", default="dot", choices=["dot", "json"])
    exp.add_argument("--obs", help="first:N for --what tick (default first:1)")
    exp.add_argument("--scale", action="store_true")
    exp.add_argument("file")
    return parser


def _load(path: str, scale: bool):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read(), scale=scale)


def _report(verdict: OpacityVerdict, mode: str) -> int:
    if verdict.holds is True:
        print(f"{mode} opacity: holds")
        return EXIT_HOLDS
    if verdict.holds is False:
        print(f"{mode} opacity: violated" + (f" ({verdict.side})" if verdict.side else ""))
        if verdict.witness is not None:
            print(f"witness: {verdict.witness}")
        if verdict.note:
            print(f"note: {verdict.note}")
        return EXIT_VIOLATED
    print(f"{mode} opacity: inconclusive (no violation found within the search bounds)")
    return EXIT_REFUSED


def _run_check(args) -> int:
    ta = _load(args.file, args.scale)
    horizon = parse_rational(args.horizon) if args.horizon else None
    granularity = parse_rational(args.granularity) if args.granularity else None
    sel = parse_observation(args.obs) if args.obs else None

    if args.engine == "oracle":
        if isinstance(sel, Dynamic):
            print("refused: the dynamic attacker has no executable projection; "
                  "the oracle supports first:N and static:LIST only")
            return EXIT_REFUSED
        verdict = oracle_check(ta, args.mode, sel, horizon=horizon,
                               max_steps=args.max_steps, granularity=granularity)
        return _report(verdict.as_opacity_verdict(), args.mode)

    if args.mode == "exists":
        if sel is None:
            return _report(check_exists(ta), "existential")
        if isinstance(sel, FirstN):
            return _report(check_exists(unfold_first_n(ta, sel.n)), "existential")
        if isinstance(sel, Static):
            from .regions import force_integer_actions

            tau = normalize_sequence(sel.times)
            base = force_integer_actions(ta) if ta.time_domain == "discrete" else ta
            factor = len({t - (t.numerator // t.denominator) for t in tau} - {Fraction(0)}) + 1
            verdict = check_exists(unfold_tau(base, tau))
            if verdict.witness is not None:
                verdict = OpacityVerdict(
                    verdict.holds,
                    verdict.witness.scaled(Fraction(1, factor)),
                    verdict.side,
                    "witness uses the normalized switch-time sequence",
                )
            return _report(verdict, "existential")
        print("refused: existential opacity against a dynamic attacker is not supported")
        return EXIT_REFUSED

    if sel is not None:
        return _report(check_bounded(ta, sel, args.mode), args.mode)
    return _report(check_opacity(ta, args.mode, engine=args.engine), args.mode)


def _run_classify(args) -> int:
    ta = _load(args.file, args.scale)
    eps = ta.has_epsilon_edges()
    oera = is_oera(ta)
    print(f"time domain: {ta.time_domain}")
    print(f"locations: {len(ta.locations)}")
    print(f"actions: {len(ta.actions)}")
    print(f"clocks: {len(ta.clocks)}")
    print(f"epsilon transitions: {'yes' if eps else 'no'}")
    print(f"observable ERA: {'yes' if oera else 'no'}")
    deciders = ["exists (region reachability)", "bounded attacker (first:N / static / dynamic)",
                "oracle (bounded enumeration, semi-decision)"]
    if ta.time_domain == "discrete":
        deciders.append("weak/full (discrete-time engine)")
    if oera:
        deciders.append("weak/full (observable-ERA engine)")
    if ta.time_domain == "dense" and not oera:
        if len(ta.clocks) == 1 and not eps:
            print("weak/full unbounded: decidable for one-clock automata without "
                  "silent edges but not primitive recursive; no exact engine here")
        else:
            print("weak/full unbounded: undecidable for this class "
                  "(dense time, not an observable ERA)")
    print("applicable deciders: " + "; ".join(deciders))
    return EXIT_HOLDS


def _run_export(args) -> int:
    from .observers import tick_construction

    ta = _load(args.file, args.scale)
    if args.what == "ta":
        obj = ta
        text = export.ta_to_dot(obj) if args.format == "dot" else export.ta_to_json(obj)
    else:
        if args.what == "tick":
            from .regions import force_integer_actions

            sel = parse_observation(args.obs) if args.obs else FirstN(1)
            if not isinstance(sel, FirstN):
                raise _UsageError("--what tick takes --obs first:N")
            base = force_integer_actions(ta) if ta.time_domain == "discrete" else ta
            subject = tick_construction(base, sel.n)
        else:
            subject = augment_ticks(ta) if ta.time_domain == "discrete" else ta
        ra = build_region_automaton(subject)
        text = (
            export.region_automaton_to_dot(ra)
            if args.format == "dot"
            else export.region_automaton_to_json(ra)
        )
    sys.stdout.write(text)
    return EXIT_HOLDS


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "check":
            return _run_check(args)
        if args.command == "classify":
            return _run_classify(args)
        return _run_export(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UndecidableClass as exc:
        print(f"refused: {exc}")
        return EXIT_REFUSED
    except (RegionCapExceeded, ObservationCapExceeded) as exc:
        print(f"refused: {exc}")
        return EXIT_REFUSED


if __name__ == "__main__":
    sys.exit(main())
