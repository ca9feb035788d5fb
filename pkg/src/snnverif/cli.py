"""Command-line front end.

Exit codes: 0 success, 1 domain failure (invalid network, false verdict,
state-space overflow, bad property), 2 I/O or usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import engine, prismgen
from .dtmc import StateSpaceOverflow, build_dtmc, default_max_states
from .pctl import FormulaSyntaxError, FragmentUnsupported, UnknownName, UnknownReward, check, parse_formula
from .snnrf import SnnrfError, load_snnrf, validate

OK, FAILED, USAGE = 0, 1, 2

log = logging.getLogger("snnverif")


class _Exit(Exception):
    def __init__(self, code: int, message: str = ""):
        super().__init__(message)
        self.code = code


def _load(path: str, lax: bool):
    try:
        spec, warnings = load_snnrf(path, strict=not lax)
    except OSError as exc:
        raise _Exit(USAGE, f"cannot read {path}: {exc.strerror or exc}") from None
    except UnicodeDecodeError as exc:
        raise _Exit(USAGE, f"cannot read {path}: {exc}") from None
    except SnnrfError as exc:
        raise _Exit(FAILED, f"{path}: {exc}") from None
    report = validate(spec)
    report.warnings[:0] = warnings
    return spec, report


def _valid(path: str, lax: bool):
    spec, report = _load(path, lax)
    for line in report.lines():
        print(f"{path}: {line}", file=sys.stderr)
    if not report.ok:
        raise _Exit(FAILED)
    return spec


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _Exit(USAGE, f"cannot write {out}: {exc.strerror or exc}") from None


def cmd_validate(args) -> int:
    spec, report = _load(args.file, args.lax)
    for line in report.lines():
        print(f"{args.file}: {line}", file=sys.stderr)
    if report.ok:
        print(f"{args.file}: ok ({len(spec.neurons)} neurons, {len(spec.edges)} edges)", file=sys.stderr)
        return OK
    return FAILED


def cmd_simulate(args) -> int:
    spec = _valid(args.file, args.lax)
    steps = spec.steps if args.steps is None else args.steps
    if steps < 0 or args.runs < 1:
        raise _Exit(USAGE, "--steps must be nonnegative and --runs positive")
    if args.runs > 1:
        if args.format == "svg":
            raise _Exit(USAGE, "--format svg draws a single run; drop --runs or use --format csv")
        freqs = engine.spike_frequencies(spec, steps, args.runs, args.seed)
        _write(engine.export_frequencies_csv(spec, freqs), args.output)
        return OK
    trace = engine.simulate(spec, steps, args.seed)
    text = engine.raster_svg(trace) if args.format == "svg" else engine.export_trace_csv(trace)
    _write(text, args.output)
    return OK


def cmd_plot(args) -> int:
    args.format, args.runs = "svg", 1
    return cmd_simulate(args)


def _properties(spec, inline: list[str] | None, use_all: bool) -> list[str]:
    """Inline properties replace the file's list unless --all asks for both."""
    if inline and not use_all:
        return list(inline)
    props = list(spec.properties)
    for p in inline or []:
        if p not in props:
            props.append(p)
    return props


def cmd_check(args) -> int:
    spec = _valid(args.file, args.lax)
    props = _properties(spec, args.property, args.all)
    if not props:
        raise _Exit(USAGE, "no properties: pass --property or --all with a file that lists some")
    formulas = []
    for text in props:
        try:
            formulas.append(parse_formula(text))
        except FormulaSyntaxError as exc:
            raise _Exit(FAILED, f"property {text!r}: {exc}") from None
    max_states = args.max_states if args.max_states is not None else default_max_states()
    try:
        dtmc = build_dtmc(spec, max_states)
    except StateSpaceOverflow as exc:
        raise _Exit(FAILED, str(exc)) from None
    log.info("%s: %d states, %d transitions", spec.name, len(dtmc), dtmc.num_transitions)
    records, all_true = [], True
    for text, f in zip(props, formulas):
        try:
            result = check(dtmc, f)
        except (FragmentUnsupported, UnknownName, UnknownReward) as exc:
            raise _Exit(FAILED, f"property {text!r}: {exc}") from None
        records.append(result.record(text))
        if result.kind == "verdict" and not result.value:
            all_true = False
    print(json.dumps(records, indent=2))
    if args.dump:
        _write(dtmc.dump(), args.dump)
    return OK if all_true else FAILED


def cmd_estimate(args) -> int:
    spec = _valid(args.file, args.lax)
    runs = args.runs or engine.hoeffding_runs(args.epsilon, args.delta)
    try:
        est = engine.estimate_bounded(spec, args.property, runs, args.confidence, args.seed, args.workers)
    except (FormulaSyntaxError, FragmentUnsupported, UnknownName) as exc:
        raise _Exit(FAILED, str(exc)) from None
    print(json.dumps({"property": args.property, **est.as_dict()}, indent=2))
    return OK


def cmd_export_prism(args) -> int:
    spec = _valid(args.file, args.lax)
    props = _properties(spec, args.property, True)
    try:
        model = prismgen.emit_model(spec)
        prop_text = prismgen.emit_properties(spec, props)
    except (prismgen.PrismGenError, FormulaSyntaxError, UnknownName) as exc:
        raise _Exit(FAILED, str(exc)) from None
    out = Path(args.out)
    name = prismgen.safe_name(spec.name)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.pm").write_text(model, encoding="utf-8")
        (out / f"{name}.props").write_text(prop_text, encoding="utf-8")
    except OSError as exc:
        raise _Exit(USAGE, f"cannot write into {out}: {exc.strerror or exc}") from None
    print(f"wrote {out / (name + '.pm')} and {out / (name + '.props')}", file=sys.stderr)
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="snnverif", description="Simulate and verify probabilistic spiking networks.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("file", help="SNN-RF network file")
        p.add_argument("--lax", action="store_true", help="downgrade unknown keys to warnings")
        p.set_defaults(func=func)
        return p

    command("validate", cmd_validate, "parse and validate a network file")

    p = command("simulate", cmd_simulate, "sample a trace (CSV or SVG raster) or an ensemble summary")
    p.add_argument("--steps", type=int, help="horizon (default: the file's simulate.steps)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=1, help="runs > 1 writes per-step spike frequencies")
    p.add_argument("--format", choices=("csv", "svg"), default="csv")
    p.add_argument("-o", "--output", help="output file (default: stdout)")

    p = command("plot", cmd_plot, "write a spike raster SVG of one run")
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")

    p = command("check", cmd_check, "build the exact DTMC and check properties")
    p.add_argument("--property", action="append", help="property text (repeatable)")
    p.add_argument("--all", action="store_true", help="check every property listed in the file")
    p.add_argument("--max-states", type=int, help="state-space limit (default: $SNNVERIF_MAX_STATES or 1000000)")
    p.add_argument("--dump", metavar="PATH", help="also write the explicit DTMC text")

    p = command("estimate", cmd_estimate, "Monte-Carlo estimate of a step-bounded property")
    p.add_argument("--property", required=True)
    p.add_argument("--runs", type=int, help="default: Hoeffding count for --epsilon/--delta")
    p.add_argument("--epsilon", type=float, default=0.02)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--confidence", type=float, default=0.99)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)

    p = command("export-prism", cmd_export_prism, "write <name>.pm and <name>.props")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--property", action="append", help="extra property text (repeatable)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except _Exit as exc:
        if str(exc):
            print(f"snnverif: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
