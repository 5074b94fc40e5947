"""The tmk command line tool.

Exit codes: 0 success, 1 validation or conformance failure, 2 parse failure,
3 runtime error (bad schema, exhausted script, missing file...).  Diagnostics
go to stderr; artifacts (JSON, DOT) go to stdout or --out.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from . import artifacts, dot
from .diagnostics import Diagnostic, ParseResult, TmError, has_errors
from .dsl import parse_model
from .eventgrammar import (
    STAR_DEFAULT,
    check_membership,
    derive_trace,
    grammar_to_behavior,
    parse_grammar,
)
from .events import parse_events
from .fluents import parse_ec, replay_narrative, run_narrative
from .sim import POLICY_FIRST, POLICY_SCRIPT, SimConfig, Simulation, check_trace
from .statics import validate_static

OK, FAIL, PARSE_FAIL, RUNTIME = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(RUNTIME, f"cannot read {path}: {exc.strerror or exc}") from exc


def _emit_diags(diags: list[Diagnostic]) -> None:
    for d in diags:
        print(d.render(), file=sys.stderr)


def _unwrap(result: ParseResult):
    """Print diagnostics; exit 2 on syntax failure, 1 on validation errors."""
    _emit_diags(result.diagnostics)
    if result.value is None:
        raise CliError(PARSE_FAIL, "parse failed")
    if has_errors(result.diagnostics):
        raise CliError(FAIL, "validation failed")
    return result.value


def _output(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _load_json(path: str):
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise CliError(RUNTIME, f"{path} is not valid JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands


def _cmd_validate(args) -> int:
    result = parse_model(_read(args.model))
    _emit_diags(result.diagnostics)
    if result.value is None:
        return PARSE_FAIL
    diags = list(result.diagnostics)
    static_diags = validate_static(result.value, lenient=args.lenient or None)
    _emit_diags([d for d in static_diags if d not in diags])
    diags += static_diags
    for events_path in args.events:
        ev = parse_events(_read(events_path), result.value)
        _emit_diags(ev.diagnostics)
        if ev.value is None:
            return PARSE_FAIL
        diags += ev.diagnostics
    errors = sum(1 for d in diags if d.is_error)
    warnings = len(diags) - errors
    print(f"{args.model}: {errors} error(s), {warnings} warning(s)")
    return FAIL if errors else OK


def _cmd_sim(args) -> int:
    model = _unwrap(parse_model(_read(args.model)))
    catalog = _unwrap(parse_events(_read(args.events), model))
    config = SimConfig()
    if args.config is not None:
        config = SimConfig.from_document(_load_json(args.config))
    if args.lenient:
        config.lenient = True
    sim = Simulation(model, catalog, args.behavior, config)
    trace = sim.run(policy=args.policy, max_ticks=args.max_ticks)
    _output(artifacts.serialize(trace), args.out)
    for flag in trace.flags:
        print(f"note: {flag}", file=sys.stderr)
    return OK


def _find_model(events_path: str, explicit: Optional[str]) -> str:
    if explicit is not None:
        return explicit
    candidates = sorted(Path(events_path).resolve().parent.glob("*.tm"))
    if len(candidates) != 1:
        raise CliError(
            RUNTIME,
            f"cannot infer model next to {events_path} "
            f"({len(candidates)} .tm files); pass --model",
        )
    return str(candidates[0])


def _cmd_check_trace(args) -> int:
    trace = artifacts.deserialize(_read(args.trace))
    if not hasattr(trace, "entries"):
        raise CliError(RUNTIME, f"{args.trace} is not a trace artifact")
    model_path = _find_model(args.events, args.model)
    model = _unwrap(parse_model(_read(model_path)))
    catalog = _unwrap(parse_events(_read(args.events), model))
    behavior = catalog.behaviors.get(trace.behavior)
    if behavior is None:
        raise CliError(RUNTIME, f"trace names unknown behavior {trace.behavior!r}")
    report = check_trace(trace, catalog, behavior)
    if report.ok:
        print(f"{args.trace}: conformant ({len(trace.entries)} firings)")
        return OK
    print(f"{args.trace}: violation at entry {report.violation_index}: {report.reason}")
    return FAIL


def _cmd_dot(args) -> int:
    if args.input.endswith(".json"):
        artifact = artifacts.deserialize(_read(args.input))
        if hasattr(artifact, "precedes"):
            _output(dot.trace_graph_to_dot(artifact), args.out)
        elif hasattr(artifact, "states"):
            _output(dot.timeline_to_dot(artifact), args.out)
        else:
            raise CliError(RUNTIME, f"no DOT rendering for {args.input}")
        return OK
    model = _unwrap(parse_model(_read(args.input)))
    if args.behavior is not None:
        if args.events is None:
            raise CliError(RUNTIME, "--behavior needs --events")
        catalog = _unwrap(parse_events(_read(args.events), model))
        behavior = catalog.behaviors.get(args.behavior)
        if behavior is None:
            raise CliError(RUNTIME, f"no behavior named {args.behavior!r}")
        _output(dot.behavior_to_dot(catalog, behavior), args.out)
    else:
        _output(dot.static_to_dot(model), args.out)
    return OK


def _cmd_eg(args) -> int:
    grammar = _unwrap(parse_grammar(_read(args.schema)))
    if args.action == "parse":
        roots = ", ".join(r.name for r in grammar.roots())
        print(f"schema {grammar.name}: {len(grammar.rules)} rule(s), roots: {roots}")
        return OK
    if args.action == "derive":
        graph, warns = derive_trace(
            grammar, seed=args.seed, star_max=args.star_max, plus_max=args.plus_max
        )
        _emit_diags(warns)
        _output(artifacts.serialize(graph), args.out)
        return OK
    if args.action == "check":
        graph = artifacts.deserialize(_read(args.graph))
        if not hasattr(graph, "precedes"):
            raise CliError(RUNTIME, f"{args.graph} is not a trace_graph artifact")
        report = check_membership(grammar, graph)
        _emit_diags(report.warnings)
        if report.ok:
            print(f"{args.graph}: member of {grammar.name}")
            return OK
        print(f"{args.graph}: not a member ({report.constraint}): {report.reason}")
        return FAIL
    catalog, _behavior = grammar_to_behavior(grammar, args.root)
    _output(artifacts.serialize(catalog), args.out)
    return OK


def _load_narrative(path: str) -> list[tuple[int, str]]:
    doc = _load_json(path)
    if isinstance(doc, dict) and "narrative" in doc:
        doc = doc["narrative"]
    if not isinstance(doc, list):
        raise CliError(RUNTIME, f"{path}: expected a list of [time, event] pairs")
    out = []
    for i, item in enumerate(doc):
        if not isinstance(item, list) or len(item) != 2:
            raise CliError(RUNTIME, f"{path}[{i}]: expected a [time, event] pair")
        out.append((int(item[0]), str(item[1])))
    return out


def _cmd_ec(args) -> int:
    domain = _unwrap(parse_ec(_read(args.domain)))
    if args.action == "run":
        timeline = run_narrative(domain, _load_narrative(args.narrative))
        _output(artifacts.serialize(timeline), args.out)
        return OK
    if args.action == "check":
        narrative = _load_narrative(args.narrative)
        direct = run_narrative(domain, narrative)
        replayed = replay_narrative(domain, narrative)
        if direct == replayed:
            print(f"{args.narrative}: direct and replayed timelines agree")
            return OK
        for t, (a, b) in enumerate(zip(direct.states, replayed.states)):
            if a != b:
                print(
                    f"{args.narrative}: timelines diverge at t={t}: "
                    f"direct {sorted(a)} vs replayed {sorted(b)}"
                )
                break
        return FAIL
    from .fluents import axioms_to_tm

    model, catalog, _behavior = axioms_to_tm(domain)
    if args.model_out is not None:
        Path(args.model_out).write_text(artifacts.serialize(model))
    _output(artifacts.serialize(catalog), args.out)
    return OK


# ---------------------------------------------------------------------------
# argument wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tmk", description="thinging-machine modeling kit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model and optional events files")
    p.add_argument("model", help="a .tm model file")
    p.add_argument("events", nargs="*", help=".ev events files bound to the model")
    p.add_argument("--lenient", action="store_true", help="allow transfer->process flows")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("sim", help="run a behavior and emit the trace")
    p.add_argument("model")
    p.add_argument("events")
    p.add_argument("--behavior", required=True)
    p.add_argument("--policy", choices=[POLICY_FIRST, POLICY_SCRIPT], default=POLICY_FIRST)
    p.add_argument("--max-ticks", type=int, default=100)
    p.add_argument("--config", help="JSON simulation config (tokens, inputs, script)")
    p.add_argument("--lenient", action="store_true")
    p.add_argument("--out", help="write the trace here instead of stdout")
    p.set_defaults(func=_cmd_sim)

    p = sub.add_parser("check-trace", help="replay a trace against a behavior")
    p.add_argument("trace", help="a trace JSON artifact")
    p.add_argument("events", help="the .ev file the trace was produced from")
    p.add_argument("--model", help=".tm model (default: the unique one next to events)")
    p.set_defaults(func=_cmd_check_trace)

    p = sub.add_parser("dot", help="render a model, behavior or artifact as DOT")
    p.add_argument("input", help="a .tm model or a JSON artifact")
    p.add_argument("--events", help=".ev file (with --behavior)")
    p.add_argument("--behavior", help="render this behavior instead of the model")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_dot)

    p = sub.add_parser("eg", help="event-grammar commands")
    p.add_argument("action", choices=["parse", "derive", "check", "to-tm"])
    p.add_argument("schema", help="a .eg schema file")
    p.add_argument("graph", nargs="?", help="trace_graph JSON (for check)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--star-max", type=int, default=STAR_DEFAULT)
    p.add_argument("--plus-max", type=int, default=None, help="bound {+ +} repeats (default: star-max)")
    p.add_argument("--root", help="root rule for to-tm (default: first)")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_eg)

    p = sub.add_parser("ec", help="fluent-axiom commands")
    p.add_argument("action", choices=["run", "check", "to-tm"])
    p.add_argument("domain", help="a .ec axiom file")
    p.add_argument("narrative", nargs="?", help="narrative JSON (for run/check)")
    p.add_argument("--out")
    p.add_argument("--model-out", help="also write the compiled static model here")
    p.set_defaults(func=_cmd_ec)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "eg" and args.action == "check" and args.graph is None:
            raise CliError(RUNTIME, "eg check needs a trace_graph JSON argument")
        if args.command == "ec" and args.action in ("run", "check") and args.narrative is None:
            raise CliError(RUNTIME, f"ec {args.action} needs a narrative JSON argument")
        return args.func(args)
    except CliError as exc:
        if str(exc) not in ("parse failed", "validation failed"):
            print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except TmError as exc:
        print(f"error[{exc.code}]: {exc.message}", file=sys.stderr)
        return PARSE_FAIL if exc.code == "E_SYNTAX" else RUNTIME


if __name__ == "__main__":
    sys.exit(main())
