#!/usr/bin/env python3

import argparse
import asyncio
import random
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Sequence

from rich.progress import Progress

from apps.structured import send_plot_data, send_structured
from apps.text import send_text
from tioa import __version__
from tioa.analysis import Check, ModelResolver, game_for, run_check, run_param, run_robust
from tioa.errors import RobustaError
from tioa.game import build_zone_graph
from tioa.model import Tioa, model_factor, scale_constants, validate_spec
from tioa.parser import parse_number
from tioa.refinement import check_implementation
from tioa.search import RobustGame
from utils.config_validator import load_config
from utils.console import console, log, print_banner, set_debug
from utils.dump import save_zone_graph
from utils.report import Report, check_report, model_identity, param_report
from utils.suite_loader import load_suites, suite_key

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


def rational(text: str) -> Fraction:
    try:
        value = parse_number(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None
    if value <= 0:
        raise argparse.ArgumentTypeError(f"{text} is not a positive rational")
    return value


def non_negative(text: str) -> Fraction:
    try:
        value = parse_number(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"{text} is negative")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--limit-states", type=int, help="maximum symbolic states per game (exit code 3 beyond it)")
    common.add_argument("--seed", type=int, help="seed for randomized sampling")
    common.add_argument("--format", choices=("text", "structured"), help="report rendering")
    common.add_argument("--output", type=Path, help="write the structured report to this file")
    common.add_argument("--config", type=Path, help="settings file (default: config.py, then example-config.py)")
    common.add_argument("--debug", action="store_true", help="verbose logging")

    kinds = [c.value for c in Check]
    parser = argparse.ArgumentParser(prog="robusta", description="Robustness analysis of timed I/O specifications.")
    parser.add_argument("--version", action="version", version=f"robusta {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", parents=[common], help="consistency, usefulness, compatibility or refinement")
    check.add_argument("kind", choices=kinds)
    check.add_argument("models", nargs="+", help="path, path#Name or milner:N")

    robust = sub.add_parser("robust", parents=[common], help="the same checks under a fixed perturbation")
    robust.add_argument("kind", choices=kinds)
    robust.add_argument("models", nargs="+")
    robust.add_argument("--delta", type=non_negative, required=True)
    robust.add_argument("--strict", action="store_true", help="implementation warnings become errors")

    param = sub.add_parser("param", parents=[common], help="greatest admissible perturbation")
    param.add_argument("kind", choices=[k for k in kinds if k != Check.REFINEMENT.value])
    param.add_argument("models", nargs="+")
    param.add_argument("--delta-max", type=rational)
    param.add_argument("--epsilon", type=rational)
    param.add_argument("--method", choices=("cr", "bs", "both"))

    bench = sub.add_parser("bench", parents=[common], help="run a bundled benchmark suite")
    bench.add_argument("suite")
    bench.add_argument("--delta-max", type=rational)
    bench.add_argument("--epsilon", type=rational)
    bench.add_argument("--method", choices=("cr", "bs", "both"))
    bench.add_argument("--workers", type=int)
    bench.add_argument("--plot-data", type=Path, help="also write the rows as columns to this file")

    validate = sub.add_parser("validate", parents=[common], help="determinism, input-enabledness and implementation checks")
    validate.add_argument("models", nargs="+")

    dump = sub.add_parser("dump-graph", parents=[common], help="write the zone graph of a model or game to debug/")
    dump.add_argument("models", nargs="+")
    dump.add_argument("--kind", choices=[k for k in kinds if k != Check.REFINEMENT.value])
    dump.add_argument("--delta", type=non_negative)
    return parser


class Session:
    """Settings merged with command-line flags, and the models they refer to."""

    def __init__(self, args: argparse.Namespace, settings: dict[str, Any]):
        self.args = args
        self.settings = settings
        self.limit_states: int = args.limit_states or settings["LIMIT_STATES"]
        self.format: str = args.format or settings["REPORT_FORMAT"]
        self.resolver = ModelResolver(settings["COMPLETION_TARGET"])

    def setting(self, flag: str, key: str, convert=lambda v: v) -> Any:
        value = getattr(self.args, flag, None)
        return value if value is not None else convert(self.settings[key])

    def models(self) -> list[tuple[Tioa, str]]:
        return [(self.resolver.resolve(ref), ref) for ref in self.args.models]


async def emit(report: Report, session: Session):
    if session.format == "structured" or session.args.output:
        await send_structured(report, session.args.output)
    if session.format == "text":
        await send_text(report)


def cmd_check(session: Session) -> Report:
    pairs = session.models()
    outcome = run_check(Check(session.args.kind), [a for a, _ in pairs], session.limit_states)
    return check_report("check", outcome, pairs)


def cmd_robust(session: Session) -> Report:
    pairs = session.models()
    outcome = run_robust(
        Check(session.args.kind),
        [a for a, _ in pairs],
        session.args.delta,
        session.limit_states,
        session.args.strict or session.settings["STRICT_IMPLEMENTATION"],
    )
    return check_report("robust", outcome, pairs)


def cmd_param(session: Session) -> Report:
    pairs = session.models()
    outcome = run_param(
        Check(session.args.kind),
        [a for a, _ in pairs],
        session.setting("delta_max", "DELTA_MAX", lambda v: parse_number(str(v))),
        session.setting("epsilon", "EPSILON", lambda v: parse_number(str(v))),
        session.setting("method", "METHOD"),
        session.limit_states,
        session.settings["REPLAY_MAX_VISITS"],
    )
    return param_report(outcome, pairs)


async def run_bench(session: Session) -> Report:
    suites = load_suites()
    key = suite_key(session.args.suite)
    if key not in suites:
        raise ValueError(f"unknown suite {session.args.suite!r}; available: {', '.join(sorted(suites))}")
    settings = dict(session.settings, LIMIT_STATES=session.limit_states)
    suite = suites[key](settings, session.resolver)
    total = len(suite.cells())
    with Progress(console=console, transient=True) as progress:
        main_task = progress.add_task(f"[bold blue]{suite.name}", total=total)

        def advance(label: str):
            progress.update(main_task, description=f"[bold blue]{suite.name} [cyan]{label}[/cyan]", advance=1)

        rows = await suite.run(
            session.args.delta_max,
            session.args.epsilon,
            session.setting("method", "METHOD"),
            session.setting("workers", "BENCH_WORKERS"),
            advance,
        )
    if session.args.plot_data:
        await send_plot_data(rows, session.args.plot_data)
    failed = [row for row in rows if "error" in row]
    return Report(
        command="bench",
        analysis=suite.name,
        rows=rows,
        statistics={"rows": len(rows), "failed": len(failed)},
        exit_code=EXIT_RESOURCE if failed else EXIT_OK,
        message=f"{len(rows)} row(s), {len(failed)} failed",
    )


def cmd_validate(session: Session) -> Report:
    pairs = session.models()
    results: dict[str, Any] = {}
    ok = True
    strict = session.settings["STRICT_IMPLEMENTATION"]
    for a, _ in pairs:
        report = validate_spec(a)
        implementation = check_implementation(a, strict)
        results[a.name] = {
            "deterministic": report.deterministic,
            "input_enabled": report.input_enabled,
            "determinism_violations": [f"{v.location}:{v.action}" for v in report.violations],
            "input_gaps": [f"{g.location}:{g.action}" for g in report.gaps],
            "independent_progress": not implementation.progress,
            "output_urgency": not implementation.urgency,
        }
        ok = ok and report.ok
    return Report(
        command="validate",
        analysis="validate",
        models=[model_identity(a, ref) for a, ref in pairs],
        result={"models": results, "valid": ok},
        exit_code=EXIT_OK if ok else EXIT_NEGATIVE,
        message="all models are deterministic and input-enabled" if ok else "validation found problems",
    )


def cmd_dump(session: Session) -> Report:
    pairs = session.models()
    models = [a for a, _ in pairs]
    args = session.args
    if args.kind:
        game = RobustGame(game_for(Check(args.kind), models), session.limit_states)
        probe = game.solve(args.delta or Fraction(0))
        assert probe.result is not None
        graph, result, factor = probe.result.graph, probe.result, probe.factor
        name = f"{game.name}@{probe.delta}"
    else:
        if len(models) != 1:
            raise ValueError("dump-graph without --kind takes exactly one model")
        a = models[0]
        factor = model_factor(a)
        graph = build_zone_graph(scale_constants(a, factor).automaton, session.limit_states)
        result = None
        name = a.name
    path = save_zone_graph(name, graph, result, factor)
    return Report(
        command="dump-graph",
        analysis=args.kind or "zone-graph",
        models=[model_identity(a, ref) for a, ref in pairs],
        result={"path": None if path is None else str(path), "states": len(graph)},
        statistics={"states_explored": len(graph), "transitions": graph.graph.number_of_edges()},
        exit_code=EXIT_OK if path else EXIT_NEGATIVE,
        message=f"zone graph written to {path}" if path else "zone graph could not be written",
    )


COMMANDS = {
    "check": cmd_check,
    "robust": cmd_robust,
    "param": cmd_param,
    "validate": cmd_validate,
    "dump-graph": cmd_dump,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Runs one command and returns its exit code: 0 success, 1 negative result,
    2 usage or model error, 3 resource limit, 4 still won at the largest perturbation.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    set_debug(args.debug)
    settings = load_config(args.config)
    seed = args.seed if args.seed is not None else settings["SEED"]
    random.seed(seed)
    session = Session(args, settings)
    if session.format == "text" and console.is_terminal:
        print_banner()

    try:
        if args.command == "bench":
            report = asyncio.run(run_bench(session))
        else:
            report = COMMANDS[args.command](session)
    except RobustaError as e:
        log.error(f"{args.command}: {e}")
        log.debug("Error details", exc_info=True)
        return e.exit_code
    except ValueError as e:
        log.error(f"{args.command}: {e}")
        log.debug("Error details", exc_info=True)
        return EXIT_USAGE

    asyncio.run(emit(report, session))
    return report.exit_code


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        log.info("Robusta stopped by user.")
        sys.exit(130)
