"""Command line entry point: ``solve``, ``experiment`` and ``generate``.

Exit status is 0 on success, 1 when a problem cannot be read or solved and 2
on usage errors.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import uuid
from typing import Callable, List, Optional

from dotenv import load_dotenv

from .engine import SimulationDeadlock, run
from .experiment import PRESETS, ExperimentSpec, preset, run_experiment, write_outputs
from .oracle import SearchSpaceTooLarge, brute_force
from .problem import (
    ProblemParseError,
    ProblemValidationError,
    describe,
    dump,
    load,
    random_adcop,
    random_maxdcsp,
)
from .pseudotree import DisconnectedGraphError, build_dfs
from .solver import INDUCED_WIDTH, WHOLE_GROUP, SolverConfig, SolverProtocolError

load_dotenv()

logger = logging.getLogger(__name__)

FAILURES = (
    OSError,
    ProblemParseError,
    ProblemValidationError,
    DisconnectedGraphError,
    SimulationDeadlock,
    SolverProtocolError,
    SearchSpaceTooLarge,
    ValueError,
)


def _list_of(cast: Callable) -> Callable[[str], List]:
    def parse(text: str) -> List:
        try:
            return [cast(part.strip()) for part in text.split(",") if part.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"invalid list {text!r}: {exc}")

    return parse


def _knob(symbol: str, minimum: int) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text == symbol:
            return text
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {symbol!r} or an integer, got {text!r}")
        if value < minimum:
            raise argparse.ArgumentTypeError(f"must be at least {minimum}, got {value}")
        return text

    return parse


def _knob_list(symbol: str, minimum: int) -> Callable[[str], List[str]]:
    single = _knob(symbol, minimum)
    return lambda text: [single(part.strip()) for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asymdpop", description="AsymDPOP solver toolkit for ADCOPs.")
    parser.add_argument("--log-level", default=os.getenv("LOG_LEVEL", "WARNING"))
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="solve one problem file")
    solve.add_argument("file")
    solve.add_argument("--kp", type=_knob(INDUCED_WIDTH, 2), default=INDUCED_WIDTH)
    solve.add_argument("--ke", type=_knob(WHOLE_GROUP, 1), default=WHOLE_GROUP)
    solve.add_argument("--root", type=int, default=None, help="pseudo tree root (default: highest degree)")
    solve.add_argument("--seed", type=int, default=0, help="scheduler seed")
    solve.add_argument("--trace", action="store_true", help="print the message log")
    solve.add_argument("--describe", action="store_true", help="print a problem summary first")
    solve.add_argument("--oracle", action="store_true", help="also report the brute-force optimum")

    experiment = commands.add_parser("experiment", help="run a parameter sweep")
    experiment.add_argument("--preset", choices=sorted(PRESETS))
    experiment.add_argument("--family", choices=["adcop", "maxdcsp"])
    experiment.add_argument("--agents", type=_list_of(int))
    experiment.add_argument("--density", type=_list_of(float))
    experiment.add_argument("--domain", type=_list_of(int))
    experiment.add_argument("--tightness", type=_list_of(float))
    experiment.add_argument("--max-cost", type=int)
    experiment.add_argument("--kp", type=_knob_list(INDUCED_WIDTH, 2))
    experiment.add_argument("--ke", type=_knob_list(WHOLE_GROUP, 1))
    experiment.add_argument("--instances", type=int)
    experiment.add_argument("--seed", type=int)
    experiment.add_argument("--oracle-cap", type=int)
    experiment.add_argument("--jobs", type=int)
    experiment.add_argument("--trace", action="store_true", help="write message logs next to the CSV")
    experiment.add_argument("--wall-time", action="store_true", help="fill the wall_ms column")
    experiment.add_argument("--out", default="results.csv")
    experiment.add_argument("--db", help="also store rows in this database URL")

    generate = commands.add_parser("generate", help="write a random problem file")
    generate.add_argument("--family", choices=["adcop", "maxdcsp"], default="adcop")
    generate.add_argument("--agents", type=int, required=True)
    generate.add_argument("--density", type=float, required=True)
    generate.add_argument("--domain", type=int, required=True)
    generate.add_argument("--tightness", type=float, default=0.5)
    generate.add_argument("--max-cost", type=int, default=100)
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--out", required=True)
    return parser


def _format_assignment(assignment) -> str:
    return " ".join(f"{agent}={value}" for agent, value in sorted(assignment.items()))


def solve_file(args: argparse.Namespace) -> int:
    problem = load(args.file)
    tree = build_dfs(problem, root=args.root)
    config = SolverConfig.parse(args.kp, args.ke)
    if args.describe:
        for key, value in describe(problem, tree).items():
            print(f"{key}: {value}")
        print(tree.dump())
    result = run(problem, tree, config, seed=args.seed, trace=args.trace)
    if args.trace:
        for line in result.trace:
            print(line)
    print(f"config: {config.label}")
    print(f"assignment: {_format_assignment(result.assignment)}")
    print(f"cost: {result.cost:g}")
    for name, value in result.metrics.as_dict().items():
        print(f"{name}: {value:g}" if isinstance(value, float) else f"{name}: {value}")
    if args.oracle:
        _, oracle_cost = brute_force(problem)
        print(f"oracle_cost: {oracle_cost:g}")
    for key, value in result.metadata.items():
        print(f"metadata.{key}: {value}")
    return 0


def _experiment_spec(args: argparse.Namespace) -> ExperimentSpec:
    overrides = {
        "family": args.family,
        "agents": args.agents,
        "density": args.density,
        "domain": args.domain,
        "tightness": args.tightness,
        "max_cost": args.max_cost,
        "kp": args.kp,
        "ke": args.ke,
        "instances": args.instances,
        "seed": args.seed,
        "oracle_cap": args.oracle_cap,
        "jobs": args.jobs,
        "trace": args.trace,
        "wall_time": args.wall_time,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if args.preset:
        return preset(args.preset, **overrides)
    return ExperimentSpec(**overrides)


def _store_rows(url: str, rows) -> str:
    from sqlalchemy.orm import Session

    from .database import Base, make_engine
    from .models import ExperimentRun

    engine = make_engine(url)
    Base.metadata.create_all(bind=engine)
    batch_id = uuid.uuid4().hex
    with Session(engine) as session:
        session.add_all(ExperimentRun.from_row(batch_id, row) for row in rows.to_dict(orient="records"))
        session.commit()
    return batch_id


def experiment_command(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        spec = _experiment_spec(args)
    except ValueError as exc:
        parser.error(str(exc))
    rows = run_experiment(spec)
    paths = write_outputs(rows, args.out, spec)
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    if args.db:
        batch_id = _store_rows(args.db, rows)
        print(f"batch: {batch_id}")
    return 0


def generate_command(args: argparse.Namespace) -> int:
    if args.family == "maxdcsp":
        problem = random_maxdcsp(args.agents, args.density, args.domain, args.tightness, seed=args.seed)
    else:
        problem = random_adcop(args.agents, args.density, args.domain, max_cost=args.max_cost, seed=args.seed)
    dump(problem, args.out)
    print(f"wrote {args.out}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper())
    try:
        if args.command == "solve":
            return solve_file(args)
        if args.command == "experiment":
            return experiment_command(args, parser)
        try:
            return generate_command(args)
        except ValueError as exc:
            parser.error(str(exc))
    except FAILURES as exc:
        print(f"asymdpop: {exc}", file=sys.stderr)
        return 1
    return 0
