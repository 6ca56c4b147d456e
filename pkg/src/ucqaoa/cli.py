"""Command-line entry point: ``ucqaoa {gen,compile,solve,baseline,eval,bench}``."""

from __future__ import annotations

import argparse
import io
import json
import logging
import re
import sys
from dataclasses import replace
from pathlib import Path

import yaml

from .errors import CapacityError, CompileError, ConfigurationError, ValidationError
from .model import PenaltyFactors, Schedule, evaluate_schedule, generate_synthetic, parse_instance
from .pipeline import BENCH_COLUMNS, PipelineConfig, bench, run_baselines, solve_pipeline
from .qubo import compile_qubo, sparsity_report, write_qubo

log = logging.getLogger("ucqaoa")


class _Loader(yaml.SafeLoader):
    """SafeLoader without YAML 1.1 yes/no/on/off booleans, so an ``on:`` key stays a string."""


_Loader.yaml_implicit_resolvers = {
    k: [(tag, rx) for tag, rx in v if tag != "tag:yaml.org,2002:bool"]
    for k, v in yaml.SafeLoader.yaml_implicit_resolvers.items()
}
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:bool", re.compile(r"^(?:true|True|TRUE|false|False|FALSE)$"), list("tTfF")
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--config", type=Path, help="JSON/YAML file mirroring PipelineConfig")
    common.add_argument("--out", type=Path, help="output file (default: stdout)")
    common.add_argument("--format", choices=("human", "structured"), default="human")
    common.add_argument("--penalty-a", type=float)
    common.add_argument("--penalty-b", type=float)
    common.add_argument("--penalty-c", type=float)
    common.add_argument("--penalty-d", type=float)
    common.add_argument("--subproblem-size", type=int)
    common.add_argument("--coarsest-size", type=int)
    common.add_argument("--n-max", type=int, help="largest subproblem simulated as a state vector")
    common.add_argument("--shots", type=int)
    common.add_argument("--demand-mode", choices=("per_period", "verbatim"))
    common.add_argument("--min-down-mode", choices=("verbatim", "forward"))
    common.add_argument("--exact-expectations", action="store_true", default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="ucqaoa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", parents=[common], help="write a synthetic instance")
    p.add_argument("--units", type=int, required=True)
    p.add_argument("--horizon", type=int, default=24)

    p = sub.add_parser("compile", parents=[common], help="export the QUBO and print its sparsity")
    p.add_argument("instance", type=Path)
    p.add_argument("--qubo-out", type=Path, help="coordinate-format QUBO file")

    p = sub.add_parser("solve", parents=[common], help="run the multilevel pipeline")
    p.add_argument("instance", type=Path)
    p.add_argument("--figures", type=Path, help="directory for PNG figures")
    p.add_argument("--baselines", action="store_true", help="also run SA / exact baselines")
    p.add_argument("--no-timings", action="store_true", help="omit wall times so seeded output is reproducible")

    p = sub.add_parser("baseline", parents=[common], help="simulated annealing and exact enumeration")
    p.add_argument("instance", type=Path)

    p = sub.add_parser("eval", parents=[common], help="cost report for a given schedule")
    p.add_argument("instance", type=Path)
    p.add_argument("schedule", type=Path)

    p = sub.add_parser("bench", parents=[common], help="solver comparison table over synthetic instances")
    p.add_argument("--units", type=_int_list, default=[4, 6, 10])
    p.add_argument("--horizon", type=int, default=24)
    p.add_argument("--seeds", type=_int_list, default=[0])
    p.add_argument("--delimiter", default=",")
    p.add_argument("--figures", type=Path)
    return parser


def _read(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None


def load_config(args) -> PipelineConfig:
    doc = {}
    if args.config:
        doc = yaml.safe_load(_read(args.config)) or {}
        if not isinstance(doc, dict):
            raise ConfigurationError("config file must hold a mapping")
    config = PipelineConfig.from_dict(doc)
    pen = config.penalties
    overrides = {k: getattr(args, f"penalty_{k.lower()}") for k in "ABCD"}
    config.penalties = PenaltyFactors(**{k: (v if v is not None else getattr(pen, k)) for k, v in overrides.items()})
    for attr in ("subproblem_size", "coarsest_size", "demand_mode", "min_down_mode", "seed"):
        value = getattr(args, attr)
        if value is not None:
            setattr(config, attr, value)
    qiro = {}
    if args.n_max is not None:
        qiro["n_max"] = args.n_max
    if args.shots is not None:
        qiro["shots"] = args.shots
    if args.exact_expectations:
        qiro["exact_expectations"] = True
    if qiro:
        config.qiro = replace(config.qiro, **qiro)
    # re-run validation after overrides
    return PipelineConfig.from_dict(config.to_dict())


def _emit(args, doc, human: str):
    text = json.dumps(doc, indent=2) + "\n" if args.format == "structured" else human
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text)
    else:
        sys.stdout.write(text)


def _cost_lines(costs: dict) -> str:
    return (
        f"generation cost      {costs['generation_cost']:.6g}\n"
        f"penalized objective  {costs['penalized_objective']:.6g}\n"
        f"max |demand mismatch| {max(abs(v) for v in costs['demand_mismatch']):.6g} MW\n"
        f"violations           startup {costs['startup_inconsistency_count']}, "
        f"min-up {costs['min_up_violations']}, min-down {costs['min_down_violations']}\n"
    )


def cmd_gen(args, config):
    instance = generate_synthetic(args.units, args.horizon, config.seed)
    text = json.dumps(instance.to_dict(), indent=2) + "\n"
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)


def cmd_compile(args, config):
    instance = parse_instance(_read(args.instance))
    qubo = compile_qubo(instance, config.penalties, config.demand_mode, config.min_down_mode)
    report = sparsity_report(qubo)
    if args.qubo_out:
        with open(args.qubo_out, "w") as fh:
            write_qubo(qubo, fh)
    human = (
        f"variables      {report['n']}\n"
        f"dense elements {report['dense_elements']}\n"
        f"nonzeros       {report['nnz']}\n"
        f"density        {100 * report['density']:.3f}%\n"
    )
    _emit(args, report, human)


def cmd_solve(args, config):
    from . import report as figures

    instance = parse_instance(_read(args.instance))
    run = solve_pipeline(instance, config)
    if args.baselines:
        run.baselines = run_baselines(instance, config)
    doc = run.to_dict(timings=not args.no_timings)
    if args.figures:
        figures.plot_energy_trace(doc, args.figures / "energy_trace.png")
        figures.plot_schedule(doc, args.figures / "schedule.png")
    human = io.StringIO()
    human.write(f"levels      {' -> '.join(map(str, run.sizes))}\n")
    human.write(f"coarse      {run.coarse_energy:.6g}\nfinal       {run.energy:.6g}\n")
    for lv in run.levels[1:]:
        human.write(f"  level {lv['level']:2d}: {lv['accepted']} accepted / {lv['rejected']} rejected\n")
    human.write(_cost_lines(doc["costs"]))
    for name, entry in run.baselines.items():
        human.write(f"baseline {name}: " + (f"{entry['energy']:.6g}\n" if entry["status"] == "ok" else "not run\n"))
    if not args.no_timings:
        human.write(f"wall time   {run.wall_time:.2f} s\n")
    _emit(args, doc, human.getvalue())


def cmd_baseline(args, config):
    instance = parse_instance(_read(args.instance))
    doc = run_baselines(instance, config)
    human = "".join(
        f"{name:20s} " + (f"{e['energy']:.6g}  ({e['wall_time']:.2f} s)\n" if e["status"] == "ok" else f"not run: {e['reason']}\n")
        for name, e in doc.items()
    )
    _emit(args, doc, human)


def cmd_eval(args, config):
    instance = parse_instance(_read(args.instance))
    doc = yaml.load(_read(args.schedule), Loader=_Loader)
    if not isinstance(doc, dict) or "on" not in doc or "start" not in doc:
        raise ValidationError("schedule document needs 'on' and 'start' matrices")
    schedule = Schedule(doc["on"], doc["start"])
    costs = evaluate_schedule(instance, schedule, config.penalties, config.demand_mode, config.min_down_mode)
    _emit(args, {**schedule.to_dict(), **costs.to_dict()}, _cost_lines(costs.to_dict()))


def cmd_bench(args, config):
    from . import report as figures

    rows = bench(args.units, args.horizon, args.seeds, config)
    if args.figures:
        figures.plot_bench(rows, args.figures / "bench.png")
    if args.format == "structured":
        _emit(args, rows, "")
        return
    buf = io.StringIO()
    figures.write_table(rows, buf, BENCH_COLUMNS, args.delimiter)
    if args.out:
        args.out.write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


COMMANDS = {
    "gen": cmd_gen,
    "compile": cmd_compile,
    "solve": cmd_solve,
    "baseline": cmd_baseline,
    "eval": cmd_eval,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        config = load_config(args)
        COMMANDS[args.command](args, config)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (CapacityError, ConfigurationError, CompileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
