import argparse
import logging
import sys
import typing
from pathlib import Path

from pydantic import ValidationError

from arc import report
from arc.detection import load_counts
from arc.experiment import ExperimentSession, sweep
from arc.model import ExperimentConfig, SimulationMethod

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
DEFAULT_CONFIG = Path("conf/experiment.toml")


def _probability_list(value: str) -> list[float]:
    try:
        return [float(p) for p in value.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected comma separated probabilities, got '{value}'")


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", type=Path, help=f"TOML or JSON experiment configuration (default {DEFAULT_CONFIG})")
    shared.add_argument("--layout", help="builtin layout, a name from the layouts file or a layout JSON path")
    shared.add_argument("--rounds", "-T", dest="T", type=int, help="number of syndrome measurement rounds")
    shared.add_argument("--basis", help="encoding basis of colour 0 then colour 1 code qubits, e.g. xz")
    shared.add_argument("--logical", type=int, choices=(0, 1), action="append", dest="logicals")
    shared.add_argument("--no-resets", dest="resets", action="store_const", const=False)
    shared.add_argument("--conditional-reset", dest="conditional_reset", action="store_const", const=True)
    shared.add_argument("--run-202", dest="run_202", action="store_const", const=True)
    shared.add_argument("--no-202", dest="run_202", action="store_const", const=False)
    shared.add_argument("--rounds-per-202", dest="rounds_per_202", type=int)
    shared.add_argument("--no-ff", dest="ff", action="store_const", const=False)
    shared.add_argument("--p", type=float, help="uniform error probability")
    shared.add_argument("--shots", type=int)
    shared.add_argument("--seed", type=int)
    shared.add_argument("--workers", type=int)
    shared.add_argument("--method", choices=[m.value for m in SimulationMethod])
    shared.add_argument("--output", type=Path, help="output directory")
    verbosity = shared.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true")
    verbosity.add_argument("--quiet", "-q", action="store_true")

    parser = argparse.ArgumentParser(prog="arc", description="Benchmark devices with alternating repetition codes.")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("layout", parents=[shared], help="write the layout with its colouring and schedule")
    commands.add_parser("build", parents=[shared], help="write the circuits of every instance")
    commands.add_parser("simulate", parents=[shared], help="simulate every instance and write the counts")
    decode = commands.add_parser("decode", parents=[shared], help="decode counts files")
    decode.add_argument("counts", type=Path, nargs="+")
    analyze = commands.add_parser("analyze", parents=[shared], help="decode and analyze counts files")
    analyze.add_argument("counts", type=Path, nargs="+")
    commands.add_parser("run", parents=[shared], help="simulate, decode and analyze end to end")
    sweep_parser = commands.add_parser("sweep", parents=[shared], help="run at several error probabilities")
    sweep_parser.add_argument("--ps", type=_probability_list, help="comma separated error probabilities")
    return parser


OVERRIDES = (
    "layout",
    "T",
    "basis",
    "logicals",
    "resets",
    "conditional_reset",
    "run_202",
    "rounds_per_202",
    "ff",
    "p",
    "shots",
    "seed",
    "workers",
    "method",
    "output",
)


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """Loads the configuration file, if any, and applies the command line overrides.

    :raises: FileNotFoundError for a missing configuration file, ValidationError for invalid values
    """
    if args.config is not None:
        config = ExperimentConfig.load(args.config)
    elif DEFAULT_CONFIG.exists():
        config = ExperimentConfig.load(DEFAULT_CONFIG)
    else:
        config = ExperimentConfig()

    updates = {name: getattr(args, name) for name in OVERRIDES if getattr(args, name, None) is not None}
    if "logicals" in updates:
        updates["logicals"] = sorted(set(updates["logicals"]))
    if updates.get("p") is not None:
        updates["noise"] = None
    if updates:
        config = ExperimentConfig.model_validate({**config.model_dump(), **updates})
    return config


def _print(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _layout(session: ExperimentSession, args: argparse.Namespace) -> None:
    output = session.config.output
    output.mkdir(parents=True, exist_ok=True)
    path = report.write_model(output / "layout.json", session.layout)
    _print(f"{session.layout.name}: {len(session.graph.code_qubits)} code qubits, {len(session.graph)} links -> {path}")


def _build(session: ExperimentSession, args: argparse.Namespace) -> None:
    for path in session.write_circuits(session.config.output):
        _print(str(path))


def _simulate(session: ExperimentSession, args: argparse.Namespace) -> None:
    session.simulate()
    for path in session.write_counts(session.config.output):
        _print(str(path))


def _load_all(session: ExperimentSession, paths: typing.Iterable[Path]) -> None:
    for path in paths:
        session.add_counts(load_counts(path))


def _decode(session: ExperimentSession, args: argparse.Namespace) -> None:
    _load_all(session, args.counts)
    session.decode()
    for instance in session.decoded_instances:
        summary = instance.summary()
        _print(f"{instance.key}: {summary.logical_errors} logical error(s) in {summary.shots} shots")
    session.write_decoded(session.config.output)


def _analyze(session: ExperimentSession, args: argparse.Namespace) -> None:
    _load_all(session, args.counts)
    session.decode()
    _print(session.write_report().text)


def _run(session: ExperimentSession, args: argparse.Namespace) -> None:
    _print(session.run().text)


COMMANDS: dict[str, typing.Callable[[ExperimentSession, argparse.Namespace], None]] = {
    "layout": _layout,
    "build": _build,
    "simulate": _simulate,
    "decode": _decode,
    "analyze": _analyze,
    "run": _run,
}


def main(argv: typing.Sequence[str] | None = None) -> int:
    """Runs a command, returning 0 on success, 2 for configuration errors and 3 for failures while running."""
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    session: ExperimentSession | None = None
    try:
        config = load_config(args)
        if args.command == "sweep":
            if args.ps is not None:
                config = ExperimentConfig.model_validate({**config.model_dump(), "sweep": args.ps})
            if not config.sweep:
                raise ValueError("A sweep needs error probabilities, from --ps or the sweep setting")
        else:
            session = ExperimentSession(config)
    except (ValidationError, ValueError, FileNotFoundError) as ex:
        log.error(f"Invalid configuration: {ex}")
        return EXIT_CONFIG

    try:
        if session is None:
            _print(sweep(config, config.sweep).text)
        else:
            COMMANDS[args.command](session, args)
    except Exception as ex:
        log.error(f"Command '{args.command}' failed: {ex}")
        if log.isEnabledFor(logging.DEBUG):  # pragma: no cover
            log.exception(ex)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
