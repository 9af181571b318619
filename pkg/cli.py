"""
Command-line entry point.

    python cli.py train --config experiment.cfg --variant do-p --s 10 --seed 1
    python cli.py train --manifest runs/prune-seed1-.../manifest.json
    python cli.py finite game.csv --epsilon 1e-6
    python cli.py eval runs/prune-seed1-... --samples 512
    python cli.py serve --port 8000

Results are printed to stdout as JSON; logs go to stderr.
Exit status: 0 converged (or completed / within epsilon), 2 max_epochs, 1 error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Any, NoReturn, Optional, Sequence

from core.config import load_experiment_config, settings
from core.exceptions import ConfigError, DoGanError, MatrixParseError
from core.experiment_config import ExperimentConfig
from core.logger import get_logger, setup_logging
from infrastructure.models.game import PayoffMatrix
from infrastructure.repositories.run_repository import RunDirectory, RunRepository
from services.experiment import ExperimentService

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MAX_EPOCHS = 2

logger = get_logger("cli")


class DoGanArgumentParser(argparse.ArgumentParser):
    """Usage errors raise `ConfigError` and exit 1."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        raise ConfigError("Invalid command line.", detail=message)


def _flag(field_name: str) -> str:
    return "--" + field_name.replace("_", "-")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    """One override flag per experiment config key; values are validated by the config model."""

    group = parser.add_argument_group("experiment overrides")
    for name, info in ExperimentConfig.model_fields.items():
        default = info.default if info.default is not None else "derived"
        group.add_argument(_flag(name), dest=name, default=None, metavar=name.upper(), help=f"default: {default}")


def build_parser() -> argparse.ArgumentParser:
    parser = DoGanArgumentParser(prog="dogan", description="Double-oracle GAN training and finite-game harness.")
    parser.add_argument("--log-level", default=None, help=f"default: {settings.LOG_LEVEL}")
    parser.add_argument("--log-json", action="store_true", help="emit JSON log lines")
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="run DO-GAN, DO-GAN/P, DO-GAN/C or the vanilla GAN baseline")
    source = train.add_mutually_exclusive_group()
    source.add_argument("--config", type=Path, default=None, help="flat key = value experiment file")
    source.add_argument("--manifest", type=Path, default=None, help="rerun the configuration stored in a manifest.json")
    train.add_argument("--run-name", default=None, help="run directory name under the output root")
    train.add_argument("--output-root", type=Path, default=None, help="default: $DOGAN_OUTPUT_ROOT")
    train.add_argument("--overwrite", action="store_true", help="replace an existing run directory")
    _add_config_flags(train)

    finite = commands.add_parser("finite", help="double oracle with exact best responses on a matrix game")
    finite.add_argument("matrix", type=Path, help="CSV numeric grid without header")
    finite.add_argument("--epsilon", type=float, default=1e-6)
    finite.add_argument("--seed", type=int, default=0)

    evaluate = commands.add_parser("eval", help="mode coverage of a finished run's generator mixture")
    evaluate.add_argument("run_dir", type=Path)
    evaluate.add_argument("--samples", type=int, default=None, help="default: the run's eval_samples")
    evaluate.add_argument("--seed", type=int, default=None, help="default: the run's seed")

    serve = commands.add_parser("serve", help="start the HTTP API")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _emit(payload: str) -> None:
    sys.stdout.write(payload + "\n")
    sys.stdout.flush()


def _fail(parser: argparse.ArgumentParser, exc: DoGanError, usage: bool = False) -> int:
    if usage:
        parser.print_usage(sys.stderr)
    message = f"error: {exc.message}"
    if exc.detail:
        message += f"\n{exc.detail}"
    print(message, file=sys.stderr)
    return exc.exit_code


def _service(output_root: Optional[Path] = None) -> ExperimentService:
    root = output_root or settings.output_root()
    return ExperimentService(RunRepository(root))


def cmd_train(args: argparse.Namespace) -> int:
    overrides: dict[str, Any] = {name: getattr(args, name) for name in ExperimentConfig.model_fields}
    if args.manifest is not None:
        manifest = RunDirectory(args.manifest.parent).read_manifest()
        stored = manifest.config.model_dump()
        cfg = load_experiment_config(overrides={**stored, **{k: v for k, v in overrides.items() if v is not None}})
    else:
        cfg = load_experiment_config(args.config, overrides)

    result = _service(args.output_root).train(cfg, run_name=args.run_name, overwrite=args.overwrite)
    _emit(result.summary.model_dump_json(indent=2))
    return EXIT_MAX_EPOCHS if result.summary.status == "max_epochs" else EXIT_OK


def cmd_finite(args: argparse.Namespace) -> int:
    if not args.matrix.is_file():
        raise MatrixParseError("Matrix file not found.", detail=str(args.matrix))
    matrix = PayoffMatrix.from_csv(args.matrix.read_text())
    report = _service().solve_finite(matrix, args.epsilon, args.seed)
    _emit(report.model_dump_json(indent=2))
    return EXIT_OK if report.within_epsilon else EXIT_ERROR


def cmd_eval(args: argparse.Namespace) -> int:
    report = _service().evaluate(RunDirectory(args.run_dir), n_samples=args.samples, seed=args.seed)
    _emit(report.model_dump_json(indent=2))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("main:app", host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "finite": cmd_finite,
    "eval": cmd_eval,
    "serve": cmd_serve,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        return _fail(parser, exc)
    setup_logging(level=args.log_level, json_logs=args.log_json or None)

    try:
        return COMMANDS[args.command](args)
    except DoGanError as exc:
        logger.error("Command failed", command=args.command, code=exc.code, detail=exc.detail)
        return _fail(parser, exc, usage=exc.code == "CONFIG_ERROR")


if __name__ == "__main__":
    sys.exit(main())
