"""
Command-line front-end: simulate, validate and transitions
"""
from pathlib import Path
from typing import List, Optional, Sequence, Union
import argparse
import json
import logging
import sys

from pydantic import ValidationError

from config import settings
from domain.entities import ValidationResult
from domain.exceptions import ConfigError, SpinSimError
from domain.measurement import transition_frequencies
from domain.runner import ExperimentRunner
from domain.schema import ExperimentConfig, MatrixFileState
from domain.validators import ExperimentValidator
from infra.csv.csv_adapter import CsvReader, CsvWriter

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _location(loc: Sequence) -> str:
    path = ""
    for part in loc:
        path += f"[{part}]" if isinstance(part, int) else (f".{part}" if path else str(part))
    return path or "<root>"


def _schema_failures(error: ValidationError) -> List[ValidationResult]:
    return [
        ValidationResult(
            validation_id=f"schema_{_location(e['loc'])}",
            is_valid=False,
            severity="blocking",
            message=f"{_location(e['loc'])}: {e['msg']}",
            details={"type": e["type"]},
        )
        for e in error.errors()
    ]


def parse_config(path: PathLike) -> ExperimentConfig:
    """
    Load and fully validate an experiment config; every failure is reported
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot read {path}: {e}") from e

    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        failures = _schema_failures(e)
        raise ConfigError(f"{path}: {len(failures)} schema error(s)", failures) from e
    config._source = path.resolve()

    ok, results = ExperimentValidator().run_all_validations(config)
    for r in results:
        if r.severity == "warning" and not r.is_valid:
            logger.warning("%s: %s", path.name, r.message)
    if not ok:
        failures = [r for r in results if r.is_blocking]
        raise ConfigError(f"{path}: {len(failures)} validation error(s)", failures)
    return config


def run_experiment(config: ExperimentConfig, out_dir: PathLike) -> str:
    """Run the config and write every artifact to out_dir; returns the report text"""
    out_dir = Path(out_dir)
    initial_matrix = None
    if isinstance(config.system.initial_state, MatrixFileState):
        initial_matrix = CsvReader().read_matrix(config.source_dir / config.system.initial_state.matrix_file)

    runner = ExperimentRunner()
    result = runner.run(config, initial_matrix)

    writer = CsvWriter()
    written = [
        writer.write_matrix(result.initial_state, out_dir / "initial_state.csv"),
        writer.write_matrix(result.final_state, out_dir / "final_state.csv"),
    ]
    if result.fid is not None:
        written.append(writer.write_fid(result.fid, out_dir / "fid.csv"))
    if result.spectra:
        written.append(writer.write_spectrum(result.spectra, out_dir / "spectrum.csv"))

    report = runner.render_report(result, config)
    written.append(writer.write_report(report, out_dir / "report.txt"))
    for path in written:
        logger.info("Wrote %s", path)
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.APP_NAME,
        description="Spin dynamics simulator for NMR and NQR experiments",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")

    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="run an experiment and write its artifacts")
    simulate.add_argument("config", help="experiment config (JSON)")
    simulate.add_argument("--out", help="output directory (default: $SPINSIM_OUTPUT_DIR/<name>)")

    validate = commands.add_parser("validate", help="parse and validate a config")
    validate.add_argument("config")

    transitions = commands.add_parser("transitions", help="print the transition frequencies of H0")
    transitions.add_argument("config")
    return parser


def _configure_logging(args: argparse.Namespace):
    level = settings.LOG_LEVEL
    if args.verbose:
        level = "DEBUG"
    elif args.quiet:
        level = "WARNING"
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args)

    try:
        config = parse_config(args.config)

        if args.command == "validate":
            print(f"{args.config}: valid")
        elif args.command == "transitions":
            _, H0, _ = ExperimentRunner().build_system(config)
            print("freq_MHz,upper,lower")
            for tr in transition_frequencies(H0):
                print(f"{tr.frequency:.12g},{tr.upper},{tr.lower}")
        else:
            out_dir = Path(args.out) if args.out else Path(settings.OUTPUT_DIR) / config.name
            run_experiment(config, out_dir)
            print(out_dir)
    except SpinSimError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        logger.exception("Unexpected failure in %s", args.command)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0
