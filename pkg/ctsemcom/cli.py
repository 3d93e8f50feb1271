import argparse
import sys
from pathlib import Path

from loguru import logger
from pydantic import ValidationError

from ctsemcom.config.settings import settings
from ctsemcom.core.exceptions import (
    CtSemComError,
    CtSemComErrorResponse,
    ExitCode,
    InvariantViolation,
)
from ctsemcom.core.features import draw_gaussian_features
from ctsemcom.core.rng import RngStream, Substream
from ctsemcom.domains.experiment import SWEEP_AXES, Scheme
from ctsemcom.domains.run_config import RunConfig
from ctsemcom.domains.signals import FeatureBlock
from ctsemcom.services.bench import run_bench
from ctsemcom.services.sweep import aggregate_sweep, sweep_points
from ctsemcom.services.verify import run_verify
from ctsemcom.utils.export import format_bench, format_results, write_text
from ctsemcom.utils.feature_file import read_features, write_features
from ctsemcom.utils.run_config import parse_run_config


def configure_logging(level: str | None = None) -> None:
    logger.remove()
    logger.add(
        sys.stderr,
        level=(level or settings.LOG_LEVEL).upper(),
        serialize=settings.LOG_JSON,
    )


def _format_default(value) -> str:
    if isinstance(value, list):
        return ",".join(str(item) for item in value)
    return str(value)


def _config_defaults() -> str:
    lines = [
        f"  {name} = {_format_default(field.default)}"
        for name, field in RunConfig.model_fields.items()
    ]
    return "run configuration keys and defaults:\n" + "\n".join(lines)


def _scheme_list(value: str) -> list[Scheme]:
    try:
        return [Scheme(item.strip()) for item in value.split(",") if item.strip()]
    except ValueError as ex:
        raise argparse.ArgumentTypeError(str(ex)) from ex


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.APP_NAME,
        description="Channel-transfer power allocation for uplink OFDM-NOMA semantic links.",
        epilog=_config_defaults(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--log-level", default=None, help="Log level (default: LOG_LEVEL setting)")
    commands = parser.add_subparsers(dest="command", required=True)

    def with_config(name: str, help: str) -> argparse.ArgumentParser:
        command = commands.add_parser(name, help=help)
        command.add_argument("--config", type=Path, help="key=value run configuration file")
        return command

    simulate = with_config("simulate", "Monte Carlo trials at the configured operating point")
    simulate.add_argument("--out", type=Path, help="Output file (default: standard output)")
    simulate.add_argument("--format", choices=["csv", "json"], default="csv")
    simulate.add_argument("--timing", action="store_true", help="Record allocation runtimes")

    sweep = with_config("sweep", "Sweep one parameter and aggregate every scheme")
    sweep.add_argument("--param", required=True, choices=SWEEP_AXES)
    sweep.add_argument("--from", dest="start", type=float, required=True)
    sweep.add_argument("--to", dest="stop", type=float, required=True)
    sweep.add_argument("--step", type=float, required=True)
    sweep.add_argument("--out", type=Path, help="Output file (default: standard output)")
    sweep.add_argument("--format", choices=["csv", "json"], default="csv")
    sweep.add_argument("--timing", action="store_true", help="Record allocation runtimes")
    sweep.add_argument(
        "--common-random-numbers",
        action="store_true",
        help="Reuse the same trial streams at every sweep point",
    )

    bench = with_config("bench", "Time the allocators on identical instances")
    bench.add_argument("--schemes", type=_scheme_list, default=[Scheme.SSDT, Scheme.ITERATIVE])
    bench.add_argument("--instances", type=int, default=10)
    bench.add_argument("--out", type=Path, help="Output file (default: standard output)")

    verify = with_config("verify", "Run the invariant suite on fresh instances")
    verify.add_argument("--instances", type=int, default=settings.VERIFY_INSTANCES)
    verify.add_argument(
        "--skip-iterative", action="store_true", help="Only check the closed-form allocator"
    )

    gen_features = with_config("gen-features", "Write synthetic features to a CTSF file")
    gen_features.add_argument("--mode", choices=["gaussian"], default="gaussian")
    gen_features.add_argument("--out", type=Path, required=True)

    return parser


def load_run_config(path: Path | None) -> RunConfig:
    if path is None:
        logger.info("no --config given, using defaults")
        return RunConfig()
    return parse_run_config(path)


def load_features(config: RunConfig, config_path: Path | None) -> list[FeatureBlock] | None:
    if config.uses_gaussian_features:
        return None
    path = Path(config.features)
    if not path.is_absolute() and config_path is not None:
        path = config_path.parent / path
    return read_features(path)


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        write_text(text, out)


def simulate_command(args: argparse.Namespace) -> ExitCode:
    config = load_run_config(args.config)
    result = aggregate_sweep(
        [config.snr1_db],
        config,
        config.schemes,
        config.trials,
        config.seed,
        axis="snr1_db",
        features=load_features(config, args.config),
    )
    _emit(format_results(result, args.format, include_runtime=args.timing), args.out)
    return ExitCode.SUCCESS


def sweep_command(args: argparse.Namespace) -> ExitCode:
    config = load_run_config(args.config)
    points = sweep_points(args.start, args.stop, args.step)
    result = aggregate_sweep(
        points,
        config,
        config.schemes,
        config.trials,
        config.seed,
        axis=args.param,
        common_random_numbers=args.common_random_numbers,
        features=load_features(config, args.config),
    )
    _emit(format_results(result, args.format, include_runtime=args.timing), args.out)
    return ExitCode.SUCCESS


def bench_command(args: argparse.Namespace) -> ExitCode:
    config = load_run_config(args.config)
    report = run_bench(
        config.to_system_config(),
        args.schemes,
        args.instances,
        config.seed,
        features=load_features(config, args.config),
        iterative_settings=config.iterative_settings(),
    )
    _emit(format_bench(report), args.out)
    return ExitCode.SUCCESS


def verify_command(args: argparse.Namespace) -> ExitCode:
    config = load_run_config(args.config)
    outcomes = run_verify(
        config.to_system_config(),
        args.instances,
        config.seed,
        features=load_features(config, args.config),
        iterative_settings=config.iterative_settings(),
        include_iterative=not args.skip_iterative,
    )
    for outcome in outcomes:
        status = "PASS" if outcome.passed else "FAIL"
        sys.stdout.write(f"{status} {outcome.name}: {outcome.detail}\n")

    failed = [outcome.name for outcome in outcomes if not outcome.passed]
    if failed:
        raise InvariantViolation(details=", ".join(failed))
    return ExitCode.SUCCESS


def gen_features_command(args: argparse.Namespace) -> ExitCode:
    config = load_run_config(args.config)
    cfg = config.to_system_config()
    rng = RngStream(seed=config.seed, stream_id=0).substream(Substream.FEATURES)
    draw = draw_gaussian_features(cfg, rng)
    write_features(draw.blocks, args.out)
    logger.info(
        f"wrote {cfg.n_users} feature block(s) to {args.out}, "
        f"{draw.regenerated_rows} all-zero row(s) regenerated"
    )
    return ExitCode.SUCCESS


COMMANDS = {
    "simulate": simulate_command,
    "sweep": sweep_command,
    "bench": bench_command,
    "verify": verify_command,
    "gen-features": gen_features_command,
}


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return ex.code if isinstance(ex.code, int) else ExitCode.USAGE

    configure_logging(args.log_level)
    try:
        return int(COMMANDS[args.command](args))
    except CtSemComError as ex:
        logger.error(f"{args.command} failed: {repr(ex)}")
        sys.stderr.write(CtSemComErrorResponse.from_error(ex).model_dump_json() + "\n")
        return int(ex.exit_code)
    except ValidationError as ex:
        # user input errors arrive as ConfigError
        logger.error(f"{args.command}: invalid intermediate result: {ex}")
        return int(ExitCode.FAILURE)
    except ValueError as ex:
        logger.error(f"{args.command}: {ex}")
        return int(ExitCode.USAGE)
    except Exception:
        logger.exception(f"{args.command} failed unexpectedly")
        return int(ExitCode.FAILURE)


def main() -> None:
    sys.exit(cli_main())
