# fourfold/main.py

import argparse
import logging
import os
from pathlib import Path

from scipy import fft

from . import __version__
from .commands.film2d import cmd_film2d
from .commands.sweep import cmd_sweep
from .commands.validate import cmd_validate
from .commands.wall1d import cmd_wall1d, wall_summary
from .errors import FourfoldError

logger = logging.getLogger(__name__)

OUT_DIR_ENV = "FOURFOLD_OUT_DIR"
DEFAULT_OUT_DIR = "runs"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


# --- Argument parser ---
"""
<summary>
One subcommand per run type. Every subcommand accepts the shared output, threading, resolution
and logging flags; all but `validate` require --config.
</summary>
"""
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fourfold", description="Domain walls and remanent states in thin films with fourfold anisotropy.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--out", type=Path, help=f"output directory (default: ${OUT_DIR_ENV} or ./{DEFAULT_OUT_DIR})")
    shared.add_argument("--threads", type=_positive_int, default=1, help="concurrent runs and FFT workers")
    shared.add_argument("--resolution", type=_positive_float, help="cells per Bloch width, overriding the config")
    shared.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    commands = parser.add_subparsers(dest="command", required=True)
    for name, text in (("wall1d", "relax 1D wall profiles"), ("film2d", "relax a 2D sample"),
                       ("sweep", "run a parameter sweep of 2D samples")):
        sub = commands.add_parser(name, parents=[shared], help=text)
        sub.add_argument("--config", type=Path, required=True, help="JSON run configuration")
    validate = commands.add_parser("validate", parents=[shared], help="run the property suite")
    validate.add_argument("--config", type=Path, help="ignored; accepted for a uniform command line")
    validate.add_argument("--seed", type=int, default=0)
    validate.add_argument("--mutate", choices=["anisotropy-sign"], help="inject a fault that the suite must detect")
    return parser


def resolve_out_dir(out: Path | None) -> Path:
    return out if out is not None else Path(os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR)


def dispatch(args: argparse.Namespace) -> None:
    out_dir = resolve_out_dir(args.out)
    if args.command == "wall1d":
        manifests = cmd_wall1d(args.config, out_dir, resolution=args.resolution)
        print("\n".join(wall_summary(manifests)))
    elif args.command == "film2d":
        outcome = cmd_film2d(args.config, out_dir, resolution=args.resolution)
        print(f"{outcome.state.value} degree={outcome.degree} E={outcome.final_energy:.10g} -> {outcome.out_dir}")
    elif args.command == "sweep":
        outcomes = cmd_sweep(args.config, out_dir, resolution=args.resolution, threads=args.threads)
        failed = sum(outcome.status == "failed" for outcome in outcomes)
        print(f"{len(outcomes)} runs, {failed} failed -> {out_dir / 'summary.csv'}")
    else:
        cmd_validate(out_dir, seed=args.seed, mutation=args.mutate)


def main(argv: list[str] | None = None) -> int:
    """
    <summary>
    Command-line entry point.
    </summary>
    <param name="argv" type="list[str] | None">Arguments without the program name; defaults to sys.argv.</param>
    <returns type="int">0 on success, otherwise the exit code of the FourfoldError raised.</returns>
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)
    try:
        with fft.set_workers(args.threads):
            dispatch(args)
    except FourfoldError as exc:
        logger.error("%s: %s", type(exc).__name__, exc.detail)
        return exc.exit_code
    return 0
