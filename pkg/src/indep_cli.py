import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from indep_problem import ProblemError, parse_problem
from indep_runner import run
from utils.constants import BUNDLED_EXAMPLES, EXIT_ERROR
from utils.helpers import get_config_from_env, setup_logging

TEMPLATES_DIR = Path(__file__).parent.parent / "templates" / "problems"

logger = logging.getLogger(__name__)


def example_text(name: str) -> str:
    return (TEMPLATES_DIR / BUNDLED_EXAMPLES[name]).read_text(encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="indep",
        description="Check logical and probabilistic independence, build independence-preserving "
        "extensions and run desk-scale limit theorem experiments from a problem file.",
        epilog="Example: indep example coin > coin.json && indep run coin.json --json",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="Execute every task of a problem file.")
    run_parser.add_argument("file", type=Path, help="Path to the JSON problem file.")
    output = run_parser.add_mutually_exclusive_group()
    output.add_argument("--json", dest="output", action="store_const", const="json", help="Emit the JSON report.")
    output.add_argument("--text", dest="output", action="store_const", const="text", help="Emit the text report (default).")
    run_parser.add_argument("--csv-dir", type=Path, help="Write one CSV per simulation task into this directory.")
    run_parser.add_argument("--workers", type=int, help="Worker threads for CLT replications.")
    run_parser.add_argument("--wide", action="store_true", help="Lift the default 64-atom limit.")
    run_parser.set_defaults(output="text")

    example_parser = sub.add_parser("example", help="Print a bundled problem file.")
    example_parser.add_argument("name", choices=sorted(BUNDLED_EXAMPLES))
    return parser


def _run(args: argparse.Namespace) -> int:
    last_good_step = "initializing"
    try:
        config = get_config_from_env()
        if args.workers is not None:
            if args.workers < 1:
                logger.error("--workers must be >= 1")
                return EXIT_ERROR
            config["WORKERS"] = args.workers
        if args.wide:
            config["WIDE_PROFILE"] = True
        last_good_step = "configuration"

        logger.info(f"01 - Parsing problem file {args.file}...")
        problem = parse_problem(args.file.read_bytes())
        last_good_step = "parse"
        logger.info(f"✅ Parsed {len(problem.tasks)} tasks.")

        logger.info("02 - Running tasks...")
        report = run(problem, config, csv_dir=args.csv_dir)
        last_good_step = "run"

        logger.info("03 - Rendering report...")
        sys.stdout.write(report.to_json() if args.output == "json" else report.to_text())
        sys.stdout.flush()
        logger.info(f"🎉 Report {report.digest()} (exit {report.exit_code})")
        return report.exit_code

    except ProblemError as e:
        logger.error(f"❌ Invalid problem file: {e}")
        return EXIT_ERROR
    except Exception as e:
        logger.error(f"💥 Something went wrong: {type(e).__name__}: {e}")
        logger.error(f"Last successful step was: '{last_good_step}'")
        return EXIT_ERROR


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging()
    if args.command == "example":
        sys.stdout.write(example_text(args.name))
        return 0
    return _run(args)


if __name__ == "__main__":
    sys.exit(main())
