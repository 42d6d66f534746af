import logging
import sys
from pathlib import Path

from src.services.runner import exit_code, load_manifest, reports_csv, reports_json, run_manifest

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("run", help="run a scenario manifest")
    parser.add_argument("manifest", help="manifest JSON")
    parser.add_argument("--jobs", type=int, default=None, help="scenarios run concurrently")
    parser.add_argument("--csv", help="write the summary CSV here")
    parser.add_argument("--timings", action="store_true", help="include wall times in the JSON")
    parser.set_defaults(func=handle)


def handle(args) -> int:
    manifest = load_manifest(args.manifest)
    reports = run_manifest(manifest, args.jobs)
    sys.stdout.write(reports_json(reports, timings=args.timings) + "\n")
    if args.csv:
        Path(args.csv).write_text(reports_csv(reports))
        logger.info(f"summary CSV written to {args.csv}")
    return exit_code(reports)
