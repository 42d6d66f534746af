import json
import logging
import sys

from dotenv import load_dotenv
load_dotenv()

from src.core.config import settings
from src.core.errors import LipkitError
from src.cli import build_parser

logger = logging.getLogger(__name__)


def configure_logging(verbose: bool = False) -> None:
    """Log to stderr so JSON on stdout stays clean."""
    logging.basicConfig(
        level=logging.DEBUG if (settings.app_debug or verbose) else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )


def main(argv: list[str] | None = None) -> int:
    """Entry point of the ``lipkit`` command."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    logger.debug(f"Starting {settings.app_name} {args.command}")
    try:
        return args.func(args)
    except LipkitError as exc:
        sys.stdout.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
