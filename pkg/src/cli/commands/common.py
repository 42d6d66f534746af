"""Helpers shared by the subcommands."""

import json
import sys
from pathlib import Path
from typing import Any

from src.core.errors import ScenarioParseError
from src.models.schemas import Scenario
from src.services.runner import reports_json, run_scenario


def read_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        where = f"$ (line {exc.lineno})"
        raise ScenarioParseError(f"invalid JSON in {path}: {exc.msg}", where) from exc


def parse_vector(text: str) -> list[str]:
    """``"1,0,1/2"`` → ["1", "0", "1/2"] (numbers are parsed downstream)."""
    return [part.strip() for part in text.split(",") if part.strip()]


def add_seed(parser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="seed (LIPKIT_SEED overrides)")


def run_single(kind: str, inputs: dict[str, Any], seed: int = 0, timings: bool = False) -> int:
    """Run one scenario built from command-line arguments and print its report."""
    report = run_scenario(Scenario(id=kind, kind=kind, inputs=inputs, seed=seed))
    sys.stdout.write(reports_json([report], timings=timings) + "\n")
    return 1 if report.status == "fail" else 0
