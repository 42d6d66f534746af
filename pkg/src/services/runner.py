"""
Manifest runner: executes scenarios (concurrently when asked), checks expectations and
maps library errors to pass / fail / inconclusive.
"""

import csv
import io
import json
import logging
import threading
import time
from collections.abc import Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

from pydantic import ValidationError

from src.core.config import settings
from src.core.errors import LipkitError, NumericalError, ScenarioParseError
from src.models.schemas import Expectation, Manifest, RunReport, Scenario
from src.services.scenarios import HANDLERS, Outcome
from src.utils.serialization import dumps, parse_number, to_jsonable

logger = logging.getLogger(__name__)

_overrides_lock = threading.Lock()

CSV_COLUMNS = ["scenario_id", "kind", "status", "key_value", "bound", "slack", "wall_ms"]

_RELATIONS = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
}


def _error_path(exc: ValidationError) -> tuple[str, str]:
    first = exc.errors()[0]
    path = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in first["loc"])
    return first["msg"], path


def parse_manifest(data) -> Manifest:
    try:
        return Manifest.model_validate(data)
    except ValidationError as exc:
        message, path = _error_path(exc)
        raise ScenarioParseError(message, path) from exc


def load_manifest(path: str | Path) -> Manifest:
    """Read a manifest file: either ``{"scenarios": [...]}`` or a bare list of scenarios."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"invalid JSON: {exc.msg}", f"$ (line {exc.lineno})") from exc
    if isinstance(data, list):
        data = {"scenarios": data}
    return parse_manifest(data)


def _lookup(measured: dict, name: str):
    value = measured
    for part in name.split("."):
        if not isinstance(value, dict) or part not in value:
            return None
        value = value[part]
    return value


def check_expectations(outcome: Outcome, expectations: Sequence[Expectation]) -> list[str]:
    """Violations for every expectation ``measured[measure] <relation> bound`` that fails."""
    violations = []
    for exp in expectations:
        if exp.measure == "key_value":
            raw = outcome.key_value
        else:
            raw = _lookup(outcome.measured, exp.measure)
        if raw is None:
            violations.append(f"{exp.measure} {exp.relation} {exp.bound}: not measured")
            continue
        measured, bound = parse_number(raw), parse_number(exp.bound)
        if not _RELATIONS[exp.relation](measured, bound):
            violations.append(f"{exp.measure} {exp.relation} {exp.bound}: measured {raw}")
    return violations


def effective_seed(scenario: Scenario) -> int:
    return scenario.seed if settings.seed is None else settings.seed


@contextmanager
def tolerance_overrides(tolerances: dict[str, float]) -> Iterator[None]:
    """Swap tolerance settings in for one scenario and restore them afterwards."""
    if not tolerances:
        yield
        return
    with _overrides_lock:
        saved = {name: getattr(settings, name) for name in tolerances}
        for name, value in tolerances.items():
            setattr(settings, name, value)
        try:
            yield
        finally:
            for name, value in saved.items():
                setattr(settings, name, value)


def run_scenario(scenario: Scenario) -> RunReport:
    """Run one scenario. Programming errors propagate; library errors become statuses."""
    handler = HANDLERS[scenario.kind]
    seed = effective_seed(scenario)
    started = time.perf_counter()
    try:
        with tolerance_overrides(scenario.tolerances):
            outcome = handler(scenario.inputs, seed)
    except NumericalError as exc:
        logger.warning(f"scenario {scenario.id}: numerical trouble ({exc})")
        return RunReport(
            scenario_id=scenario.id,
            kind=scenario.kind,
            status="inconclusive",
            violations=[str(exc)],
            diagnostics=to_jsonable(exc.diagnostics),
            wall_ms=(time.perf_counter() - started) * 1e3,
        )
    except LipkitError as exc:
        logger.warning(f"scenario {scenario.id}: {type(exc).__name__}: {exc}")
        return RunReport(
            scenario_id=scenario.id,
            kind=scenario.kind,
            status="fail",
            violations=[f"{type(exc).__name__}: {exc}"],
            wall_ms=(time.perf_counter() - started) * 1e3,
        )
    wall_ms = (time.perf_counter() - started) * 1e3

    violations = list(outcome.violations) + check_expectations(outcome, scenario.expect)
    status = "fail" if violations else "pass"
    logger.info(f"scenario {scenario.id} ({scenario.kind}): {status}")
    return RunReport(
        scenario_id=scenario.id,
        kind=scenario.kind,
        status=status,
        measured=to_jsonable(outcome.measured),
        bounds=to_jsonable(outcome.bounds),
        key_value=to_jsonable(outcome.key_value),
        bound=to_jsonable(outcome.bound),
        slack=outcome.slack,
        violations=violations,
        wall_ms=wall_ms,
    )


def run_manifest(manifest: Manifest, jobs: int | None = None) -> list[RunReport]:
    """Reports in manifest order; independent scenarios run on a thread pool.

    Scenarios overriding tolerances change shared settings, so they run one by one after
    the pool has finished.
    """
    jobs = settings.jobs if jobs is None else jobs
    scenarios = manifest.scenarios
    if not scenarios:
        return []
    logger.info(f"running {len(scenarios)} scenarios with {jobs} worker(s)")
    if jobs <= 1:
        return [run_scenario(s) for s in scenarios]
    shared = [s for s in scenarios if not s.tolerances]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        done = dict(zip((s.id for s in shared), pool.map(run_scenario, shared)))
    for scenario in scenarios:
        if scenario.tolerances:
            done[scenario.id] = run_scenario(scenario)
    return [done[s.id] for s in scenarios]


def exit_code(reports: Sequence[RunReport]) -> int:
    return 1 if any(r.status == "fail" for r in reports) else 0


def summary(reports: Sequence[RunReport]) -> dict:
    counts = {"pass": 0, "fail": 0, "inconclusive": 0}
    for report in reports:
        counts[report.status] += 1
    return {"total": len(reports), **counts}


def reports_json(reports: Sequence[RunReport], timings: bool = False) -> str:
    """JSON for a run; wall times are left out unless ``timings`` so reruns are identical."""
    exclude = None if timings else {"wall_ms"}
    payload = {
        "reports": [r.model_dump(exclude=exclude) for r in reports],
        "summary": summary(reports),
    }
    return dumps(payload)


def reports_csv(reports: Sequence[RunReport]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for report in reports:
        row = report.model_dump(include=set(CSV_COLUMNS))
        writer.writerow({k: "" if row[k] is None else row[k] for k in CSV_COLUMNS})
    return buffer.getvalue()
