import json

import pytest

from src.core.config import settings
from src.core.errors import NumericalError, ScenarioParseError
from src.main import main
from src.models.schemas import Manifest, Scenario
from src.services.runner import (
    CSV_COLUMNS,
    effective_seed,
    exit_code,
    load_manifest,
    parse_manifest,
    reports_csv,
    reports_json,
    run_manifest,
    run_scenario,
    summary,
)
from src.services.scenarios import HANDLERS


def cantor(id_, depth, **extra):
    return {"id": id_, "kind": "cantor", "inputs": {"depth": depth}, **extra}


class TestManifest:
    def test_empty_manifest(self):
        reports = run_manifest(Manifest())
        assert reports == []
        assert exit_code(reports) == 0
        assert summary(reports) == {"total": 0, "pass": 0, "fail": 0, "inconclusive": 0}

    def test_unknown_kind_names_the_path(self):
        with pytest.raises(ScenarioParseError) as info:
            parse_manifest({"scenarios": [{"id": "a", "kind": "wormhole"}]})
        assert info.value.path == "$.scenarios[0].kind"

    def test_duplicate_ids(self):
        with pytest.raises(ScenarioParseError):
            parse_manifest({"scenarios": [cantor("a", 1), cantor("a", 2)]})

    def test_bare_list_files(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps([cantor("a", 1)]))
        assert [s.id for s in load_manifest(path).scenarios] == ["a"]

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text("{not json")
        with pytest.raises(ScenarioParseError):
            load_manifest(path)


class TestScenarios:
    def test_cantor_measure(self):
        report = run_scenario(Scenario(**cantor("c", 2)))
        assert report.status == "pass"
        assert report.key_value == "5/8"
        assert report.measured["intervals"] == 4

    def test_violated_expectation_fails(self):
        expect = [{"measure": "key_value", "relation": ">", "bound": "3/4"}]
        report = run_scenario(Scenario(**cantor("c", 2, expect=expect)))
        assert report.status == "fail"
        assert report.violations == ["key_value > 3/4: measured 5/8"]

    def test_unmeasured_expectation_fails(self):
        expect = [{"measure": "segment.min_distance", "relation": ">=", "bound": 0.5}]
        report = run_scenario(Scenario(**cantor("c", 2, expect=expect)))
        assert report.status == "fail"
        assert "not measured" in report.violations[0]

    def test_library_errors_fail(self):
        report = run_scenario(Scenario(id="d", kind="sa-density", inputs={"count": 0}))
        assert report.status == "fail"
        assert report.violations[0].startswith("PreconditionError")
        assert exit_code([report]) == 1

    def test_numerical_errors_are_inconclusive(self, monkeypatch):
        def stalled(inputs, seed):
            raise NumericalError("solver stalled", {"status": 4})

        monkeypatch.setitem(HANDLERS, "norm", stalled)
        report = run_scenario(Scenario(id="n", kind="norm"))
        assert report.status == "inconclusive"
        assert report.diagnostics == {"status": 4}
        assert exit_code([report]) == 0

    def test_tolerance_overrides_are_scoped(self, monkeypatch):
        seen = []

        def record(inputs, seed):
            seen.append(settings.norm_tolerance)
            return HANDLERS["cantor"]({"depth": 1}, seed)

        monkeypatch.setitem(HANDLERS, "norm", record)
        before = settings.norm_tolerance
        manifest = parse_manifest(
            {
                "scenarios": [
                    {"id": "loose", "kind": "norm", "tolerances": {"norm_tolerance": 1e-3}},
                    {"id": "plain", "kind": "norm"},
                ]
            }
        )
        reports = run_manifest(manifest, jobs=2)
        assert [r.status for r in reports] == ["pass", "pass"]
        assert sorted(seen) == [before, 1e-3]
        assert settings.norm_tolerance == before

    def test_unknown_tolerances_are_rejected(self):
        with pytest.raises(ScenarioParseError) as info:
            parse_manifest({"scenarios": [{**cantor("c", 1), "tolerances": {"seed": 1.0}}]})
        assert info.value.path == "$.scenarios[0].tolerances"

    def test_environment_seed_wins(self, monkeypatch):
        scenario = Scenario(**cantor("c", 1, seed=3))
        assert effective_seed(scenario) == 3
        monkeypatch.setattr(settings, "seed", 11)
        assert effective_seed(scenario) == 11


class TestOutput:
    @pytest.fixture
    def manifest(self):
        scenarios = [cantor(f"c{d}", d) for d in range(1, 5)]
        scenarios.append({"id": "gap", "kind": "seminorm", "inputs": {"mode": "gap", "n": 3}})
        return parse_manifest({"scenarios": scenarios})

    def test_reruns_are_identical(self, manifest):
        assert reports_json(run_manifest(manifest)) == reports_json(run_manifest(manifest))

    def test_wall_times_only_on_request(self, manifest):
        reports = run_manifest(manifest)
        assert "wall_ms" not in reports_json(reports)
        assert "wall_ms" in reports_json(reports, timings=True)

    def test_concurrent_runs_keep_manifest_order(self, manifest):
        reports = run_manifest(manifest, jobs=2)
        assert [r.scenario_id for r in reports] == ["c1", "c2", "c3", "c4", "gap"]
        assert reports_json(reports) == reports_json(run_manifest(manifest, jobs=1))

    def test_csv_summary(self, manifest):
        lines = reports_csv(run_manifest(manifest)).splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert lines[2].startswith("c2,cantor,pass,5/8,")
        assert len(lines) == 6


class TestCommandLine:
    def test_cantor_command(self, capsys):
        assert main(["cantor", "--depth", "2"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["reports"][0]["key_value"] == "5/8"

    def test_seminorm_gap_command(self, capsys):
        assert main(["seminorm", "gap", "--n", "10"]) == 0
        assert '"1/10"' in capsys.readouterr().out

    def test_run_command_writes_csv(self, tmp_path, capsys):
        manifest = tmp_path / "manifest.json"
        manifest.write_text(json.dumps({"scenarios": [cantor("a", 3)]}))
        table = tmp_path / "summary.csv"
        assert main(["run", str(manifest), "--csv", str(table)]) == 0
        assert json.loads(capsys.readouterr().out)["summary"]["pass"] == 1
        assert table.read_text().startswith("scenario_id,")

    def test_bad_manifest_exits_with_two(self, tmp_path, capsys):
        manifest = tmp_path / "manifest.json"
        manifest.write_text(json.dumps({"scenarios": [{"id": "a", "kind": "wormhole"}]}))
        assert main(["run", str(manifest)]) == 2
        assert json.loads(capsys.readouterr().out)["error"] == "ScenarioParseError"
