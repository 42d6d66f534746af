import numpy as np
import pytest

from src.core.errors import NotUniformlyConvexError, StructuralError
from src.services.metric_core import build_grid_space
from src.services.normed import NormedSpaceModel
from src.services.pipeline import (
    PipelineStepCorrector,
    linear_plus_bump,
    lipbpb_uniformly_convex,
    pipeline_graph,
    run_pipeline_scenario,
)
from src.services.ucx import delta_for_eps, linear_functional

NODES = ["tune_delta", "select_pair", "build_bump", "support", "combine", "correct", "audit"]


def test_graph_has_every_stage():
    assert set(NODES) <= set(pipeline_graph.get_graph().nodes)


def test_default_bump_sits_off_the_segment():
    model = NormedSpaceModel.lp(2, 2.0)
    fixture = linear_plus_bump(model, [3.0, 4.0], 1e-6)
    assert model.norm(fixture.direction) == pytest.approx(1.0)
    assert model.norm(fixture.center - fixture.direction) == pytest.approx(0.4)


def test_polyhedral_grids_are_rejected():
    model = NormedSpaceModel.linf(2)
    space = build_grid_space(model, [[1.0, 0.0], [0.75, 0.0]], 8, segments=[(1, 2)])
    f = linear_functional(space, [1.0, 0.0])
    with pytest.raises(NotUniformlyConvexError):
        lipbpb_uniformly_convex(model, f, 1, 2, 0.25)


def test_model_must_match_the_grid():
    space = build_grid_space(NormedSpaceModel.lp(2, 2.0), [[1.0, 0.0], [0.75, 0.0]], 8)
    f = linear_functional(space, [1.0, 0.0])
    with pytest.raises(StructuralError):
        lipbpb_uniformly_convex(NormedSpaceModel.lp(2, 4.0), f, 1, 2, 0.25)


def test_step_corrector_uses_the_tuned_delta():
    model = NormedSpaceModel.lp(2, 2.0)
    assert PipelineStepCorrector(model).delta_for(0.25) == delta_for_eps(model, 0.25)


@pytest.mark.slow
@pytest.mark.parametrize("p", [2.0, 4.0])
@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("eps", [0.5, 0.25])
def test_pipeline_audits_pass(p, dim, eps):
    model = NormedSpaceModel.lp(dim, p)
    direction = np.ones(dim)
    fixture = linear_plus_bump(model, direction, 1e-6)
    run = run_pipeline_scenario(fixture, eps, resolution=64, neighborhood_count=40, seed=1)
    report = run.report
    assert report.passed, report.violations
    assert report.tilde.separation < 0.25 * eps
    assert report.audit("f_g_distance").measured < eps
    for v, _ in report.trace.pairs:
        assert run.space.dist[v, report.tilde.x] < report.tilde.separation + 1e-12


@pytest.mark.slow
def test_pipeline_report_serializes():
    model = NormedSpaceModel.lp(2, 2.0)
    run = run_pipeline_scenario(linear_plus_bump(model, [1.0, 0.0], 1e-6), 0.25, seed=0)
    payload = run.report.to_jsonable()
    assert payload["passed"] is True
    assert payload["pair"] == ["a1", "a2"]
    assert {a["name"] for a in payload["audits"]} >= {"f_g_distance", "h_quotient"}
