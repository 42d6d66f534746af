"""
Local directional correction in a uniformly convex ℓ_p model, as a LangGraph pipeline.

tune_delta → select_pair → build_bump → support → combine → correct → audit.
Every node returns a partial state update; audit entries accumulate on an additive channel
so each node can record the inequalities it relied on.
"""

import logging
import math
import operator
from dataclasses import dataclass

import numpy as np
from langgraph.graph import END, START, StateGraph
from typing_extensions import Annotated, TypedDict

from src.core.config import settings
from src.core.errors import ContractViolationError, PreconditionError
from src.services.bpb import AuditEntry, LipBpbTrace, StepOutcome, lip_bpb_preliminary
from src.services.lipfunc import LipFunctional, lip_norm
from src.services.metric_core import FinitePointedMetricSpace, NeighborhoodSpec, build_grid_space
from src.services.normed import NormedSpaceModel, distance_to_segment
from src.services.ucx import (
    TildePair,
    bump_functional,
    delta_for_eps,
    duality_map,
    linear_functional,
    modulus_convexity,
    require_lp_space,
    select_tilde_pair,
)

logger = logging.getLogger(__name__)


# ========== STATE ==========
class PipelineState(TypedDict, total=False):
    """State of one pipeline run"""

    model: NormedSpaceModel
    f: LipFunctional
    x: int
    y: int
    eps: float
    modulus: float
    delta: float
    tilde: TildePair
    bump: LipFunctional
    dual_vector: np.ndarray
    linear: LipFunctional
    h: LipFunctional
    h_scale: float
    trace: LipBpbTrace
    audits: Annotated[list, operator.add]  # AuditEntry records from every node


# ========== NODES ==========
def tune_delta(state: PipelineState):
    """Pick δ from the modulus of convexity and check the starting quotient."""
    model, f, eps = state["model"], state["f"], state["eps"]
    modulus = modulus_convexity(model, eps).best
    delta = delta_for_eps(model, eps)
    quotient = float(f.quotient(state["x"], state["y"]))
    if quotient <= 1.0 - delta:
        raise PreconditionError(
            f"the f-quotient {quotient!r} at ({state['x']}, {state['y']}) does not exceed "
            f"1 − delta = {1.0 - delta!r}"
        )
    logger.info(f"pipeline: eps={eps}, modulus={modulus:.6g}, delta={delta:.6g}")
    audits = [
        AuditEntry.check("delta_small", delta, eps * eps / 2.0),
        AuditEntry.check("delta_modulus", math.sqrt(2.0 * delta), modulus / 2.0),
        AuditEntry.check("start_quotient", quotient, 1.0 - delta, ">"),
    ]
    return {"modulus": modulus, "delta": delta, "audits": audits}


def select_pair(state: PipelineState):
    """Short sub-pair (x̃, ỹ) of the segment."""
    f, eps = state["f"], state["eps"]
    tilde = select_tilde_pair(f, state["x"], state["y"], state["delta"], eps)
    norms = f.space.model.norms(f.space.coords[[tilde.x, tilde.y]])
    logger.info(f"pipeline: tilde pair ({tilde.x}, {tilde.y}), separation {tilde.separation:.4g}")
    audits = [
        AuditEntry.check("tilde_separation", tilde.separation, 0.25 * min(eps, *norms)),
        AuditEntry.check("tilde_quotient", tilde.quotient, 1.0 - state["delta"], ">"),
    ]
    return {"tilde": tilde, "audits": audits}


def build_bump(state: PipelineState):
    tilde = state["tilde"]
    return {"bump": bump_functional(state["f"].space, tilde.x, tilde.y)}


def support(state: PipelineState):
    """The supporting functional at the direction of (x̃, ỹ), restricted to the grid."""
    space, tilde = state["f"].space, state["tilde"]
    diff = space.coords[tilde.x] - space.coords[tilde.y]
    dual_vector = duality_map(state["model"], diff / state["model"].norm(diff))
    return {"dual_vector": dual_vector, "linear": linear_functional(space, dual_vector)}


def combine(state: PipelineState):
    """h = ½(F + x*), rescaled to unit grid norm."""
    raw = (state["bump"] + state["linear"]) * 0.5
    scale = float(raw.norm)
    h = raw / scale
    tilde = state["tilde"]
    pair_quotient = float(h.quotient(tilde.x, tilde.y))
    audits = [
        AuditEntry.check("h_pair_quotient", abs(pair_quotient - 1.0), settings.norm_tolerance, "<=")
    ]
    return {"h": h, "h_scale": scale, "audits": audits}


def correct(state: PipelineState):
    tilde = state["tilde"]
    trace = lip_bpb_preliminary(state["f"], (tilde.x, tilde.y), state["h"], state["delta"])
    logger.info(
        f"pipeline: corrector stage {trace.corrector.stage}, "
        f"distance {trace.corrector.distance:.4g}"
    )
    return {"trace": trace}


def audit(state: PipelineState):
    """Check every conclusion of the local directional property on the trace."""
    f, eps, trace = state["f"], state["eps"], state["trace"]
    space, model = f.space, state["model"]
    coords = space.coords
    x, y, tilde = state["x"], state["y"], state["tilde"]
    direction = coords[x] - coords[y]
    direction = direction / model.norm(direction)
    radius = float(space.dist[tilde.x, tilde.y])
    root = math.sqrt(2.0 * state["delta"])

    audits = [AuditEntry.check("f_g_distance", float(lip_norm(f - trace.g).norm), eps)]
    audits.append(
        AuditEntry.check("h_quotient", min(s.h_quotient for s in trace.steps), 1.0 - root, ">")
    )
    for v, w in dict.fromkeys(trace.pairs):
        diff = coords[v] - coords[w]
        separation = model.norm(diff)
        unit = diff / separation
        tag = f"[{v},{w}]"
        audits += [
            AuditEntry.check(f"direction{tag}", model.norm(direction - unit), eps),
            AuditEntry.check(
                f"slice_membership{tag}",
                float(state["dual_vector"] @ unit),
                1.0 - state["modulus"],
                ">",
            ),
            AuditEntry.check(f"pair_separation{tag}", separation, eps),
            AuditEntry.check(
                f"convex_hull_distance{tag}",
                distance_to_segment(model, coords[v], coords[x], coords[y]),
                eps,
            ),
            AuditEntry.check(f"support_containment{tag}", float(space.dist[v, tilde.x]), radius),
        ]
    return {"audits": audits}


# ========== GRAPH CONSTRUCTION ==========
def _build_pipeline_graph():
    """Build the linear correction pipeline."""
    graph = StateGraph(PipelineState)

    graph.add_node("tune_delta", tune_delta)
    graph.add_node("select_pair", select_pair)
    graph.add_node("build_bump", build_bump)
    graph.add_node("support", support)
    graph.add_node("combine", combine)
    graph.add_node("correct", correct)
    graph.add_node("audit", audit)

    graph.add_edge(START, "tune_delta")
    graph.add_edge("tune_delta", "select_pair")
    graph.add_edge("select_pair", "build_bump")
    graph.add_edge("build_bump", "support")
    graph.add_edge("support", "combine")
    graph.add_edge("combine", "correct")
    graph.add_edge("correct", "audit")
    graph.add_edge("audit", END)

    return graph.compile()


pipeline_graph = _build_pipeline_graph()


# ========== REPORT ==========
@dataclass(frozen=True)
class PipelineReport:
    model: NormedSpaceModel
    f: LipFunctional
    x: int
    y: int
    eps: float
    delta: float
    modulus: float
    tilde: TildePair
    bump: LipFunctional
    dual_vector: np.ndarray
    h: LipFunctional
    h_scale: float
    trace: LipBpbTrace
    audits: tuple[AuditEntry, ...]

    @property
    def g(self) -> LipFunctional:
        return self.trace.g

    @property
    def passed(self) -> bool:
        return all(entry.passed for entry in self.audits)

    @property
    def violations(self) -> list[str]:
        return [entry.describe() for entry in self.audits if not entry.passed]

    @property
    def final_pair(self) -> tuple[int, int]:
        return self.trace.pairs[-1]

    def audit(self, name: str) -> AuditEntry:
        for entry in self.audits:
            if entry.name == name:
                return entry
        raise KeyError(name)

    def to_jsonable(self) -> dict:
        labels = self.f.space.labels
        corrector = self.trace.corrector
        return {
            "model": self.model.name,
            "eps": self.eps,
            "delta": self.delta,
            "modulus": self.modulus,
            "pair": [labels[self.x], labels[self.y]],
            "tilde": {
                "x": labels[self.tilde.x],
                "y": labels[self.tilde.y],
                "separation": self.tilde.separation,
                "quotient": self.tilde.quotient,
            },
            "dual_vector": [float(v) for v in self.dual_vector],
            "h_scale": self.h_scale,
            "nu": self.trace.nu,
            "corrector": {
                "stage": corrector.stage,
                "dist_f": corrector.dist_f,
                "dist_w": corrector.dist_w,
                "bound": corrector.bound,
            },
            "pairs": [[labels[v], labels[w]] for v, w in dict.fromkeys(self.trace.pairs)],
            "audits": [
                {
                    "name": e.name,
                    "measured": e.measured,
                    "bound": e.bound,
                    "relation": e.relation,
                    "passed": e.passed,
                    "slack": e.slack,
                }
                for e in self.audits
            ],
            "passed": self.passed,
        }


def lipbpb_uniformly_convex(
    model: NormedSpaceModel, f: LipFunctional, x: int, y: int, eps: float
) -> PipelineReport:
    """Run the correction pipeline on a grid sampled from ``model``.

    Args:
        model: a uniformly convex ℓ_p model (the grid's model).
        f: norm-one functional on the grid.
        x: first point of the almost-attaining pair.
        y: second point of the pair; the grid must sample conv{x, y}.
        eps: target accuracy in (0, 1/2].

    Returns:
        PipelineReport: audit failures are reported, not raised.

    Raises:
        NotUniformlyConvexError: for polyhedral models.
        GridTooCoarseError: if the segment sample has no admissible short sub-pair.
    """
    require_lp_space(f.space, model)
    if abs(float(f.norm) - 1.0) > settings.norm_tolerance:
        raise PreconditionError(f"f must have norm 1, got {float(f.norm)!r}")
    initial: PipelineState = {"model": model, "f": f, "x": x, "y": y, "eps": eps, "audits": []}
    state = pipeline_graph.invoke(initial, config={"recursion_limit": settings.recursion_limit})
    report = PipelineReport(
        model=model,
        f=f,
        x=x,
        y=y,
        eps=eps,
        delta=state["delta"],
        modulus=state["modulus"],
        tilde=state["tilde"],
        bump=state["bump"],
        dual_vector=state["dual_vector"],
        h=state["h"],
        h_scale=state["h_scale"],
        trace=state["trace"],
        audits=tuple(state["audits"]),
    )
    if not report.passed:
        logger.warning(f"pipeline audit failed: {report.violations}")
    return report


# ========== STEP CORRECTOR ==========
@dataclass(frozen=True)
class PipelineStepCorrector:
    """One refinement step: the pipeline at scale eps on the functional's own grid."""

    model: NormedSpaceModel

    def delta_for(self, eps: float) -> float:
        return delta_for_eps(self.model, eps)

    def __call__(self, f: LipFunctional, pair: tuple[int, int], eps: float) -> StepOutcome:
        report = lipbpb_uniformly_convex(self.model, f, pair[0], pair[1], eps)
        if not report.passed:
            first = next(entry for entry in report.audits if not entry.passed)
            raise ContractViolationError(first.name, first.measured, first.bound)
        return StepOutcome(report.g, report.final_pair, tuple(report.trace.pairs))


# ========== SCENARIOS ==========
@dataclass(frozen=True)
class LinearPlusBump:
    """x* (the functional attaining at ``direction``) plus a small bump at ``center``."""

    model: NormedSpaceModel
    direction: np.ndarray
    perturbation: float
    center: np.ndarray
    radius: float

    def evaluate(self, coords: np.ndarray) -> np.ndarray:
        linear = coords @ self.model.dual_map(self.direction)
        bump = np.maximum(self.radius - self.model.norms(coords - self.center), 0.0)
        return linear + self.perturbation * bump


def linear_plus_bump(
    model: NormedSpaceModel,
    direction,
    perturbation: float,
    center=None,
    radius: float = 0.1,
) -> LinearPlusBump:
    """Fixture functional; by default the bump sits 4·radius off the unit point of ``direction``."""
    direction = np.asarray(direction, dtype=float)
    direction = direction / model.norm(direction)
    if center is None:
        normal = np.zeros(model.dim)
        normal[int(np.argmin(np.abs(direction)))] = 1.0
        normal -= (normal @ direction) / (direction @ direction) * direction
        normal /= model.norm(normal)
        center = direction + 4.0 * radius * normal
    center = np.asarray(center, dtype=float)
    return LinearPlusBump(model, direction, float(perturbation), center, radius)


@dataclass(frozen=True)
class ScenarioRun:
    report: PipelineReport
    space: FinitePointedMetricSpace
    normalization: float
    x: int
    y: int


def fixture_functional(
    space: FinitePointedMetricSpace, fixture: LinearPlusBump
) -> tuple[LipFunctional, float]:
    """The fixture on a grid, shifted to vanish at the base and scaled to unit grid norm."""
    raw = LipFunctional.from_values(space, fixture.evaluate(space.coords), normalize=True)
    scale = float(raw.norm)
    return raw / scale, scale


def run_pipeline_scenario(
    fixture: LinearPlusBump,
    eps: float,
    segment_length: float = 0.25,
    resolution: int = 64,
    neighborhood_count: int = 60,
    seed: int = 0,
    anchor=None,
) -> ScenarioRun:
    """Build the grid around the segment and the short pair, then run the pipeline.

    The first pass samples the segment only and locates x̃; the second adds a random
    neighborhood of x̃ of radius 2‖x̃ − ỹ‖.
    """
    model = fixture.model
    center = fixture.direction if anchor is None else np.asarray(anchor, dtype=float)
    half = 0.5 * segment_length * fixture.direction
    x_coord, y_coord = center + half, center - half
    extra = [("bump", fixture.center)]

    first = build_grid_space(model, [x_coord, y_coord], resolution, segments=[(1, 2)],
                             seed=seed, extra_points=extra)
    f_first, _ = fixture_functional(first, fixture)
    delta = delta_for_eps(model, eps)
    tilde = select_tilde_pair(f_first, first.index_of("a1"), first.index_of("a2"), delta, eps)

    spec = NeighborhoodSpec(2.0 * tilde.separation, neighborhood_count)
    space = build_grid_space(
        model,
        [x_coord, y_coord, first.coords[tilde.x]],
        resolution,
        neighborhood_spec=[None, None, spec],
        seed=seed,
        segments=[(1, 2)],
        extra_points=extra,
    )
    f, scale = fixture_functional(space, fixture)
    x, y = space.index_of("a1"), space.index_of("a2")
    logger.info(f"pipeline scenario: {space.size} grid points, normalization {scale:.6g}")
    report = lipbpb_uniformly_convex(model, f, x, y, eps)
    return ScenarioRun(report, space, scale, x, y)
