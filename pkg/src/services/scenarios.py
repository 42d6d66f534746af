"""
Scenario handlers: one function per scenario kind, turning the kind-specific JSON inputs
into measured values, bounds and named violations. The runner and every CLI subcommand
go through the same handlers.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np
from pydantic import ValidationError

from src.core.config import settings
from src.core.errors import PreconditionError, ScenarioParseError
from src.models.schemas import BallDocument, FunctionalDocument, ModelDocument, SpaceDocument
from src.services.bpb import bpb_correct, bpb_oracle
from src.services.counterexamples import (
    BallSpec,
    c0_estimate_check,
    cantor_primitive,
    mconv_obstruction,
    sa_candidate_family,
    sa_distance_lower_bound,
    sa_weak_density_construct,
    segment_grid,
    svc_set,
    tent_family,
    weak_density_fixture,
)
from src.services.freespace import (
    FreeVector,
    decompose_in_convW,
    free_norm,
    free_norm_primal,
)
from src.services.lipfunc import (
    ExtensionVariant,
    LipFunctional,
    lip_norm,
    mcshane_extend,
    strongly_attains,
)
from src.services.metric_core import (
    FinitePointedMetricSpace,
    model_from_document,
    space_from_document,
)
from src.services.normed import NormedSpaceModel
from src.services.pipeline import linear_plus_bump, run_pipeline_scenario
from src.services.seminorms import (
    SeminormModel,
    attainment_equivalences,
    jn_truncated_seminorm,
    near_attaining_point,
    random_unit_maxabs,
    seminorm_bpb_construct,
    seminorm_norms,
    uniform_vs_lip_gap,
)
from src.services.ucx import modulus_convexity, slice_diameter_check
from src.utils.serialization import format_fraction, is_exact, parse_number

logger = logging.getLogger(__name__)


@dataclass
class Outcome:
    """What a handler measured. ``violations`` name each failed inequality with both sides."""

    measured: dict[str, Any]
    key_value: Any = None
    bound: Any = None
    slack: float | None = None
    bounds: dict[str, Any] = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)


Handler = Callable[[dict[str, Any], int], Outcome]


# ========== INPUT PARSING ==========
def _document(cls, data: Any, path: str):
    try:
        return cls.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in first["loc"])
        raise ScenarioParseError(first["msg"], f"{path}{where}") from exc


def _require(inputs: dict[str, Any], key: str, path: str = "$.inputs") -> Any:
    if key not in inputs:
        raise ScenarioParseError(f"missing field {key!r}", path)
    return inputs[key]


def load_space(data: Any, path: str = "$.inputs.space") -> FinitePointedMetricSpace:
    return space_from_document(_document(SpaceDocument, data, path))


def load_model(data: Any, path: str = "$.inputs.model") -> NormedSpaceModel:
    return model_from_document(_document(ModelDocument, data, path))


def functional_on(space: FinitePointedMetricSpace, raw_values: list) -> LipFunctional:
    values = [parse_number(v) for v in raw_values]
    if space.exact and is_exact(values):
        return LipFunctional.from_exact(space, values)
    return LipFunctional.from_values(space, [float(v) for v in values])


def load_functional(data: Any, path: str = "$.inputs.functional") -> LipFunctional:
    doc = _document(FunctionalDocument, data, path)
    return functional_on(space_from_document(doc.space), doc.values)


def _number(value: Any) -> Any:
    """Fractions become "p/q"; everything else is a float."""
    if isinstance(value, Fraction):
        return format_fraction(value)
    return float(value)


# ========== HANDLERS ==========
def handle_norm(inputs: dict[str, Any], seed: int) -> Outcome:
    f = load_functional(_require(inputs, "functional"))
    labels = f.space.labels
    norm = lip_norm(f)
    certificate = strongly_attains(f, inputs.get("tol"))
    return Outcome(
        measured={
            "norm": _number(norm.norm),
            "pair": [labels[norm.pair[0]], labels[norm.pair[1]]],
            "attaining_pairs": [[labels[p.x], labels[p.y]] for p in certificate.pairs],
        },
        key_value=_number(norm.norm),
    )


def handle_extend(inputs: dict[str, Any], seed: int) -> Outcome:
    f_sub = load_functional(_require(inputs, "functional"))
    target = load_space(_require(inputs, "target"), "$.inputs.target")
    variant = ExtensionVariant(inputs.get("variant", "midpoint"))
    g = mcshane_extend(f_sub, target, variant)
    gap = abs(float(g.norm) - float(f_sub.norm))
    tol = settings.norm_tolerance
    outcome = Outcome(
        measured={
            "norm": _number(g.norm),
            "source_norm": _number(f_sub.norm),
            "variant": variant.value,
            "values": g.to_jsonable()["values"],
        },
        key_value=_number(g.norm),
        bound=_number(f_sub.norm),
        slack=tol - gap,
    )
    if gap > tol:
        outcome.violations.append(f"|‖ext‖ − ‖f‖| <= {tol}: measured {gap!r}")
    return outcome


def handle_freenorm(inputs: dict[str, Any], seed: int) -> Outcome:
    space = load_space(_require(inputs, "space"))
    weights = [float(parse_number(v)) for v in _require(inputs, "weights")]
    if len(weights) != space.size:
        raise ScenarioParseError(f"expected {space.size} weights", "$.inputs.weights")
    z = FreeVector.from_point_weights(space, weights)
    dual = free_norm(z).norm
    primal = free_norm_primal(z)
    gap = abs(dual - primal.norm)
    tol = settings.duality_tolerance
    labels = space.labels
    measured = {
        "norm": dual,
        "primal_norm": primal.norm,
        "gap": gap,
        "transport": [[labels[x], labels[y], amount] for x, y, amount in primal.transport],
    }
    if inputs.get("decompose") and dual <= 1.0 + settings.norm_tolerance:
        decomposition = decompose_in_convW(z)
        measured["decomposition"] = {
            "weights": [
                [labels[x], labels[y], lam]
                for (x, y), lam in sorted(decomposition.weights.items())
            ],
            "total": decomposition.total,
            "residual": decomposition.residual,
        }
    outcome = Outcome(measured, key_value=dual, bound=tol, slack=tol - gap)
    if gap > tol:
        outcome.violations.append(f"|dual − primal| <= {tol}: measured {gap!r}")
    return outcome


def handle_bpb(inputs: dict[str, Any], seed: int) -> Outcome:
    f = load_functional(_require(inputs, "functional"))
    weights = [float(parse_number(v)) for v in _require(inputs, "weights")]
    if len(weights) != f.space.size:
        raise ScenarioParseError(f"expected {f.space.size} weights", "$.inputs.weights")
    w = FreeVector.from_point_weights(f.space, weights)
    delta = float(_require(inputs, "delta"))
    result = bpb_correct(f, w, delta)
    measured = {
        "stage": result.stage,
        "pairing": result.pairing,
        "dist_f": result.dist_f,
        "dist_w": result.dist_w,
        "distance": result.distance,
        "g": result.g.to_jsonable()["values"],
        "z": result.z.full().tolist(),
    }
    outcome = Outcome(measured, result.distance, result.bound, result.bound - result.distance)
    if not result.achieved:
        outcome.violations.append(
            f"max(‖f − g‖, ‖w − z‖) <= {result.bound!r}: measured {result.distance!r}"
        )
    if inputs.get("oracle"):
        oracle = bpb_oracle(f, w, delta)
        measured["oracle_distance"] = oracle.distance
        measured["oracle_achieved"] = oracle.achieved
        if oracle.achieved and not result.achieved:
            outcome.violations.append("staged search missed a witness the oracle found")
    return outcome


def handle_ucx(inputs: dict[str, Any], seed: int) -> Outcome:
    model = load_model(_require(inputs, "model"))
    mode = inputs.get("mode", "modulus")
    eps = float(_require(inputs, "eps"))

    if mode == "modulus":
        estimate = modulus_convexity(model, eps, seed=seed)
        measured = {
            "value": estimate.value,
            "closed_form": estimate.closed_form,
            "method": estimate.method,
            "best": estimate.best,
        }
        outcome = Outcome(measured, key_value=estimate.best, bound=estimate.closed_form)
        if estimate.closed_form is not None:
            gap = abs(estimate.value - estimate.closed_form)
            outcome.slack = 1e-6 - gap
            if gap > 1e-6:
                outcome.violations.append(f"|numeric − closed form| <= 1e-06: measured {gap!r}")
        return outcome

    if mode == "slice":
        functional = np.asarray(_require(inputs, "functional"), dtype=float)
        delta = float(_require(inputs, "delta"))
        check = slice_diameter_check(model, functional, delta, inputs.get("samples"), seed, eps)
        outcome = Outcome(
            {"max_distance": check.max_distance, "accepted": check.accepted},
            key_value=check.max_distance,
            bound=check.bound,
            slack=check.bound - check.max_distance,
        )
        if not check.bound_satisfied:
            outcome.violations.append(
                f"slice diameter < {check.bound!r}: measured {check.max_distance!r}"
            )
        return outcome

    if mode == "pipeline":
        fixture = linear_plus_bump(
            model,
            _require(inputs, "direction"),
            float(_require(inputs, "perturbation")),
            inputs.get("center"),
            float(inputs.get("radius", 0.1)),
        )
        run = run_pipeline_scenario(
            fixture,
            eps,
            segment_length=float(inputs.get("segment_length", 0.25)),
            resolution=int(inputs.get("resolution", 64)),
            neighborhood_count=int(inputs.get("neighborhood_count", 60)),
            seed=seed,
        )
        report = run.report
        distance = report.audit("f_g_distance")
        measured = report.to_jsonable()
        measured["grid_points"] = run.space.size
        measured["normalization"] = run.normalization
        return Outcome(
            measured,
            key_value=distance.measured,
            bound=distance.bound,
            slack=min(a.slack for a in report.audits),
            violations=report.violations,
        )

    raise ScenarioParseError(f"unknown ucx mode {mode!r}", "$.inputs.mode")


def handle_cantor(inputs: dict[str, Any], seed: int) -> Outcome:
    depth = int(_require(inputs, "depth"))
    cantor = svc_set(depth)
    measured: dict[str, Any] = {
        "measure": format_fraction(cantor.measure),
        "intervals": len(cantor.kept_intervals),
    }
    outcome = Outcome(measured, key_value=format_fraction(cantor.measure))
    half = Fraction(1, 2)

    count = int(inputs.get("candidates", 0))
    if count:
        g = cantor_primitive(depth)
        bounds = [sa_distance_lower_bound(g, f) for f in sa_candidate_family(count, seed)]
        weakest = min(bounds, key=lambda b: b.certified_bound)
        measured["min_certified_bound"] = format_fraction(weakest.certified_bound)
        measured["min_distance"] = format_fraction(min(b.distance for b in bounds))
        measured["cases"] = {c: sum(b.case == c for b in bounds) for c in ("small_norm", "gap")}
        outcome.bound = format_fraction(half)
        outcome.slack = float(weakest.certified_bound - half)
        if weakest.certified_bound < half:
            outcome.violations.append(
                f"certified distance >= 1/2: measured {format_fraction(weakest.certified_bound)}"
            )

    segment = inputs.get("segment")
    if segment:
        model = load_model(
            segment.get("model", {"kind": "lp", "dim": 2, "p": 2.0}), "$.inputs.segment.model"
        )
        space = segment_grid(model, depth, seed=seed)
        candidates = sa_candidate_family(int(segment.get("candidates", 200)), seed)
        audit = mconv_obstruction(space, depth, candidates)
        measured["segment"] = audit.to_jsonable()
        if not audit.passed:
            outcome.violations.append(
                f"grid distance >= {audit.threshold!r}: measured {audit.min_distance!r}"
            )
    return outcome


def handle_sa_density(inputs: dict[str, Any], seed: int) -> Outcome:
    if "functional" in inputs:
        g = load_functional(inputs["functional"])
        balls = []
        for k, raw in enumerate(_require(inputs, "balls")):
            doc = _document(BallDocument, raw, f"$.inputs.balls[{k}]")
            balls.append(
                BallSpec(
                    g.space.resolve(doc.center),
                    parse_number(doc.radius),
                    parse_number(doc.eps),
                    g.space.resolve(doc.witness),
                )
            )
    else:
        fixture = weak_density_fixture(int(inputs.get("count", 4)))
        g, balls = fixture.g, list(fixture.balls)
    steps = sa_weak_density_construct(g, balls)
    deviations = [s.deviation for s in steps]
    measured = {
        "steps": [s.to_jsonable() for s in steps],
        "deviations": deviations,
        "monotone": all(b <= a for a, b in zip(deviations, deviations[1:])),
    }
    outcome = Outcome(measured, key_value=deviations[-1] if deviations else None)
    for s in steps:
        if not s.passed:
            outcome.violations.append(
                f"‖g_{s.index}‖ == {_number(s.target_norm)} with support in U_{s.index}: "
                f"measured {_number(s.norm)}, contained {s.support_contained}"
            )
    return outcome


def handle_seminorm(inputs: dict[str, Any], seed: int) -> Outcome:
    mode = inputs.get("mode", "gap")
    if mode == "gap":
        report = uniform_vs_lip_gap(int(_require(inputs, "n")))
        outcome = Outcome(report.to_jsonable(), key_value=_number(report.uniform_distance))
        outcome.bound = _number(report.lip_lower_bound)
        if report.lip_lower_bound < 1:
            outcome.violations.append(f"Lipschitz distance >= 1: measured {report.lip_lower_bound}")
        return outcome

    if mode == "jn":
        n = int(_require(inputs, "n"))
        p = jn_truncated_seminorm(n, int(inputs.get("dim", n)))
        ambient = NormedSpaceModel.lp(p.dim, 2.0)
        report = attainment_equivalences(p, ambient)
        measured = report.to_jsonable()
        outcome = Outcome(measured, key_value=_number(report.norm), bound="1")
        if not report.agree:
            outcome.violations.append("attainment conditions disagree at the witness")
        return outcome

    if mode == "norms":
        p = SeminormModel.maxabs(_require(inputs, "functionals"))
        ambient = load_model(_require(inputs, "model"))
        norms = seminorm_norms(p, ambient)
        outcome = Outcome(
            norms.to_jsonable(), key_value=_number(norms.sup_norm), bound=norms.lip_norm
        )
        outcome.slack = settings.norm_tolerance - norms.slack
        if not norms.agree:
            outcome.violations.append(
                f"|sup − lip| <= {settings.norm_tolerance}: measured {norms.slack!r}"
            )
        return outcome

    if mode == "bpb":
        delta, eps = float(_require(inputs, "delta")), float(_require(inputs, "eps"))
        rng = np.random.default_rng(seed)
        if "functionals" in inputs:
            p0 = SeminormModel.maxabs(np.asarray(inputs["functionals"], dtype=float))
        else:
            p0 = random_unit_maxabs(int(inputs.get("dim", 3)), int(inputs.get("count", 5)), rng)
        x0 = inputs.get("x0")
        x0 = near_attaining_point(p0, delta, rng) if x0 is None else np.asarray(x0, dtype=float)
        result = seminorm_bpb_construct(p0, x0, delta, eps)
        distance = max(result.distance_x, result.distance_p)
        return Outcome(
            result.to_jsonable(),
            key_value=distance,
            bound=eps,
            slack=eps - distance,
            violations=[a.describe() for a in result.audits if not a.passed],
        )

    raise ScenarioParseError(f"unknown seminorm mode {mode!r}", "$.inputs.mode")


def separated_tents(
    rng: np.random.Generator, count: int, radius: float
) -> list[float]:
    """Centers of ``count`` tents of radius ``radius`` in [0, 1] with disjoint supports."""
    slots = int(np.floor(1.0 / (3.0 * radius)))
    if count > slots:
        raise PreconditionError("the tents do not fit into [0, 1]")
    chosen = np.sort(rng.choice(slots, size=count, replace=False))
    return [float((3 * k + 1.5) * radius) for k in chosen]


def handle_c0check(inputs: dict[str, Any], seed: int) -> Outcome:
    points = int(inputs.get("grid", 201))
    grid = [k / (points - 1) for k in range(points)]
    space = FinitePointedMetricSpace.on_line(grid, [f"{t:.6g}" for t in grid])
    radius = float(inputs.get("radius", 0.1))
    locality_eps = float(inputs.get("locality_eps", 0.05))
    rng = np.random.default_rng(seed)
    centers = inputs.get("centers")
    if centers is None:
        centers = separated_tents(rng, int(inputs.get("count", 3)), radius)
    coefficients = inputs.get("coefficients")
    if coefficients is None:
        coefficients = rng.uniform(-2.0, 2.0, size=len(centers)).tolist()
    check = c0_estimate_check(tent_family(space, centers, radius), coefficients, locality_eps)
    measured = {
        "lhs": check.lhs,
        "rhs": check.rhs,
        "deviation": check.deviation,
        "tolerance": check.tolerance,
        "separation": check.separation,
        "centers": list(centers),
        "coefficients": [float(a) for a in coefficients],
    }
    outcome = Outcome(measured, check.deviation, check.tolerance, check.tolerance - check.deviation)
    if not check.passed:
        outcome.violations.append(
            f"|‖Σ a_j f_j‖ − max|a_k|| <= {check.tolerance!r}: measured {check.deviation!r}"
        )
    return outcome


HANDLERS: dict[str, Handler] = {
    "norm": handle_norm,
    "extend": handle_extend,
    "freenorm": handle_freenorm,
    "bpb": handle_bpb,
    "ucx": handle_ucx,
    "cantor": handle_cantor,
    "sa-density": handle_sa_density,
    "seminorm": handle_seminorm,
    "c0check": handle_c0check,
}
