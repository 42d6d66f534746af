"""Uniformly convex ℓ_p models and the pieces of the local directional correction:
modulus of convexity, slices, the duality map, the short sub-pair on a segment and the
bump functional. The pipeline itself is the graph in ``src.services.pipeline``.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from src.core.config import settings
from src.core.errors import (
    GridTooCoarseError,
    PreconditionError,
    SamplerExhaustedError,
    StructuralError,
)
from src.services.lipfunc import LipFunctional
from src.services.metric_core import FinitePointedMetricSpace
from src.services.normed import NormedSpaceModel

logger = logging.getLogger(__name__)


# ========== MODULUS OF CONVEXITY ==========
@dataclass(frozen=True)
class ModulusEstimate:
    value: float
    closed_form: float | None
    method: str
    restarts: int

    @property
    def best(self) -> float:
        """The closed form when one is known, otherwise the numeric estimate."""
        return self.closed_form if self.closed_form is not None else self.value


def closed_form_modulus(p: float, eps: float) -> float | None:
    """δ(ε) for ℓ_p with p ≥ 2: 1 − (1 − (ε/2)^p)^(1/p); None for p < 2."""
    if p == 2.0:
        return 1.0 - math.sqrt(1.0 - eps * eps / 4.0)
    if p > 2.0:
        return 1.0 - (1.0 - (eps / 2.0) ** p) ** (1.0 / p)
    return None


def _slsqp_pair(model: NormedSpaceModel, eps: float, start: np.ndarray, ftol: float):
    d = model.dim
    constraints = [
        {"type": "ineq", "fun": lambda v: 1.0 - model.norm(v[:d])},
        {"type": "ineq", "fun": lambda v: 1.0 - model.norm(v[d:])},
        {"type": "ineq", "fun": lambda v: model.norm(v[:d] - v[d:]) - eps},
    ]
    return minimize(
        lambda v: 1.0 - model.norm((v[:d] + v[d:]) / 2.0),
        start,
        method="SLSQP",
        constraints=constraints,
        options={"ftol": ftol, "maxiter": 500},
    )


def _feasible(model: NormedSpaceModel, v: np.ndarray, eps: float, tol: float = 1e-9) -> bool:
    d = model.dim
    return (
        model.norm(v[:d]) <= 1.0 + tol
        and model.norm(v[d:]) <= 1.0 + tol
        and model.norm(v[:d] - v[d:]) >= eps - tol
    )


@lru_cache(maxsize=128)
def _modulus(dim: int, p: float, eps: float, restarts: int, seed: int) -> ModulusEstimate:
    model = NormedSpaceModel.lp(dim, p)
    rng = np.random.default_rng(seed)
    best_value, best_start = math.inf, None
    for _ in range(restarts):
        x = model.random_directions(rng, 1)[0]
        y = x - eps * model.random_directions(rng, 1)[0]
        y = y / max(1.0, model.norm(y))
        result = _slsqp_pair(model, eps, np.concatenate([x, y]), ftol=1e-10)
        if result.success and _feasible(model, result.x, eps) and result.fun < best_value:
            best_value, best_start = float(result.fun), result.x

    closed = closed_form_modulus(p, eps)
    if best_start is not None:
        polished = _slsqp_pair(model, eps, best_start, ftol=1e-14)
        if polished.success and _feasible(model, polished.x, eps):
            best_value = min(best_value, float(polished.fun))
        return ModulusEstimate(max(best_value, 0.0), closed, "slsqp", restarts)

    # every restart failed: dense sampling of sphere pairs at separation ≥ eps
    pairs = settings.modulus_fallback_pairs
    value = math.inf
    chunk = 50_000
    for start in range(0, pairs, chunk):
        count = min(chunk, pairs - start)
        x = model.random_directions(rng, count)
        y = model.random_directions(rng, count)
        keep = model.norms(x - y) >= eps
        if np.any(keep):
            value = min(value, float((1.0 - model.norms((x[keep] + y[keep]) / 2.0)).min()))
    logger.warning(f"modulus of {model.name} at eps={eps}: optimizer failed, sampled {value:.6g}")
    return ModulusEstimate(value, closed, "sampling", restarts)


def modulus_convexity(
    model: NormedSpaceModel, eps: float, restarts: int | None = None, seed: int = 0
) -> ModulusEstimate:
    """δ_X(ε) = inf{1 − ‖(x+y)/2‖ : x, y ∈ B_X, ‖x − y‖ ≥ ε} by SLSQP with restarts.

    Raises:
        NotUniformlyConvexError: for polyhedral models.
        PreconditionError: if eps is outside (0, 2].
    """
    model.require_uniformly_convex()
    if not 0 < eps <= 2:
        raise PreconditionError(f"eps must lie in (0, 2], got {eps!r}")
    restarts = settings.modulus_restarts if restarts is None else restarts
    return _modulus(model.dim, float(model.p), float(eps), int(restarts), int(seed))


def delta_for_eps(model: NormedSpaceModel, eps: float) -> float:
    """min(ε²/2, (δ_X(ε)/2)²/2), shrunk by 1 − 1e-6.

    Both √(2δ) < δ_X(ε)/2 and δ < ε²/2 then hold strictly.
    """
    if not 0 < eps <= 0.5:
        raise PreconditionError(f"eps must lie in (0, 1/2], got {eps!r}")
    modulus = modulus_convexity(model, eps).best
    return min(eps * eps / 2.0, (modulus / 2.0) ** 2 / 2.0) * (1.0 - 1e-6)


# ========== SLICES ==========
@dataclass(frozen=True)
class SliceCheck:
    max_distance: float
    bound_satisfied: bool
    accepted: int
    bound: float


def _attaining_point(model: NormedSpaceModel, functional: np.ndarray) -> np.ndarray:
    """The unit vector where an ℓ_p functional attains its norm."""
    q = model.q
    raw = np.sign(functional) * np.abs(functional) ** (q - 1.0)
    return raw / model.norm(raw)


def _max_pairwise(model: NormedSpaceModel, points: np.ndarray, chunk: int = 512) -> float:
    best = 0.0
    for start in range(0, len(points), chunk):
        block = points[start : start + chunk]
        best = max(best, float(model.norms(block[:, None, :] - points[None, :, :]).max()))
    return best


def slice_diameter_check(
    model: NormedSpaceModel,
    functional,
    delta: float,
    sample_count: int | None = None,
    seed: int = 0,
    eps: float | None = None,
) -> SliceCheck:
    """Sample S(B_X, f*, δ) = {x ∈ B_X : f*(x) > 1 − δ} and report its sampled diameter.

    The proposal pool depends only on the seed, so slices for smaller δ are sub-samples
    of slices for larger δ.

    Raises:
        PreconditionError: if ‖f*‖ ≠ 1.
        SamplerExhaustedError: if no proposal lands in the slice.
    """
    model.require_uniformly_convex()
    phi = np.asarray(functional, dtype=float)
    if abs(model.dual_norm(phi) - 1.0) > settings.norm_tolerance:
        raise PreconditionError("slice functionals must have dual norm 1")
    sample_count = settings.slice_samples if sample_count is None else sample_count
    rng = np.random.default_rng(seed)
    apex = _attaining_point(model, phi)
    scales = [1.0, 1e-1, 1e-2, 1e-3, 1e-4]
    per_scale = max(1, sample_count // len(scales))
    pool = []
    for scale in scales:
        raw = apex + scale * rng.normal(size=(per_scale, model.dim))
        raw = raw / np.maximum(1.0, model.norms(raw))[:, None]
        radii = 1.0 - scale * scale * rng.uniform(size=per_scale)
        pool.append(raw * radii[:, None])
    pool = np.vstack(pool)
    accepted = pool[pool @ phi > 1.0 - delta]
    if accepted.shape[0] == 0:
        raise SamplerExhaustedError(f"no sample in the slice of depth {delta!r}")
    diameter = _max_pairwise(model, accepted)
    bound = 2.0 if eps is None else float(eps)
    satisfied = diameter < bound if eps is not None else diameter <= bound
    return SliceCheck(diameter, satisfied, int(accepted.shape[0]), bound)


# ========== DUALITY MAP ==========
def duality_map(model: NormedSpaceModel, u) -> np.ndarray:
    """x*_i = sign(u_i)|u_i|^(p−1), rescaled to unit dual norm; x*(u) = 1 for unit u."""
    model.require_uniformly_convex()
    u = np.asarray(u, dtype=float)
    if not np.any(u):
        raise PreconditionError("the duality map is undefined at 0")
    if abs(model.norm(u) - 1.0) > settings.norm_tolerance:
        raise PreconditionError(f"u must be a unit vector, got norm {model.norm(u)!r}")
    return model.dual_map(u)


# ========== TILDE PAIR ==========
@dataclass(frozen=True)
class TildePair:
    x: int
    y: int
    separation: float
    quotient: float


def segment_points(space: FinitePointedMetricSpace, x: int, y: int) -> list[tuple[float, int]]:
    """Grid points on conv{x, y} as (t, index) with point = x + t(y − x), sorted by t."""
    coords = space.coords
    a, b = coords[x], coords[y]
    direction = b - a
    length2 = float(direction @ direction)
    if length2 == 0:
        raise PreconditionError("the segment endpoints coincide")
    t = np.clip((coords - a) @ direction / length2, 0.0, 1.0)
    residual = space.model.norms(coords - (a[None, :] + t[:, None] * direction[None, :]))
    scale = max(1.0, float(np.abs(coords).max()))
    on_segment = np.flatnonzero(residual <= 1e-9 * scale)
    return sorted((float(t[i]), int(i)) for i in on_segment)


def select_tilde_pair(
    f: LipFunctional, x: int, y: int, delta: float, eps: float
) -> TildePair:
    """A short sub-pair of conv{x, y}, same direction, with quotient > 1 − δ.

    Constraint: ‖x̃ − ỹ‖ < ¼ min{ε, ‖x̃‖, ‖ỹ‖}. Pairs are scanned by decreasing
    separation, then by position along the segment.

    Raises:
        PreconditionError: if the f-quotient at (x, y) is ≤ 1 − delta.
        GridTooCoarseError: if no sampled pair qualifies.
    """
    space = f.space
    if float(f.quotient(x, y)) <= 1.0 - delta:
        raise PreconditionError(f"the f-quotient at ({x}, {y}) does not exceed 1 − delta")
    points = segment_points(space, x, y)
    norms = space.model.norms(space.coords)
    pairs = [
        (tb - ta, ta, a, b)
        for i, (ta, a) in enumerate(points)
        for tb, b in points[i + 1 :]
    ]
    pairs.sort(key=lambda item: (-item[0], item[1]))
    for _, _, a, b in pairs:
        separation = float(space.dist[a, b])
        if separation >= 0.25 * min(eps, norms[a], norms[b]):
            continue
        quotient = float(f.quotient(a, b))
        if quotient > 1.0 - delta:
            return TildePair(a, b, separation, quotient)
    along = points[-1][0] - points[0][0] if points else 0.0
    length = float(space.dist[x, y]) * along
    smallest = float(min(norms[i] for _, i in points)) if points else 0.0
    target = 0.25 * min(eps, smallest) if smallest > 0 else 0.25 * eps
    needed = max(2 * (len(points) - 1), math.ceil(2.0 * length / target) if target > 0 else 0)
    raise GridTooCoarseError(
        f"no sub-pair of the segment ({x}, {y}) meets the smallness and quotient constraints",
        needed_resolution=needed,
    )


# ========== BUMP ==========
def bump_functional(space: FinitePointedMetricSpace, x_tilde: int, y_tilde: int) -> LipFunctional:
    """F(z) = max{‖x̃ − ỹ‖ − ‖x̃ − z‖, 0}: norm one, attained at (x̃, ỹ), supported near x̃."""
    radius = float(space.dist[x_tilde, y_tilde])
    values = np.maximum(radius - space.dist[x_tilde], 0.0)
    if values[space.base_index] != 0:
        raise PreconditionError("the bump must vanish at the base point")
    return LipFunctional(space, values)


def linear_functional(space: FinitePointedMetricSpace, functional) -> LipFunctional:
    """Restriction of a linear functional to the grid, shifted to vanish at the base."""
    values = space.coords @ np.asarray(functional, dtype=float)
    return LipFunctional(space, values - values[space.base_index])


def require_lp_space(space: FinitePointedMetricSpace, model: NormedSpaceModel) -> None:
    if space.model is None or not space.has_coordinates:
        raise PreconditionError("the space must be sampled from a normed model")
    if space.model.key != model.key:
        raise StructuralError(f"space sampled from {space.model.name}, not {model.name}")
    model.require_uniformly_convex()
