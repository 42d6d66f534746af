"""
Bishop-Phelps-Bollobás correction in the free space of a finite pointed metric space.

Given a norm-one f and a molecule w with ⟨f, w⟩ > 1 − δ, look for (g, z) with
⟨g, z⟩ = ‖g‖ = ‖z‖ = 1 and max(‖f − g‖, ‖w − z‖) ≤ √(2δ). Existence is guaranteed; the
search is staged (identity, molecule-anchored LPs, alternating LPs, brute force on tiny
spaces) and a miss is reported, never hidden.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple, Protocol

import numpy as np
from scipy import sparse

from src.core.config import settings
from src.core.errors import (
    ContractViolationError,
    CorrectorNotAchievedError,
    GridTooCoarseError,
    LpInfeasibleError,
    PreconditionError,
    SizeGuardError,
)
from src.core.lp import LinearProgram, solve_lp
from src.services.freespace import (
    Decomposition,
    FreeVector,
    decompose_in_convW,
    free_norm,
    pair_incidence,
    pairing,
)
from src.services.lipfunc import (
    AttainmentCertificate,
    AttainmentMode,
    LipFunctional,
    directional_certificate,
    lip_norm,
)
from src.services.metric_core import quotient_matrix
from src.services.normed import distance_to_segment

logger = logging.getLogger(__name__)


# ========== RESULTS ==========
@dataclass(frozen=True)
class BpbResult:
    g: LipFunctional
    z: FreeVector
    pairing: float
    dist_f: float
    dist_w: float
    bound: float
    achieved: bool
    stage: str
    candidates_tried: int = 0

    @property
    def distance(self) -> float:
        return max(self.dist_f, self.dist_w)


@dataclass
class _Candidate:
    g: LipFunctional
    z: FreeVector
    dist_f: float
    dist_w: float

    @property
    def score(self) -> float:
        return max(self.dist_f, self.dist_w)


@dataclass(frozen=True)
class AuditEntry:
    """One audited inequality ``measured <relation> bound``."""

    name: str
    measured: float
    bound: float
    relation: str = "<"
    passed: bool = True
    slack: float = 0.0

    @classmethod
    def check(cls, name: str, measured: float, bound: float, relation: str = "<") -> "AuditEntry":
        measured, bound = float(measured), float(bound)
        if relation in ("<", "<="):
            slack = bound - measured
            passed = measured < bound if relation == "<" else measured <= bound
        else:
            slack = measured - bound
            passed = measured > bound if relation == ">" else measured >= bound
        return cls(name, measured, bound, relation, bool(passed), slack)

    def describe(self) -> str:
        return f"{self.name}: measured {self.measured!r} {self.relation} bound {self.bound!r}"


# ========== LP BUILDING BLOCKS ==========
def _nearest_attaining(
    f: LipFunctional, anchors: Sequence[FreeVector]
) -> tuple[LipFunctional, float]:
    """min ‖f − g‖ over ‖g‖ ≤ 1 with ⟨g, z⟩ = 1 for every anchor z."""
    space = f.space
    inc = pair_incidence(space)
    m, rho = inc.matrix, inc.rho
    k, count = space.size - 1, rho.size
    f_diff = m @ f.values[space.non_base]
    no_t = sparse.csr_matrix((count, 1))
    rho_col = sparse.csr_matrix(rho.reshape(-1, 1))
    a_ub = sparse.vstack(
        [
            sparse.hstack([m, no_t]),
            sparse.hstack([-m, no_t]),
            sparse.hstack([-m, -rho_col]),
            sparse.hstack([m, -rho_col]),
        ]
    ).tocsr()
    b_ub = np.concatenate([rho, rho, -f_diff, f_diff])
    a_eq = np.array([np.append(z.coeffs, 0.0) for z in anchors])
    problem = LinearProgram(
        c=np.append(np.zeros(k), 1.0),
        a_ub=a_ub,
        b_ub=b_ub,
        a_eq=a_eq,
        b_eq=np.ones(len(anchors)),
        bounds=[(None, None)] * k + [(0.0, None)],
    )
    solution = solve_lp(problem)
    values = np.zeros(space.size)
    values[space.non_base] = solution.x[:k]
    return LipFunctional(space, values), float(solution.x[k])


def attained_pairs(g: LipFunctional, tol: float | None = None) -> list[tuple[int, int]]:
    """Ordered pairs whose quotient is within ``tol`` of ‖g‖, row-major."""
    tol = settings.norm_tolerance if tol is None else tol
    q = quotient_matrix(g.space.dist, g.values)
    top = float(q.max())
    return [(int(x), int(y)) for x, y in np.argwhere(q >= top - tol)]


def _nearest_face_point(g: LipFunctional, w: FreeVector) -> tuple[FreeVector, float]:
    """min ‖w − z‖ over the face {z ∈ conv W : ⟨g, z⟩ = 1} of a norm-one g."""
    space = g.space
    inc = pair_incidence(space)
    m, rho = inc.matrix, inc.rho
    faces = [FreeVector.molecule(space, x, y) for x, y in attained_pairs(g)]
    hull = np.column_stack([mol.coeffs for mol in faces])
    size, count = hull.shape[1], rho.size
    a_eq = sparse.vstack(
        [
            sparse.hstack([sparse.csr_matrix(hull), m.T, -m.T]),
            sparse.hstack(
                [sparse.csr_matrix(np.ones((1, size))), sparse.csr_matrix((1, 2 * count))]
            ),
        ]
    ).tocsr()
    problem = LinearProgram(
        c=np.concatenate([np.zeros(size), rho, rho]),
        a_eq=a_eq,
        b_eq=np.append(w.coeffs, 1.0),
    )
    solution = solve_lp(problem)
    weights = solution.x[:size]
    return FreeVector(space, hull @ weights), float(solution.objective)


def _alternate(f: LipFunctional, w: FreeVector, start: FreeVector) -> _Candidate:
    z = start
    best: _Candidate | None = None
    previous = math.inf
    for _ in range(settings.bpb_max_rounds):
        g, dist_f = _nearest_attaining(f, [z])
        g = g / float(g.norm)
        z, dist_w = _nearest_face_point(g, w)
        candidate = _Candidate(g, z, dist_f, dist_w)
        if best is None or candidate.score < best.score:
            best = candidate
        if previous - candidate.score < settings.bpb_progress_threshold:
            break
        previous = candidate.score
    return best


def _finalize(
    f: LipFunctional, w: FreeVector, candidate: _Candidate, bound: float, stage: str, tried: int
) -> BpbResult:
    g = candidate.g / float(candidate.g.norm)
    dist_f = float(lip_norm(f - g).norm)
    dist_w = free_norm(w - candidate.z).norm
    achieved = max(dist_f, dist_w) <= bound + settings.norm_tolerance
    return BpbResult(
        g=g,
        z=candidate.z,
        pairing=pairing(g, candidate.z),
        dist_f=dist_f,
        dist_w=dist_w,
        bound=bound,
        achieved=achieved,
        stage=stage,
        candidates_tried=tried,
    )


def _check_preconditions(f: LipFunctional, w: FreeVector, delta: float) -> float:
    if not 0 < delta < 2:
        raise PreconditionError(f"delta must lie in (0, 2), got {delta!r}")
    if abs(float(f.norm) - 1.0) > settings.norm_tolerance:
        raise PreconditionError(f"f must have norm 1, got {float(f.norm)!r}")
    value = pairing(f, w)
    if value <= 1.0 - delta:
        raise PreconditionError(
            f"⟨f, w⟩ = {value!r} does not exceed 1 − delta = {1.0 - delta!r}"
        )
    return value


def _ranked_molecules(f: LipFunctional) -> list[tuple[int, int]]:
    """Ordered pairs by decreasing ⟨f, molecule⟩, row-major on ties."""
    n = f.space.size
    q = quotient_matrix(f.space.dist, f.values)
    order = np.argsort(-q.ravel(), kind="stable")
    return [divmod(int(i), n) for i in order if i // n != i % n]


# ========== CORRECTOR ==========
def bpb_correct(f: LipFunctional, w: FreeVector, delta: float) -> BpbResult:
    """Find (g, z) attaining each other within √(2δ) of (f, w).

    Args:
        f: norm-one functional.
        w: a molecule (or any norm-one free vector) with ⟨f, w⟩ > 1 − delta.
        delta: in (0, 2).

    Returns:
        BpbResult: ``achieved`` is False when the staged search missed the bound.

    Raises:
        PreconditionError: on ‖f‖ ≠ 1, delta outside (0, 2) or ⟨f, w⟩ ≤ 1 − delta.
    """
    value = _check_preconditions(f, w, delta)
    bound = math.sqrt(2.0 * delta)
    if value >= 1.0 - 1e-12:
        logger.info("bpb corrector: f already attains at w")
        return BpbResult(f, w, value, 0.0, 0.0, bound, True, "identity", 0)

    space = f.space
    small = space.size <= settings.bpb_oracle_max_points
    ranked = _ranked_molecules(f)
    screened = ranked if small else ranked[: settings.bpb_candidate_limit]
    candidates: list[FreeVector] = [w]
    for x, y in screened:
        mol = FreeVector.molecule(space, x, y)
        if free_norm(w - mol).norm <= bound:
            candidates.append(mol)

    # stage 1: anchored at a single molecule
    tried = 0
    best: _Candidate | None = None
    for anchor in candidates:
        tried += 1
        g, dist_f = _nearest_attaining(f, [anchor])
        candidate = _Candidate(g, anchor, dist_f, free_norm(w - anchor).norm)
        if best is None or candidate.score < best.score:
            best = candidate
    if best.score <= bound:
        result = _finalize(f, w, best, bound, "anchored", tried)
        if result.achieved:
            logger.info(
                f"bpb corrector: anchored stage, distance {result.distance:.3g} ≤ {bound:.3g}"
            )
            return result

    # stage 2: alternating projections from every candidate
    starts = candidates + [FreeVector.molecule(space, *ranked[0])]
    for start in starts:
        tried += 1
        candidate = _alternate(f, w, start)
        if candidate.score < best.score:
            best = candidate
    result = _finalize(f, w, best, bound, "alternating", tried)
    if result.achieved or not small:
        logger.info(
            f"bpb corrector: alternating stage, distance {result.distance:.3g} vs bound {bound:.3g}"
        )
        return result

    # stage 3: brute force on tiny spaces
    oracle = bpb_oracle(f, w, delta)
    if oracle.distance < result.distance:
        result = oracle
    logger.info(f"bpb corrector: oracle stage, achieved={result.achieved}")
    return result


def bpb_oracle(f: LipFunctional, w: FreeVector, delta: float) -> BpbResult:
    """Enumerate faces spanned by one or two molecules; only for tiny spaces.

    Raises:
        SizeGuardError: if the space has more than ``bpb_oracle_max_points`` points.
    """
    space = f.space
    if space.size > settings.bpb_oracle_max_points:
        raise SizeGuardError(
            f"the brute-force oracle handles at most {settings.bpb_oracle_max_points} points"
        )
    _check_preconditions(f, w, delta)
    bound = math.sqrt(2.0 * delta)
    mols = [FreeVector.molecule(space, x, y) for x, y in _ranked_molecules(f)]
    faces = [[m] for m in mols] + [list(pair) for pair in combinations(mols, 2)]
    best: _Candidate | None = None
    tried = 0
    for face in faces:
        try:
            g, dist_f = _nearest_attaining(f, face)
        except LpInfeasibleError:
            continue
        tried += 1
        g = g / float(g.norm)
        z, dist_w = _nearest_face_point(g, w)
        candidate = _Candidate(g, z, dist_f, dist_w)
        if best is None or candidate.score < best.score:
            best = candidate
    return _finalize(f, w, best, bound, "oracle", tried)


# ========== PRELIMINARY ALGORITHM ==========
@dataclass(frozen=True)
class TraceStep:
    n: int
    alpha: float
    delta_n: float
    v: int
    w: int
    h_quotient: float
    g_quotient: float
    g_bound: float
    h_bound: float


@dataclass(frozen=True)
class LipBpbTrace:
    g: LipFunctional
    steps: tuple[TraceStep, ...]
    nu: float
    delta: float
    corrector: BpbResult
    decomposition: Decomposition

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(s.v, s.w) for s in self.steps]

    @property
    def alphas(self) -> list[float]:
        return [s.alpha for s in self.steps]

    @property
    def deltas(self) -> list[float]:
        return [s.delta_n for s in self.steps]

    @property
    def bound(self) -> float:
        return math.sqrt(2.0 * self.delta)


def lip_bpb_preliminary(
    f: LipFunctional,
    pair: tuple[int, int],
    h: LipFunctional,
    delta: float,
    n_max: int | None = None,
) -> LipBpbTrace:
    """Correct f near an almost-attaining pair while steering towards where h attains.

    The corrector supplies (g, z); z is decomposed over molecules and at step n the
    molecule maximising α_n⟨h, u⟩ + (1 − α_n)⟨g, u⟩ is recorded, with α_n = 1/(n+1) and
    δ_n = 1/(n+1)².

    Raises:
        PreconditionError: if the f-quotient at ``pair`` is ≤ 1 − delta or h does not
            attain its unit norm there.
        CorrectorNotAchievedError: if the corrector misses √(2δ).
    """
    n_max = settings.preliminary_steps if n_max is None else n_max
    x, y = pair
    tol = settings.norm_tolerance
    if abs(float(h.norm) - 1.0) > tol or abs(float(h.quotient(x, y)) - 1.0) > tol:
        raise PreconditionError("h must have norm 1 and attain it at the pair")
    if float(f.quotient(x, y)) <= 1.0 - delta:
        raise PreconditionError(f"the f-quotient at {pair} does not exceed 1 − delta")

    w = FreeVector.molecule(f.space, x, y)
    result = bpb_correct(f, w, delta)
    if not result.achieved:
        raise CorrectorNotAchievedError(
            f"corrector distance {result.distance!r} exceeds bound {result.bound!r}", result
        )
    nu = result.dist_w + 1e-9
    if nu >= result.bound:
        nu = (result.dist_w + result.bound) / 2.0
    decomposition = decompose_in_convW(result.z)
    support = decomposition.support or [(x, y)]
    h_q = np.array([float(h.quotient(a, b)) for a, b in support])
    g_q = np.array([float(result.g.quotient(a, b)) for a, b in support])
    root = result.bound

    steps = []
    for n in range(1, n_max + 1):
        alpha = 1.0 / (n + 1)
        delta_n = 1.0 / (n + 1) ** 2
        k = int(np.argmax(alpha * h_q + (1.0 - alpha) * g_q))
        steps.append(
            TraceStep(
                n=n,
                alpha=alpha,
                delta_n=delta_n,
                v=support[k][0],
                w=support[k][1],
                h_quotient=float(h_q[k]),
                g_quotient=float(g_q[k]),
                g_bound=1.0 - delta_n - alpha / (1.0 - alpha) * root,
                h_bound=1.0 - nu - delta_n * (1.0 - alpha) / alpha,
            )
        )
    return LipBpbTrace(result.g, tuple(steps), nu, delta, result, decomposition)


# ========== REFINEMENT ==========
class StepOutcome(NamedTuple):
    functional: LipFunctional
    pair: tuple[int, int]
    pairs: tuple[tuple[int, int], ...] = ()


class StepCorrector(Protocol):
    """One local correction at scale eps: returns f' close to f and a short pair."""

    def delta_for(self, eps: float) -> float: ...

    def __call__(self, f: LipFunctional, pair: tuple[int, int], eps: float) -> StepOutcome: ...


@dataclass(frozen=True)
class RefinementStep:
    n: int
    eps_n: float
    pair: tuple[int, int]
    audits: tuple[AuditEntry, ...]


@dataclass(frozen=True)
class RefinementResult:
    g: LipFunctional
    v: int
    u: tuple[float, ...]
    trace: tuple[RefinementStep, ...]
    stop_reason: str
    certificate: AttainmentCertificate
    total_dist_f: float
    hull_distance: float
    pairs: list[tuple[int, int]] = field(default_factory=list)


def _unit_direction(space, pair: tuple[int, int]) -> np.ndarray:
    x, y = pair
    diff = space.coords[x] - space.coords[y]
    return diff / space.model.norm(diff)


def refine_to_local_attainment(
    f: LipFunctional,
    pair: tuple[int, int],
    eps: float,
    step: StepCorrector,
    max_iters: int | None = None,
    floor: float = 1e-9,
) -> RefinementResult:
    """Drive f and its almost-attaining pair towards local directional attainment.

    Iteration n runs ``step`` at scale ε_n = eps/2^(n+2) and audits its output:
    (a) ‖f_n − f_{n+1}‖ < ε_n, (b) direction drift < ε_n, (c) the new quotient exceeds
    1 − δ(ε_{n+1}), (d) dist(x_{n+1}, conv{x_n, y_n}) < ε_n, (e) ‖x_{n+1} − y_{n+1}‖ < ε_n.

    Raises:
        PreconditionError: if the space has no coordinates or the starting quotient is too small.
        ContractViolationError: naming the first violated property.
    """
    space = f.space
    if not space.has_coordinates or space.model is None:
        raise PreconditionError("refinement needs a space sampled from a normed model")
    max_iters = settings.refinement_max_iters if max_iters is None else max_iters
    model = space.model
    start = float(f.quotient(*pair))
    if start <= 1.0 - step.delta_for(eps / 8):
        raise PreconditionError(f"starting quotient {start!r} is below 1 − δ(ε_1)")

    current, current_pair = f, pair
    trace: list[RefinementStep] = []
    last_pairs: tuple[tuple[int, int], ...] = ()
    total = 0.0
    stop_reason = "max_iters"
    for n in range(1, max_iters + 1):
        eps_n = eps / 2 ** (n + 2)
        try:
            outcome = step(current, current_pair, eps_n)
        except GridTooCoarseError as exc:
            logger.info(f"refinement: grid too coarse at iteration {n} ({exc})")
            stop_reason = "resolution_floor"
            break
        nxt, nxt_pair = outcome.functional, outcome.pair
        unchanged = nxt_pair == current_pair and np.array_equal(nxt.values, current.values)

        x0, y0 = current_pair
        x1, y1 = nxt_pair
        dist_f = float(lip_norm(current - nxt).norm)
        drift = model.norm(_unit_direction(space, current_pair) - _unit_direction(space, nxt_pair))
        quotient = float(nxt.quotient(x1, y1))
        hull = distance_to_segment(model, space.coords[x1], space.coords[x0], space.coords[y0])
        separation = float(space.dist[x1, y1])
        audits = [
            AuditEntry.check("a: functional step", dist_f, eps_n, "<" if not unchanged else "<="),
            AuditEntry.check("b: direction drift", drift, eps_n, "<" if not unchanged else "<="),
            AuditEntry.check("c: quotient", quotient, 1.0 - step.delta_for(eps_n / 2), ">"),
            AuditEntry.check("d: hull distance", hull, eps_n, "<" if not unchanged else "<="),
        ]
        if not unchanged:
            audits.append(AuditEntry.check("e: pair separation", separation, eps_n))
        for audit in audits:
            if not audit.passed:
                key = audit.name.split(":")[0]
                raise ContractViolationError(key, audit.measured, audit.bound, n)

        trace.append(RefinementStep(n, eps_n, nxt_pair, tuple(audits)))
        total += dist_f
        current, current_pair = nxt, nxt_pair
        last_pairs = outcome.pairs or (nxt_pair,)
        if unchanged:
            stop_reason = "fixed_point"
            break
        if separation < floor:
            stop_reason = "separation_floor"
            break

    logger.info(f"refinement stopped after {len(trace)} iterations: {stop_reason}")
    v = current_pair[0]
    u = _unit_direction(space, current_pair)
    x, y = pair
    certificate = directional_certificate(
        current,
        last_pairs or (current_pair,),
        AttainmentMode.LOCAL_DIRECTIONAL,
        direction=u,
        localization=space.coords[v],
    )
    return RefinementResult(
        g=current,
        v=v,
        u=tuple(map(float, u)),
        trace=tuple(trace),
        stop_reason=stop_reason,
        certificate=certificate,
        total_dist_f=total,
        hull_distance=distance_to_segment(model, space.coords[v], space.coords[x], space.coords[y]),
        pairs=[s.pair for s in trace],
    )
