"""
Continuous seminorms on finite-dimensional spaces.

A seminorm is either a finite max of absolute values of linear functionals (MAXABS) or
p(x) = ‖Tx‖ for a matrix T with an ℓ_2 or ℓ_∞ target (OPNORM). The sup norm over the unit
sphere and the Lipschitz norm coincide; the pair (z, 0) through a maximizer z shows it.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Literal

import numpy as np
from scipy.optimize import minimize

from src.core.config import settings
from src.core.errors import PreconditionError, StructuralError
from src.core.lp import LinearProgram, solve_lp
from src.services.bpb import AuditEntry
from src.services.freespace import FreeVector, pairing
from src.services.lipfunc import LipFunctional, lip_norm
from src.services.metric_core import FinitePointedMetricSpace
from src.services.normed import NormedSpaceModel, NormKind

logger = logging.getLogger(__name__)

Target = Literal["l2", "linf"]


# ========== MODELS ==========
class SeminormKind(str, Enum):
    MAXABS = "maxabs"
    OPNORM = "opnorm"


@dataclass(frozen=True, eq=False)
class SeminormModel:
    """p(x) = max_i |⟨φ_i, x⟩| (MAXABS) or p(x) = ‖Tx‖_target (OPNORM).

    ``matrix`` holds the functionals φ_i as rows, or the operator T.
    """

    kind: SeminormKind
    matrix: np.ndarray
    target: Target = "linf"
    exact_rows: tuple[tuple[Fraction, ...], ...] | None = None

    def __post_init__(self) -> None:
        matrix = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if matrix.ndim != 2 or matrix.shape[0] == 0:
            raise StructuralError("a seminorm needs at least one row")
        if not np.all(np.isfinite(matrix)):
            raise PreconditionError("seminorm coefficients must be finite")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def maxabs(cls, functionals) -> "SeminormModel":
        rows = [list(r) for r in np.atleast_2d(np.asarray(functionals, dtype=object))]
        exact = None
        if all(isinstance(v, (int, Fraction)) for r in rows for v in r):
            exact = tuple(tuple(Fraction(v) for v in r) for r in rows)
        return cls(SeminormKind.MAXABS, np.array(rows, dtype=float), "linf", exact)

    @classmethod
    def opnorm(cls, operator, target: Target = "l2") -> "SeminormModel":
        if target not in ("l2", "linf"):
            raise PreconditionError(f"unsupported target norm {target!r}")
        return cls(SeminormKind.OPNORM, np.asarray(operator, dtype=float), target)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def polyhedral(self) -> bool:
        return self.target == "linf"

    def as_operator(self) -> tuple[np.ndarray, Target]:
        """The factoring operator T with p(x) = ‖Tx‖ (rows of a MAXABS model, target ℓ_∞)."""
        return self.matrix, self.target

    def values(self, points) -> np.ndarray:
        images = np.asarray(points, dtype=float) @ self.matrix.T
        if self.target == "l2":
            return np.linalg.norm(images, axis=-1)
        return np.abs(images).max(axis=-1)

    def __call__(self, x) -> float:
        return float(self.values(np.asarray(x, dtype=float)))

    def exact_value(self, x: Sequence[Fraction]) -> Fraction:
        if self.exact_rows is None:
            raise PreconditionError("the seminorm has no exact coefficients")
        return max(abs(sum(a * Fraction(v) for a, v in zip(row, x))) for row in self.exact_rows)

    def spot_check(self, rng: np.random.Generator, trials: int = 100, tol: float = 1e-9) -> bool:
        for _ in range(trials):
            x, y = rng.normal(size=(2, self.dim))
            lam = rng.normal()
            if abs(self(lam * x) - abs(lam) * self(x)) > tol * (1 + abs(lam)) * (1 + self(x)):
                return False
            if self(x + y) > self(x) + self(y) + tol:
                return False
        return True

    def to_jsonable(self) -> dict:
        return {
            "kind": self.kind.value,
            "target": self.target,
            "matrix": self.matrix.tolist(),
        }


def _check_dims(p: SeminormModel, ambient: NormedSpaceModel) -> None:
    if p.dim != ambient.dim:
        raise StructuralError(f"seminorm on R^{p.dim} but ambient space is R^{ambient.dim}")


# ========== SUP NORM ==========
@dataclass(frozen=True)
class SupNorm:
    value: float | Fraction
    witness: np.ndarray
    method: str

    @property
    def certified(self) -> bool:
        return self.method != "multistart"


def _single_coordinate_rows(p: SeminormModel) -> bool:
    return p.exact_rows is not None and all(
        sum(1 for v in row if v != 0) <= 1 for row in p.exact_rows
    )


def _numeric_sup(p: SeminormModel, ambient: NormedSpaceModel, restarts: int, seed: int):
    rng = np.random.default_rng(seed)
    best_value, best_x = -np.inf, None

    def objective(v: np.ndarray) -> float:
        n = ambient.norm(v)
        return 0.0 if n == 0 else -p(v / n)

    starts = list(ambient.random_directions(rng, restarts))
    starts += [np.linalg.svd(p.matrix)[2][0]]
    for start in starts:
        result = minimize(
            objective, start, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14}
        )
        x = result.x / ambient.norm(result.x)
        if p(x) > best_value:
            best_value, best_x = p(x), x
    return best_value, best_x


def sup_norm(p: SeminormModel, ambient: NormedSpaceModel, restarts: int | None = None) -> SupNorm:
    """‖p‖_∞ = sup over the unit sphere, with a maximizer.

    Exact methods: ball vertices for polyhedral ambients (p is convex), the dual norm of
    each row for MAXABS over ℓ_p, the spectral norm for OPNORM into ℓ_2 over ℓ_2. Anything
    else falls back to a multi-start search (an under-estimate).
    """
    _check_dims(p, ambient)
    if ambient.kind == NormKind.POLYHEDRAL:
        vertices = ambient.extreme_points()
        values = p.values(vertices)
        k = int(np.argmax(values))
        value: float | Fraction = float(values[k])
        if p.exact_rows is not None and np.allclose(ambient.generators, np.eye(ambient.dim)):
            value = p.exact_value([Fraction(int(v)) for v in vertices[k]])
        return SupNorm(value, vertices[k], "vertices")

    if p.polyhedral:
        norms = [ambient.dual_norm(row) for row in p.matrix]
        i = int(np.argmax(norms))
        row = p.matrix[i]
        if not np.any(row):
            return SupNorm(0.0, np.eye(ambient.dim)[0], "dual_norm")
        q = ambient.q
        raw = np.sign(row) * np.abs(row) ** (q - 1.0)
        witness = raw / ambient.norm(raw)
        value = float(norms[i])
        if _single_coordinate_rows(p):
            value = max(abs(v) for v in p.exact_rows[i])
        return SupNorm(value, witness, "dual_norm")

    if ambient.p == 2.0:
        _, singular, vt = np.linalg.svd(p.matrix)
        return SupNorm(float(singular[0]), vt[0], "spectral")

    restarts = settings.modulus_restarts if restarts is None else restarts
    value, witness = _numeric_sup(p, ambient, restarts, seed=0)
    logger.debug(f"multi-start sup norm {value:.9g} for {p.kind.value} over {ambient.name}")
    return SupNorm(float(value), witness, "multistart")


# ========== SUP VS LIPSCHITZ ==========
def seminorm_grid(
    p: SeminormModel, ambient: NormedSpaceModel, samples: int = 64, seed: int = 0
) -> FinitePointedMetricSpace:
    """Origin (base), the sup-norm witness, ball vertices when polyhedral, random sphere points."""
    rng = np.random.default_rng(seed)
    points = [np.zeros(ambient.dim), sup_norm(p, ambient).witness]
    if ambient.kind == NormKind.POLYHEDRAL:
        # the witness is usually a vertex already
        points += [v for v in ambient.extreme_points() if not np.allclose(v, points[1])]
    points += list(ambient.random_directions(rng, samples))
    labels = ["0", "z"] + [f"q{k}" for k in range(len(points) - 2)]
    return FinitePointedMetricSpace.from_coordinates(ambient, np.array(points), labels, 0)


@dataclass(frozen=True)
class SeminormNorms:
    sup_norm: float | Fraction
    lip_norm: float
    witness: np.ndarray
    pair: tuple[int, int]
    slack: float
    method: str

    @property
    def agree(self) -> bool:
        return self.slack <= settings.norm_tolerance

    def to_jsonable(self) -> dict:
        return {
            "sup_norm": self.sup_norm,
            "lip_norm": self.lip_norm,
            "witness": self.witness.tolist(),
            "pair": list(self.pair),
            "slack": self.slack,
            "method": self.method,
            "agree": self.agree,
        }


def seminorm_norms(
    p: SeminormModel,
    ambient: NormedSpaceModel,
    space: FinitePointedMetricSpace | None = None,
) -> SeminormNorms:
    """‖p‖_∞ next to ‖p‖_Lip on a grid that contains 0 and the sup witness."""
    sup = sup_norm(p, ambient)
    space = seminorm_grid(p, ambient) if space is None else space
    f = LipFunctional(space, p.values(space.coords))
    lip = lip_norm(f)
    slack = abs(float(sup.value) - float(lip.norm))
    return SeminormNorms(sup.value, float(lip.norm), sup.witness, lip.pair, slack, sup.method)


@dataclass(frozen=True)
class Condition:
    name: str
    holds: bool
    value: float
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class AttainmentReport:
    norm: float | Fraction
    witness: np.ndarray
    conditions: tuple[Condition, ...]
    inconclusive: bool

    @property
    def agree(self) -> bool:
        return all(c.holds for c in self.conditions)

    def to_jsonable(self) -> dict:
        return {
            "norm": self.norm,
            "witness": self.witness.tolist(),
            "agree": self.agree,
            "inconclusive": self.inconclusive,
            "conditions": {
                c.name: {"holds": c.holds, "value": c.value, **c.detail} for c in self.conditions
            },
        }


def _operator_norm(operator: np.ndarray, target: Target, ambient: NormedSpaceModel) -> float:
    if target == "linf":
        return max(ambient.dual_norm(row) for row in operator)
    if ambient.kind == NormKind.LP and ambient.p == 2.0:
        return float(np.linalg.norm(operator, ord=2))
    return float(sup_norm(SeminormModel.opnorm(operator, target), ambient).value)


def _target_norm(image: np.ndarray, target: Target) -> float:
    return float(np.linalg.norm(image) if target == "l2" else np.abs(image).max())


def _operator_candidates(
    operator: np.ndarray, ambient: NormedSpaceModel, z: np.ndarray
) -> list[np.ndarray]:
    """z, the top right singular vector and, for polyhedral balls, every vertex."""
    candidates = [z, np.linalg.svd(operator)[2][0]]
    if ambient.kind == NormKind.POLYHEDRAL:
        candidates += list(ambient.extreme_points())
    return [c / ambient.norm(c) for c in candidates if np.any(c)]


def attainment_equivalences(
    p: SeminormModel, ambient: NormedSpaceModel, tol: float | None = None
) -> AttainmentReport:
    """Audit the equivalent forms of norm attainment.

    (i) p(z) = ‖p‖ with ‖z‖ = 1 at the sup witness z; (ii) the pair (z, 0) has quotient ‖p‖;
    (iii) ⟨p, m_{z,0}⟩ equals ‖p‖_Lip computed over every pair of a sampled grid;
    (iv) T attains ‖T‖ at z; (v) T attains ‖T‖ at some point of the sphere, searched
    independently of z.
    """
    tol = settings.norm_tolerance if tol is None else tol
    sup = sup_norm(p, ambient)
    norm, z = float(sup.value), sup.witness
    unit = abs(ambient.norm(z) - 1.0) <= tol
    value = p(z)
    quotient = (value - p(np.zeros(p.dim))) / ambient.norm(z)

    grid = seminorm_grid(p, ambient)
    functional = LipFunctional(grid, p.values(grid.coords))
    grid_lip = float(lip_norm(functional).norm)
    molecule = pairing(functional, FreeVector.molecule(grid, grid.index_of("z"), grid.base_index))

    operator, target = p.as_operator()
    op_norm = _operator_norm(operator, target, ambient)
    image_norm = _target_norm(operator @ z, target)
    candidates = _operator_candidates(operator, ambient, z)
    attained = [(_target_norm(operator @ c, target), c) for c in candidates]
    best_image, best_point = max(attained, key=lambda item: item[0])

    conditions = (
        Condition("i", unit and abs(value - norm) <= tol, value, {"bound": norm}),
        Condition("ii", abs(quotient - norm) <= tol, quotient, {"pair": ["z", "0"]}),
        Condition(
            "iii",
            abs(molecule - grid_lip) <= tol,
            molecule,
            {"molecule": ["z", "0"], "lip_norm": grid_lip},
        ),
        Condition("iv", abs(image_norm - op_norm) <= tol, image_norm, {"operator_norm": op_norm}),
        Condition(
            "v",
            abs(best_image - op_norm) <= tol,
            best_image,
            {"target": target, "attained_at": best_point.tolist()},
        ),
    )
    inconclusive = not sup.certified and not all(c.holds for c in conditions)
    if inconclusive:
        logger.warning(f"attainment audit inconclusive: numeric sup {norm:.9g} not certified")
    return AttainmentReport(sup.value, z, conditions, inconclusive)


def jn_truncated_seminorm(n: int, dim: int) -> SeminormModel:
    """p(x) = max_{k ≤ N} k|x_k|/(k + 1) on R^d; over ℓ_2^d its norm is N/(N + 1)."""
    if n < 1:
        raise PreconditionError("the truncation level must be at least 1")
    if dim < n:
        raise PreconditionError(f"dimension {dim} is below the truncation level {n}")
    rows = [
        [Fraction(k, k + 1) if j == k - 1 else Fraction(0) for j in range(dim)]
        for k in range(1, n + 1)
    ]
    return SeminormModel.maxabs(rows)


# ========== DISTANCES ==========
def uniform_distance(p: SeminormModel, q: SeminormModel, ambient: NormedSpaceModel) -> float:
    """sup_{B_X} |p − q| for ℓ_∞-target seminorms over a polyhedral ball, by LPs.

    max (p − q) = max_{i, ±} max_x (±⟨φ_i, x⟩ − q(x)), each inner problem linear in (x, t).
    """
    _check_dims(p, ambient)
    _check_dims(q, ambient)
    if ambient.kind != NormKind.POLYHEDRAL or not (p.polyhedral and q.polyhedral):
        raise PreconditionError("uniform distances are computed for polyhedral data only")
    gens = ambient.generators
    dim = ambient.dim

    def one_side(first: SeminormModel, second: SeminormModel) -> float:
        rows = second.matrix
        a_ub = np.vstack(
            [
                np.hstack([rows, -np.ones((len(rows), 1))]),
                np.hstack([-rows, -np.ones((len(rows), 1))]),
                np.hstack([gens, np.zeros((len(gens), 1))]),
                np.hstack([-gens, np.zeros((len(gens), 1))]),
            ]
        )
        b_ub = np.concatenate([np.zeros(2 * len(rows)), np.ones(2 * len(gens))])
        best = 0.0
        for row in first.matrix:
            for sign in (1.0, -1.0):
                c = np.concatenate([-sign * row, [1.0]])
                program = LinearProgram(
                    c=c, a_ub=a_ub, b_ub=b_ub, bounds=[(None, None)] * (dim + 1)
                )
                solution = solve_lp(program)
                best = max(best, -solution.objective)
        return best

    return max(one_side(p, q), one_side(q, p))


def lip_distance(p: SeminormModel, q: SeminormModel, space: FinitePointedMetricSpace) -> float:
    """‖p − q‖_Lip on a coordinate grid whose base point is the origin."""
    if np.any(space.coords[space.base_index]):
        raise PreconditionError("the grid base point must be the origin")
    diff = p.values(space.coords) - q.values(space.coords)
    return float(lip_norm(LipFunctional(space, diff)).norm)


@dataclass(frozen=True)
class GapReport:
    n: int
    uniform_distance: Fraction
    uniform_witness: tuple[Fraction, Fraction]
    lip_lower_bound: Fraction
    lip_pair: tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]
    uniform_numeric: float

    def to_jsonable(self) -> dict:
        return {
            "n": self.n,
            "uniform_distance": self.uniform_distance,
            "uniform_witness": list(self.uniform_witness),
            "lip_lower_bound": self.lip_lower_bound,
            "lip_pair": [list(self.lip_pair[0]), list(self.lip_pair[1])],
            "uniform_numeric": self.uniform_numeric,
        }


def gap_pair(n: int) -> tuple[SeminormModel, SeminormModel]:
    """p_0(x) = |x₁| and p_n(x) = max(|x₁|, |x₂|/n) on R²."""
    if n < 1:
        raise PreconditionError("n must be at least 1")
    p0 = SeminormModel.maxabs([[1, 0]])
    pn = SeminormModel.maxabs([[1, 0], [0, Fraction(1, n)]])
    return p0, pn


def uniform_vs_lip_gap(n: int) -> GapReport:
    """‖p_n − p_0‖_∞ = 1/n over ℓ_∞² while the Lipschitz distance stays at least 1."""
    p0, pn = gap_pair(n)
    witness = (Fraction(0), Fraction(1))
    uniform = pn.exact_value(witness) - p0.exact_value(witness)
    x, y = (Fraction(0), Fraction(n)), (Fraction(1), Fraction(n))
    # ‖x − y‖_∞ = 1
    lip = (pn.exact_value(x) - p0.exact_value(x)) - (pn.exact_value(y) - p0.exact_value(y))
    numeric = uniform_distance(p0, pn, NormedSpaceModel.linf(2))
    return GapReport(n, uniform, witness, lip, (x, y), numeric)


# ========== BPB FOR SEMINORMS ==========
@dataclass(frozen=True)
class SeminormBpbResult:
    p: SeminormModel
    x: np.ndarray
    row: int
    active: tuple[int, ...]
    functional: np.ndarray
    distance_x: float
    distance_p: float
    bound: float
    audits: tuple[AuditEntry, ...]

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.audits)

    def to_jsonable(self) -> dict:
        return {
            "x": self.x.tolist(),
            "row": self.row,
            "active": list(self.active),
            "functional": self.functional.tolist(),
            "distance_x": self.distance_x,
            "distance_p": self.distance_p,
            "bound": self.bound,
            "passed": self.passed,
            "audits": [a.describe() for a in self.audits],
            "p": self.p.to_jsonable(),
        }


def seminorm_bpb_construct(
    p0: SeminormModel, x0, delta: float, eps: float
) -> SeminormBpbResult:
    """Turn an almost-attaining pair (p_0, x_0) over ℓ_∞^d into an attaining pair (p, x).

    With φ the row of p_0 attaining p_0(x_0) (signed so φ(x_0) > 0), the face projection
    keeps the coordinates A = {j : 1 − sign(φ_j)x_{0,j} ≤ √(2δ)}, pushes x_0 onto the face
    (x_j = sign φ_j on A) and renormalizes φ restricted to A into y*. Then
    p = max((1 − √(2δ))·p_0, |y*|) has ‖p‖ = 1 = p(x).

    Raises:
        PreconditionError: unless p_0 is MAXABS with ‖p_0‖ = 1, ‖x_0‖_∞ = 1,
            p_0(x_0) > 1 − δ and 0 < δ ≤ ε²/4.
    """
    tol = settings.norm_tolerance
    x0 = np.asarray(x0, dtype=float)
    ambient = NormedSpaceModel.linf(p0.dim)
    if p0.kind != SeminormKind.MAXABS:
        raise PreconditionError("the construction needs a MAXABS seminorm")
    if not 0 < delta <= eps**2 / 4:
        raise PreconditionError(f"delta must lie in (0, eps²/4], got {delta} with eps {eps}")
    if abs(float(sup_norm(p0, ambient).value) - 1.0) > tol:
        raise PreconditionError("p0 must have norm 1 over the unit ball")
    if x0.shape != (p0.dim,) or abs(ambient.norm(x0) - 1.0) > tol:
        raise PreconditionError("x0 must be a unit vector of ℓ_∞")
    start = p0(x0)
    if start <= 1.0 - delta:
        raise PreconditionError(f"p0(x0) = {start!r} is not above 1 - delta")

    bound = float(np.sqrt(2.0 * delta))
    images = p0.matrix @ x0
    row = int(np.argmax(np.abs(images)))
    phi = np.sign(images[row]) * p0.matrix[row]
    signs = np.sign(phi)

    if start >= 1.0 - 1e-12:
        p, x, y_star = p0, x0.copy(), phi
        active = tuple(int(j) for j in np.flatnonzero(phi))
    else:
        in_face = (phi != 0) & (1.0 - signs * x0 <= bound)
        if not np.any(in_face):
            raise PreconditionError("no coordinate of x0 is within the face tolerance")
        active = tuple(int(j) for j in np.flatnonzero(in_face))
        x = np.where(in_face, signs, x0)
        y_star = np.where(in_face, phi, 0.0)
        y_star = y_star / np.abs(y_star).sum()
        p = SeminormModel.maxabs(np.vstack([(1.0 - bound) * p0.matrix, y_star]))

    distance_x = ambient.norm(x - x0)
    distance_p = uniform_distance(p, p0, ambient)
    norm_p = float(sup_norm(p, ambient).value)
    audits = (
        AuditEntry.check("attains", abs(p(x) - 1.0), tol, "<="),
        AuditEntry.check("unit_norm", abs(norm_p - 1.0), tol, "<="),
        AuditEntry.check("point_distance", distance_x, eps),
        AuditEntry.check("seminorm_distance", distance_p, eps),
    )
    logger.info(
        f"seminorm correction: ‖x − x0‖ = {distance_x:.4g}, ‖p − p0‖ = {distance_p:.4g}, "
        f"eps = {eps}"
    )
    return SeminormBpbResult(p, x, row, active, y_star, distance_x, distance_p, bound, audits)


def random_unit_maxabs(dim: int, count: int, rng: np.random.Generator) -> SeminormModel:
    """Random MAXABS seminorm scaled to norm 1 over ℓ_∞^dim."""
    rows = rng.normal(size=(count, dim))
    return SeminormModel.maxabs(rows / np.abs(rows).sum(axis=1).max())


def near_attaining_point(p0: SeminormModel, delta: float, rng: np.random.Generator) -> np.ndarray:
    """A unit x_0 of ℓ_∞ with p_0(x_0) > 1 − δ, one coordinate pulled well off the face."""
    l1 = np.abs(p0.matrix).sum(axis=1)
    phi = p0.matrix[int(np.argmax(l1))]
    signs = np.where(phi >= 0, 1.0, -1.0)
    shrink = rng.uniform(0.0, 0.45 * delta, size=p0.dim)
    top = int(np.argmax(np.abs(phi)))
    shrink[top] = 0.0
    weak = int(np.argmin(np.abs(phi)))
    if weak != top:
        shrink[weak] = min(1.5, 0.45 * delta / max(abs(phi[weak]), 1e-12))
    return signs * (1.0 - shrink)
