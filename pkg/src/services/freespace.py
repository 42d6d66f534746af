"""
The Lipschitz-free space of a finite pointed metric space.

Elements are coefficient vectors over the non-base points (the evaluation functional of
the base point is zero on Lip_0). The norm is the optimal value of the dual LP
max Σ c_p g(p) over 1-Lipschitz g with g(0) = 0; the primal min-cost-flow LP is kept as an
independent oracle. In finite dimension conv W is already closed, so decompositions need
no limiting argument.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import sparse

from src.core.config import settings
from src.core.errors import PreconditionError, StructuralError
from src.core.lp import LinearProgram, solve_lp
from src.services.lipfunc import LipFunctional
from src.services.metric_core import FinitePointedMetricSpace

logger = logging.getLogger(__name__)


# ========== VECTORS ==========
@lru_cache(maxsize=32)
def _positions(space: FinitePointedMetricSpace) -> np.ndarray:
    """Coordinate position of every point (-1 for the base)."""
    pos = np.full(space.size, -1, dtype=int)
    pos[space.non_base] = np.arange(space.size - 1)
    return pos


@dataclass(frozen=True, eq=False)
class FreeVector:
    space: FinitePointedMetricSpace
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.shape != (self.space.size - 1,):
            raise StructuralError(
                f"expected {self.space.size - 1} coefficients, got shape {coeffs.shape}"
            )
        if not np.all(np.isfinite(coeffs)):
            raise PreconditionError("free-space coefficients must be finite")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zero(cls, space: FinitePointedMetricSpace) -> "FreeVector":
        return cls(space, np.zeros(space.size - 1))

    @classmethod
    def point(cls, space: FinitePointedMetricSpace, x: int) -> "FreeVector":
        """The evaluation functional x̂ (zero for the base point)."""
        coeffs = np.zeros(space.size - 1)
        pos = _positions(space)[x]
        if pos >= 0:
            coeffs[pos] = 1.0
        return cls(space, coeffs)

    @classmethod
    def molecule(cls, space: FinitePointedMetricSpace, x: int, y: int) -> "FreeVector":
        if x == y:
            raise PreconditionError("a molecule needs two distinct points")
        return (cls.point(space, x) - cls.point(space, y)) * (1.0 / space.dist[x, y])

    @classmethod
    def from_point_weights(cls, space: FinitePointedMetricSpace, weights) -> "FreeVector":
        """Σ_p weights[p]·p̂ over all points (the base weight drops out)."""
        weights = np.asarray(weights, dtype=float)
        return cls(space, weights[space.non_base])

    def full(self) -> np.ndarray:
        """Weights over all points, zero at the base."""
        out = np.zeros(self.space.size)
        out[self.space.non_base] = self.coeffs
        return out

    def _check_space(self, other: "FreeVector") -> None:
        if other.space is not self.space:
            raise StructuralError("free vectors live on different spaces")

    def __add__(self, other: "FreeVector") -> "FreeVector":
        self._check_space(other)
        return FreeVector(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other: "FreeVector") -> "FreeVector":
        self._check_space(other)
        return FreeVector(self.space, self.coeffs - other.coeffs)

    def __neg__(self) -> "FreeVector":
        return FreeVector(self.space, -self.coeffs)

    def __mul__(self, scalar: float) -> "FreeVector":
        return FreeVector(self.space, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def to_jsonable(self) -> dict:
        return {"coeffs": [float(c) for c in self.coeffs]}


@dataclass(frozen=True, eq=False)
class Molecule:
    x: int
    y: int
    vector: FreeVector

    @property
    def pair(self) -> tuple[int, int]:
        return self.x, self.y


def molecules(space: FinitePointedMetricSpace) -> list[Molecule]:
    """All ordered molecules (x̂ − ŷ)/ρ(x, y), lexicographic in (x, y)."""
    return [
        Molecule(x, y, FreeVector.molecule(space, x, y))
        for x in range(space.size)
        for y in range(space.size)
        if x != y
    ]


def pairing(f: LipFunctional, z: FreeVector) -> float:
    """⟨f, z⟩."""
    if f.space is not z.space:
        raise StructuralError("functional and free vector live on different spaces")
    return float(f.values[z.space.non_base] @ z.coeffs)


# ========== LP STRUCTURE ==========
class PairIncidence(NamedTuple):
    """Unordered pairs i < j, their distances and the (pairs × non-base) matrix of ê_i − ê_j."""

    first: np.ndarray
    second: np.ndarray
    rho: np.ndarray
    matrix: sparse.csr_matrix


@lru_cache(maxsize=32)
def pair_incidence(space: FinitePointedMetricSpace) -> PairIncidence:
    n = space.size
    pos = _positions(space)
    first, second = np.triu_indices(n, k=1)
    count = first.size
    rows, cols, vals = [], [], []
    for ends, sign in ((first, 1.0), (second, -1.0)):
        p = pos[ends]
        keep = p >= 0
        rows.append(np.arange(count)[keep])
        cols.append(p[keep])
        vals.append(np.full(int(keep.sum()), sign))
    matrix = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(count, n - 1),
    )
    return PairIncidence(first, second, space.dist[first, second], matrix)


def lipschitz_ball_rows(space: FinitePointedMetricSpace) -> tuple[sparse.csr_matrix, np.ndarray]:
    """Rows encoding g(x) − g(y) ≤ ρ(x,y) and g(y) − g(x) ≤ ρ(x,y) for every pair."""
    inc = pair_incidence(space)
    return sparse.vstack([inc.matrix, -inc.matrix]).tocsr(), np.concatenate([inc.rho, inc.rho])


def functional_from_coordinates(
    space: FinitePointedMetricSpace, coords: np.ndarray
) -> LipFunctional:
    values = np.zeros(space.size)
    values[space.non_base] = coords
    return LipFunctional(space, values)


# ========== NORMS ==========
class FreeNorm(NamedTuple):
    norm: float
    optimal_dual: LipFunctional


class PrimalNorm(NamedTuple):
    norm: float
    transport: list[tuple[int, int, float]]


def free_norm(z: FreeVector) -> FreeNorm:
    """Norm of z by the dual LP; returns an optimal g with ‖g‖ ≤ 1."""
    space = z.space
    if z.is_zero():
        return FreeNorm(0.0, LipFunctional.zeros(space))
    a_ub, b_ub = lipschitz_ball_rows(space)
    problem = LinearProgram(
        c=-z.coeffs,
        a_ub=a_ub,
        b_ub=b_ub,
        bounds=[(None, None)] * (space.size - 1),
    )
    solution = solve_lp(problem)
    g = functional_from_coordinates(space, solution.x)
    return FreeNorm(float(z.coeffs @ solution.x), g)


def free_norm_primal(z: FreeVector) -> PrimalNorm:
    """Cheapest representation z = Σ a_i (x̂_i − ŷ_i) (a min-cost-flow LP)."""
    space = z.space
    if z.is_zero():
        return PrimalNorm(0.0, [])
    inc = pair_incidence(space)
    count = inc.rho.size
    a_eq = sparse.hstack([inc.matrix.T, -inc.matrix.T]).tocsr()
    problem = LinearProgram(
        c=np.concatenate([inc.rho, inc.rho]),
        a_eq=a_eq,
        b_eq=z.coeffs,
    )
    solution = solve_lp(problem)
    forward, backward = solution.x[:count], solution.x[count:]
    transport = []
    for p in np.flatnonzero(forward > 1e-12):
        transport.append((int(inc.first[p]), int(inc.second[p]), float(forward[p])))
    for p in np.flatnonzero(backward > 1e-12):
        transport.append((int(inc.second[p]), int(inc.first[p]), float(backward[p])))
    transport.sort()
    return PrimalNorm(float(solution.objective), transport)


def duality_gap(z: FreeVector) -> float:
    return abs(free_norm(z).norm - free_norm_primal(z).norm)


# ========== DECOMPOSITION ==========
@dataclass(frozen=True)
class Decomposition:
    """Convex weights over molecules reconstructing a point of the unit ball."""

    weights: dict[tuple[int, int], float]
    total: float
    residual: float

    @property
    def support(self) -> list[tuple[int, int]]:
        return sorted(self.weights)


def decompose_in_convW(z: FreeVector, tol: float | None = None) -> Decomposition:
    """Write z = Σ λ_w w with λ ≥ 0 and Σ λ ≤ 1.

    The cheapest transport representation gives the weights directly (λ = a·ρ), and
    its cost Σ λ is the free norm, so the same LP certifies the ‖z‖ ≤ 1 precondition.

    Raises:
        PreconditionError: if free_norm(z) > 1 + tol.
    """
    tol = settings.norm_tolerance if tol is None else tol
    space = z.space
    if z.is_zero():
        return Decomposition({}, 0.0, 0.0)
    primal = free_norm_primal(z)
    if primal.norm > 1.0 + tol:
        raise PreconditionError(f"free norm {primal.norm!r} exceeds 1; z is outside conv W")
    weights: dict[tuple[int, int], float] = {}
    rebuilt = np.zeros(space.size - 1)
    for x, y, amount in primal.transport:
        lam = amount * float(space.dist[x, y])
        weights[(x, y)] = weights.get((x, y), 0.0) + lam
        rebuilt += lam * FreeVector.molecule(space, x, y).coeffs
    residual = float(np.abs(rebuilt - z.coeffs).max())
    return Decomposition(weights, float(sum(weights.values())), residual)


def supporting_functional(z: FreeVector) -> LipFunctional:
    """A norm-one g with ⟨g, z⟩ = ‖z‖ (the LP dual optimum rescaled by its norm)."""
    norm, g = free_norm(z)
    if norm <= 0:
        raise PreconditionError("the zero vector has no supporting functional")
    return g / float(g.norm)
