"""
Finite-dimensional normed space models: ℓ_p for 1 < p < ∞ and polyhedral norms
given by symmetric generating functionals (ℓ_∞ and ℓ_1 are the usual examples).
"""

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import minimize_scalar

from src.core.errors import NotUniformlyConvexError, PreconditionError, StructuralError


class NormKind(str, Enum):
    LP = "lp"
    POLYHEDRAL = "polyhedral"


@dataclass(frozen=True, eq=False)
class NormedSpaceModel:
    """A norm on R^dim.

    LP models carry the exponent ``p``; POLYHEDRAL models carry generating functionals
    ``a_i`` (rows) and use ``‖v‖ = max_i |⟨a_i, v⟩|``.
    """

    dim: int
    kind: NormKind
    p: float | None = None
    generators: np.ndarray | None = None
    name: str = ""

    @classmethod
    def lp(cls, dim: int, p: float) -> "NormedSpaceModel":
        if not 1.0 < p < np.inf:
            raise PreconditionError(f"ℓ_p models need 1 < p < inf, got p={p}")
        return cls(dim=dim, kind=NormKind.LP, p=float(p), name=f"l{p:g}^{dim}")

    @classmethod
    def linf(cls, dim: int) -> "NormedSpaceModel":
        return cls(dim=dim, kind=NormKind.POLYHEDRAL, generators=np.eye(dim), name=f"linf^{dim}")

    @classmethod
    def l1(cls, dim: int) -> "NormedSpaceModel":
        signs = np.array(list(itertools.product([1.0, -1.0], repeat=dim)))
        # one representative per ± pair
        gens = signs[signs[:, 0] > 0]
        return cls(dim=dim, kind=NormKind.POLYHEDRAL, generators=gens, name=f"l1^{dim}")

    @classmethod
    def polyhedral(cls, generators) -> "NormedSpaceModel":
        gens = np.atleast_2d(np.asarray(generators, dtype=float))
        if np.linalg.matrix_rank(gens) < gens.shape[1]:
            raise StructuralError("generators must span the dual space to define a norm")
        return cls(dim=gens.shape[1], kind=NormKind.POLYHEDRAL, generators=gens, name="polyhedral")

    @property
    def uniformly_convex(self) -> bool:
        return self.kind == NormKind.LP

    @property
    def q(self) -> float:
        """Conjugate exponent of an ℓ_p model."""
        self.require_uniformly_convex()
        return self.p / (self.p - 1.0)

    @property
    def key(self) -> tuple:
        gens = None if self.generators is None else tuple(map(tuple, self.generators.tolist()))
        return (self.kind.value, self.dim, self.p, gens)

    def require_uniformly_convex(self) -> None:
        if self.kind != NormKind.LP:
            raise NotUniformlyConvexError(f"{self.name or 'model'} is polyhedral (modulus 0)")

    def norms(self, vectors) -> np.ndarray:
        """Norms along the last axis."""
        v = np.asarray(vectors, dtype=float)
        if v.shape[-1] != self.dim:
            raise StructuralError(f"expected vectors of dimension {self.dim}, got {v.shape[-1]}")
        if self.kind == NormKind.LP:
            return np.linalg.norm(v, ord=self.p, axis=-1)
        return np.abs(v @ self.generators.T).max(axis=-1)

    def norm(self, vector) -> float:
        return float(self.norms(np.asarray(vector, dtype=float)))

    def dual_norm(self, functional) -> float:
        phi = np.asarray(functional, dtype=float)
        if self.kind == NormKind.LP:
            return float(np.linalg.norm(phi, ord=self.q))
        if np.allclose(self.generators, np.eye(self.dim)):
            return float(np.abs(phi).sum())
        return float(np.abs(phi @ self.extreme_points().T).max())

    def extreme_points(self) -> np.ndarray:
        """Vertices of a polyhedral unit ball (brute force over generator d-subsets)."""
        if self.kind != NormKind.POLYHEDRAL:
            raise PreconditionError("only polyhedral balls have finitely many extreme points")
        if np.allclose(self.generators, np.eye(self.dim)):
            return np.array(list(itertools.product([1.0, -1.0], repeat=self.dim)))
        gens = np.vstack([self.generators, -self.generators])
        vertices: list[np.ndarray] = []
        for rows in itertools.combinations(range(gens.shape[0]), self.dim):
            block = gens[list(rows)]
            if abs(np.linalg.det(block)) < 1e-12:
                continue
            vertex = np.linalg.solve(block, np.ones(self.dim))
            if self.norm(vertex) <= 1.0 + 1e-9 and not any(
                np.allclose(vertex, seen) for seen in vertices
            ):
                vertices.append(vertex)
        return np.array(vertices)

    def dual_map(self, u) -> np.ndarray:
        """Unit functional x* with x*(u) = ‖u‖ (only for ℓ_p models)."""
        self.require_uniformly_convex()
        u = np.asarray(u, dtype=float)
        if not np.any(u):
            raise PreconditionError("the duality map is undefined at 0")
        raw = np.sign(u) * np.abs(u) ** (self.p - 1.0)
        return raw / np.linalg.norm(raw, ord=self.q)

    def spot_check(self, rng: np.random.Generator, trials: int = 100, tol: float = 1e-9) -> bool:
        """Homogeneity and triangle inequality on random triples."""
        for _ in range(trials):
            x, y = rng.normal(size=(2, self.dim))
            lam = rng.normal()
            if abs(self.norm(lam * x) - abs(lam) * self.norm(x)) > tol * (1 + abs(lam)):
                return False
            if self.norm(x + y) > self.norm(x) + self.norm(y) + tol:
                return False
        return True

    def random_directions(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Points on the unit sphere (normalized Gaussian directions)."""
        raw = rng.normal(size=(count, self.dim))
        return raw / self.norms(raw)[:, None]


def distance_to_segment(model: NormedSpaceModel, point, a, b) -> float:
    """Distance from ``point`` to conv{a, b} in the model norm (convex in the parameter)."""
    point, a, b = (np.asarray(v, dtype=float) for v in (point, a, b))
    direction = b - a
    ends = min(model.norm(point - a), model.norm(point - b))
    if not np.any(direction):
        return ends
    result = minimize_scalar(
        lambda t: model.norm(point - a - t * direction),
        bounds=(0.0, 1.0),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(min(ends, result.fun))
