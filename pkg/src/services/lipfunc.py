"""
Lipschitz functionals on finite pointed metric spaces.

Norms are exhaustive pair enumerations (the pair list feeds certificates); rational
spaces with rational values take an exact Fraction path.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple

import numpy as np

from src.core.config import settings
from src.core.errors import (
    DegenerateFunctionalError,
    PreconditionError,
    RangeError,
    StructuralError,
)
from src.services.metric_core import (
    BetweennessTriple,
    FinitePointedMetricSpace,
    betweenness_triples,
    quotient_matrix,
)
from src.utils.serialization import format_fraction

logger = logging.getLogger(__name__)

Scalar = float | Fraction


# ========== FUNCTIONALS ==========
@dataclass(frozen=True, eq=False)
class LipFunctional:
    """Values per point of ``space`` vanishing at the base point."""

    space: FinitePointedMetricSpace
    values: np.ndarray
    exact_values: tuple[Fraction, ...] | None = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != (self.space.size,):
            raise StructuralError(
                f"expected {self.space.size} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise PreconditionError("functional values must be finite")
        if self.exact_values is not None:
            if len(self.exact_values) != self.space.size:
                raise StructuralError("exact values do not match the space size")
            if self.exact_values[self.space.base_index] != 0:
                raise PreconditionError("a Lip_0 functional vanishes at the base point")
        if values[self.space.base_index] != 0:
            raise PreconditionError("a Lip_0 functional vanishes at the base point")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, space: FinitePointedMetricSpace) -> "LipFunctional":
        exact = tuple(Fraction(0) for _ in range(space.size)) if space.exact else None
        return cls(space, np.zeros(space.size), exact)

    @classmethod
    def from_values(
        cls, space: FinitePointedMetricSpace, values: Sequence[float], normalize: bool = False
    ) -> "LipFunctional":
        """Float functional; ``normalize`` subtracts the value at the base point."""
        values = np.asarray(values, dtype=float)
        if normalize:
            values = values - values[space.base_index]
        return cls(space, values)

    @classmethod
    def from_exact(cls, space: FinitePointedMetricSpace, values: Sequence) -> "LipFunctional":
        exact = tuple(Fraction(v) for v in values)
        return cls(space, np.array([float(v) for v in exact]), exact)

    @property
    def exact(self) -> bool:
        return self.exact_values is not None and self.space.exact

    def _check_space(self, other: "LipFunctional") -> None:
        if other.space is not self.space:
            raise StructuralError("functionals live on different spaces")

    def __add__(self, other: "LipFunctional") -> "LipFunctional":
        self._check_space(other)
        exact = None
        if self.exact_values is not None and other.exact_values is not None:
            exact = tuple(a + b for a, b in zip(self.exact_values, other.exact_values))
        return LipFunctional(self.space, self.values + other.values, exact)

    def __neg__(self) -> "LipFunctional":
        exact = None if self.exact_values is None else tuple(-a for a in self.exact_values)
        return LipFunctional(self.space, -self.values, exact)

    def __sub__(self, other: "LipFunctional") -> "LipFunctional":
        return self + (-other)

    def __mul__(self, scalar: Scalar) -> "LipFunctional":
        exact = None
        if self.exact_values is not None and isinstance(scalar, (int, Fraction)):
            exact = tuple(a * scalar for a in self.exact_values)
        return LipFunctional(self.space, self.values * float(scalar), exact)

    __rmul__ = __mul__

    def __truediv__(self, scalar: Scalar) -> "LipFunctional":
        if isinstance(scalar, (int, Fraction)):
            return self * (1 / Fraction(scalar))
        return self * (1.0 / scalar)

    def quotient(self, x: int, y: int) -> Scalar:
        """Signed difference quotient (f(x) − f(y))/ρ(x, y)."""
        if x == y:
            raise PreconditionError("a quotient needs two distinct points")
        if self.exact:
            return (self.exact_values[x] - self.exact_values[y]) / self.space.exact_dist[x][y]
        return float((self.values[x] - self.values[y]) / self.space.dist[x, y])

    @cached_property
    def norm(self) -> Scalar:
        return lip_norm(self).norm

    def restrict(self, indices: Sequence[int]) -> "LipFunctional":
        """Restriction to the induced subspace on ``indices``."""
        idx = sorted(set(int(i) for i in indices))
        sub = self.space.subspace(idx)
        exact = None if self.exact_values is None else tuple(self.exact_values[i] for i in idx)
        return LipFunctional(sub, self.values[idx], exact)

    def to_jsonable(self) -> dict:
        if self.exact_values is not None:
            return {"values": [format_fraction(v) for v in self.exact_values]}
        return {"values": [float(v) for v in self.values]}


# ========== NORM ==========
class LipNorm(NamedTuple):
    norm: Scalar
    pair: tuple[int, int]


def lip_norm(f: LipFunctional) -> LipNorm:
    """Best Lipschitz constant and the lexicographically first pair attaining it."""
    n = f.space.size
    if f.exact:
        best: Fraction | None = None
        best_pair = (0, 1)
        d, v = f.space.exact_dist, f.exact_values
        for x in range(n):
            for y in range(n):
                if x == y:
                    continue
                q = (v[x] - v[y]) / d[x][y]
                if best is None or q > best:
                    best, best_pair = q, (x, y)
        return LipNorm(best, best_pair)
    q = quotient_matrix(f.space.dist, f.values)
    top = float(q.max())
    ties = np.flatnonzero(q >= top - 1e-12 * max(1.0, abs(top)))
    x, y = divmod(int(ties[0]), n)
    return LipNorm(top, (x, y))


# ========== CERTIFICATES ==========
class AttainmentMode(str, Enum):
    STRONG = "strong"
    DIRECTIONAL = "directional"
    LOCAL_DIRECTIONAL = "local_directional"


@dataclass(frozen=True)
class AttainedPair:
    x: int
    y: int
    quotient: Scalar


@dataclass(frozen=True)
class AttainmentCertificate:
    mode: AttainmentMode
    pairs: tuple[AttainedPair, ...]
    norm_value: Scalar
    direction: tuple[float, ...] | None = None
    localization: tuple[float, ...] | None = None

    def verify(self, tol: float | None = None) -> bool:
        tol = settings.norm_tolerance if tol is None else tol
        if any(p.quotient > self.norm_value + tol for p in self.pairs):
            return False
        if self.mode == AttainmentMode.STRONG:
            exact = isinstance(self.norm_value, Fraction)
            slack = 0 if exact else tol
            return any(p.quotient >= self.norm_value - slack for p in self.pairs)
        quotients = [float(p.quotient) for p in self.pairs]
        return all(b >= a - tol for a, b in zip(quotients, quotients[1:]))


def strongly_attains(f: LipFunctional, tol: float | None = None) -> AttainmentCertificate:
    """Every ordered pair whose quotient is within ``tol`` of the norm.

    Raises:
        DegenerateFunctionalError: if ‖f‖ = 0.
    """
    norm, _ = lip_norm(f)
    if norm == 0:
        raise DegenerateFunctionalError("the zero functional attains nothing")
    n = f.space.size
    pairs: list[AttainedPair] = []
    if f.exact:
        slack = Fraction(0) if tol is None else Fraction(tol)
        for x in range(n):
            for y in range(n):
                if x != y:
                    q = f.quotient(x, y)
                    if q >= norm - slack:
                        pairs.append(AttainedPair(x, y, q))
    else:
        tol = 1e-12 * max(1.0, abs(norm)) if tol is None else tol
        q = quotient_matrix(f.space.dist, f.values)
        for x, y in np.argwhere(q >= norm - tol):
            pairs.append(AttainedPair(int(x), int(y), float(q[x, y])))
    return AttainmentCertificate(AttainmentMode.STRONG, tuple(pairs), norm)


def propagate_attainment(
    f: LipFunctional, pair: tuple[int, int], tol: float | None = None
) -> AttainmentCertificate:
    """Sub-pairs through every betweenness point of an attaining pair.

    If f attains its norm at (x, y) and z is metrically between them, f also attains at
    (x, z) and (z, y); the certificate lists all of them.
    """
    tol = settings.betweenness_tolerance if tol is None else tol
    x, y = pair
    norm = f.norm
    if f.quotient(x, y) < norm - (0 if f.exact else tol):
        raise PreconditionError(f"f does not attain its norm at {pair}")
    pairs = [AttainedPair(x, y, f.quotient(x, y))]
    d = f.space.dist
    for z in range(f.space.size):
        if z in (x, y):
            continue
        if abs(d[x, y] - d[x, z] - d[z, y]) <= tol:
            pairs.append(AttainedPair(x, z, f.quotient(x, z)))
            pairs.append(AttainedPair(z, y, f.quotient(z, y)))
    return AttainmentCertificate(AttainmentMode.STRONG, tuple(pairs), norm)


def directional_certificate(
    g: LipFunctional,
    pairs: Sequence[tuple[int, int]],
    mode: AttainmentMode,
    direction: Sequence[float] | None = None,
    localization: Sequence[float] | None = None,
) -> AttainmentCertificate:
    """Certificate over pairs indexed by a refinement driver, quotients taken for ``g``."""
    attained = tuple(AttainedPair(x, y, g.quotient(x, y)) for x, y in pairs)
    return AttainmentCertificate(
        mode,
        attained,
        g.norm,
        None if direction is None else tuple(map(float, direction)),
        None if localization is None else tuple(map(float, localization)),
    )


# ========== EXTENSION ==========
class ExtensionVariant(str, Enum):
    INF = "inf"
    SUP = "sup"
    MIDPOINT = "midpoint"


def _embedding(sub: FinitePointedMetricSpace, target: FinitePointedMetricSpace) -> list[int]:
    labels = target.labels
    idx = []
    for pt in sub.points:
        if pt.label not in labels:
            raise StructuralError(f"point {pt.label!r} of the subspace is not in the target")
        idx.append(labels.index(pt.label))
    if idx[sub.base_index] != target.base_index:
        raise StructuralError("the subspace base point must be the target base point")
    if not np.allclose(target.dist[np.ix_(idx, idx)], sub.dist, rtol=0, atol=1e-9):
        raise StructuralError("the subspace metric is not the one induced by the target")
    return idx


def mcshane_extend(
    f_sub: LipFunctional,
    target: FinitePointedMetricSpace,
    variant: ExtensionVariant | str = ExtensionVariant.MIDPOINT,
) -> LipFunctional:
    """Extend ``f_sub`` to ``target`` with the same Lipschitz constant.

    INF gives min_m f(m) + L·ρ(x,m), SUP gives max_m f(m) − L·ρ(x,m), MIDPOINT their average.
    Subspace points are matched to target points by label; the restriction is exact.
    """
    variant = ExtensionVariant(variant)
    idx = _embedding(f_sub.space, target)
    lip = f_sub.norm

    if f_sub.exact and target.exact:
        d, v = target.exact_dist, f_sub.exact_values
        values: list[Fraction] = []
        for x in range(target.size):
            upper = min(v[k] + lip * d[x][m] for k, m in enumerate(idx))
            lower = max(v[k] - lip * d[x][m] for k, m in enumerate(idx))
            if variant == ExtensionVariant.INF:
                values.append(upper)
            elif variant == ExtensionVariant.SUP:
                values.append(lower)
            else:
                values.append((upper + lower) / 2)
        for k, m in enumerate(idx):
            values[m] = v[k]
        return LipFunctional.from_exact(target, values)

    lip = float(lip)
    block = target.dist[:, idx]
    upper = (f_sub.values[None, :] + lip * block).min(axis=1)
    lower = (f_sub.values[None, :] - lip * block).max(axis=1)
    if variant == ExtensionVariant.INF:
        values = upper
    elif variant == ExtensionVariant.SUP:
        values = lower
    else:
        values = (upper + lower) / 2.0
    values = np.array(values)
    values[idx] = f_sub.values
    return LipFunctional(target, values)


# ========== INTERPOLATION ==========
def interpolation_residual(
    f: LipFunctional, triple: BetweennessTriple, tol: float | None = None
) -> Scalar:
    """|f(z) − (ρ(z,y)f(x) + ρ(x,z)f(y))/ρ(x,y)| for a betweenness triple (x, z, y)."""
    tol = settings.betweenness_tolerance if tol is None else tol
    x, z, y = triple.x, triple.z, triple.y
    if f.exact:
        d, v = f.space.exact_dist, f.exact_values
        if abs(d[x][y] - d[x][z] - d[z][y]) > tol:
            raise PreconditionError(f"({x}, {z}, {y}) is not a betweenness triple")
        return abs(v[z] - (d[z][y] * v[x] + d[x][z] * v[y]) / d[x][y])
    d, v = f.space.dist, f.values
    if abs(d[x, y] - d[x, z] - d[z, y]) > tol:
        raise PreconditionError(f"({x}, {z}, {y}) is not a betweenness triple")
    return float(abs(v[z] - (d[z, y] * v[x] + d[x, z] * v[y]) / d[x, y]))


def all_triples_residuals(
    f: LipFunctional, tol: float | None = None
) -> list[tuple[BetweennessTriple, Scalar]]:
    return [(t, interpolation_residual(f, t, tol)) for t in betweenness_triples(f.space, tol)]


# ========== COMPOSITION ==========
@dataclass(frozen=True)
class ComposedFunctional:
    h: LipFunctional
    max_snap: float
    norm_h: float
    bound: float

    @property
    def bound_holds(self) -> bool:
        return self.norm_h <= self.bound + settings.norm_tolerance


def compose_with_retraction(g: LipFunctional, u: LipFunctional) -> ComposedFunctional:
    """h := g ∘ u with u's values snapped to the nearest point of g's [0,1] grid.

    Raises:
        RangeError: if a value of u leaves [0, 1].
    """
    if not g.space.has_coordinates or g.space.coords.shape[1] != 1:
        raise PreconditionError("g must live on a grid of the real line")
    grid = g.space.coords[:, 0]
    if grid.min() < 0 or grid.max() > 1:
        raise PreconditionError("g's grid must lie inside [0, 1]")
    tol = 1e-12
    if u.values.min() < -tol or u.values.max() > 1 + tol:
        raise RangeError(
            f"u takes values in [{u.values.min()}, {u.values.max()}], outside [0, 1]"
        )
    snapped = np.abs(grid[None, :] - u.values[:, None]).argmin(axis=1)
    max_snap = float(np.abs(grid[snapped] - u.values).max())
    h = LipFunctional(u.space, g.values[snapped])
    norm_h = float(h.norm)
    bound = float(g.norm) * float(u.norm)
    logger.debug(
        f"composition: max snap {max_snap:.3g}, ‖h‖ = {norm_h:.6g} vs bound {bound:.6g}"
    )
    return ComposedFunctional(h, max_snap, norm_h, bound)
