"""
Finite pointed metric spaces: validation, betweenness structure and grid builders that
sample a normed space around a few anchors.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import TYPE_CHECKING, Any

import numpy as np

from src.core.config import settings
from src.core.errors import PreconditionError, StructuralError
from src.models.schemas import ModelDocument, PointDocument, SpaceDocument
from src.services.normed import NormedSpaceModel, NormKind
from src.utils.serialization import format_fraction, is_exact, parse_number

if TYPE_CHECKING:
    from src.services.lipfunc import LipFunctional

logger = logging.getLogger(__name__)


# ========== VALIDATION ==========
@dataclass(frozen=True)
class Violation:
    axiom: str
    indices: tuple[int, ...]
    amount: float | Fraction


@dataclass(frozen=True)
class MetricReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _square(dist: Any) -> list[list[Any]]:
    if isinstance(dist, np.ndarray):
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise StructuralError(f"distance matrix must be square, got shape {dist.shape}")
        return dist.tolist()
    rows = [list(row) for row in dist]
    if any(len(row) != len(rows) for row in rows):
        raise StructuralError("distance matrix must be square")
    return rows


def _validate_exact(rows: list[list[Fraction]]) -> MetricReport:
    n = len(rows)
    violations = []
    for i in range(n):
        if rows[i][i] != 0:
            violations.append(Violation("zero_diagonal", (i,), abs(rows[i][i])))
        for j in range(i + 1, n):
            if rows[i][j] != rows[j][i]:
                violations.append(Violation("symmetry", (i, j), abs(rows[i][j] - rows[j][i])))
            if rows[i][j] <= 0:
                violations.append(Violation("positivity", (i, j), rows[i][j]))
    for i in range(n):
        for k in range(i + 1, n):
            for j in range(n):
                if j in (i, k):
                    continue
                excess = rows[i][k] - rows[i][j] - rows[j][k]
                if excess > 0:
                    violations.append(Violation("triangle", (i, j, k), excess))
    return MetricReport(violations)


def _positivity_violations(d: np.ndarray) -> list[Violation]:
    upper = np.triu(np.ones(d.shape, dtype=bool), k=1)
    return [
        Violation("positivity", (int(i), int(j)), float(d[i, j]))
        for i, j in np.argwhere(upper & (d <= 0))
    ]


def _validate_float(d: np.ndarray, tol: float) -> MetricReport:
    n = d.shape[0]
    violations = []
    if not np.all(np.isfinite(d)):
        for i, j in np.argwhere(~np.isfinite(d)):
            violations.append(Violation("finite", (int(i), int(j)), float("inf")))
        return MetricReport(violations)
    scale = max(1.0, float(d.max()))
    tol = tol * scale
    for i in np.flatnonzero(np.abs(np.diag(d)) > tol):
        violations.append(Violation("zero_diagonal", (int(i),), float(abs(d[i, i]))))
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    for i, j in np.argwhere(upper & (np.abs(d - d.T) > tol)):
        violations.append(Violation("symmetry", (int(i), int(j)), float(abs(d[i, j] - d[j, i]))))
    violations += _positivity_violations(d)
    for j in range(n):
        through = d[:, j][:, None] + d[j, :][None, :]
        bad = upper & (d > through + tol)
        bad[j, :] = False
        bad[:, j] = False
        for i, k in np.argwhere(bad):
            excess = float(d[i, k] - through[i, k])
            violations.append(Violation("triangle", (int(i), j, int(k)), excess))
    violations.sort(key=lambda v: (v.axiom, v.indices))
    return MetricReport(violations)


def validate_metric(dist: Any, tol: float | None = None) -> MetricReport:
    """Check the metric axioms; exact when every entry is rational.

    Raises:
        StructuralError: if the matrix is not square.
    """
    rows = _square(dist)
    n = len(rows)
    if n < 2:
        return MetricReport([Violation("size", (n,), n)])
    flat = [v for row in rows for v in row]
    if is_exact(flat):
        return _validate_exact([[Fraction(v) for v in row] for row in rows])
    tol = settings.metric_tolerance if tol is None else tol
    return _validate_float(np.asarray(rows, dtype=float), tol)


# ========== SPACES ==========
@dataclass(frozen=True)
class PointRecord:
    label: str
    coord: tuple[float, ...] | None = None


@dataclass(frozen=True, eq=False)
class FinitePointedMetricSpace:
    """Point set with a distinguished base point and a distance matrix.

    ``exact_dist`` holds rational distances side by side with the float matrix when the
    space was built from rationals; exact code paths use it.
    """

    points: tuple[PointRecord, ...]
    base_index: int
    dist: np.ndarray
    exact_dist: tuple[tuple[Fraction, ...], ...] | None = None
    model: NormedSpaceModel | None = None

    def __post_init__(self) -> None:
        d = np.array(self.dist, dtype=float)
        n = len(self.points)
        if d.shape != (n, n):
            raise StructuralError(f"distance matrix shape {d.shape} does not match {n} points")
        if n < 2:
            raise PreconditionError("a pointed metric space needs at least two points")
        if not 0 <= self.base_index < n:
            raise StructuralError(f"base index {self.base_index} out of range")
        if np.any(np.diag(d) != 0) or not np.allclose(d, d.T, rtol=0, atol=1e-12):
            raise PreconditionError("distance matrix must be symmetric with zero diagonal")
        collapsed = _positivity_violations(d)
        if collapsed:
            first = collapsed[0]
            raise PreconditionError(f"points {first.indices} are at distance {first.amount!r}")
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def labels(self) -> list[str]:
        return [pt.label for pt in self.points]

    @property
    def non_base(self) -> np.ndarray:
        """Indices of the non-base points, in order (the free-space coordinates)."""
        return np.array([i for i in range(self.size) if i != self.base_index], dtype=int)

    @property
    def has_coordinates(self) -> bool:
        return all(pt.coord is not None for pt in self.points)

    @cached_property
    def coords(self) -> np.ndarray:
        if not self.has_coordinates:
            raise PreconditionError("space has no ambient coordinates")
        return np.array([pt.coord for pt in self.points], dtype=float)

    @property
    def exact(self) -> bool:
        return self.exact_dist is not None

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError as exc:
            raise StructuralError(f"no point labelled {label!r}") from exc

    def resolve(self, ref: int | str) -> int:
        """A point reference given as an index or a label."""
        if isinstance(ref, str):
            return self.index_of(ref)
        if not 0 <= ref < self.size:
            raise StructuralError(f"point index {ref} out of range")
        return int(ref)

    def subspace(self, indices: Sequence[int]) -> "FinitePointedMetricSpace":
        """Induced subspace on ``indices`` (which must contain the base point)."""
        idx = sorted(set(int(i) for i in indices))
        if self.base_index not in idx:
            raise StructuralError("a subspace must contain the base point")
        exact = None
        if self.exact_dist is not None:
            exact = tuple(tuple(self.exact_dist[i][j] for j in idx) for i in idx)
        return FinitePointedMetricSpace(
            points=tuple(self.points[i] for i in idx),
            base_index=idx.index(self.base_index),
            dist=self.dist[np.ix_(idx, idx)],
            exact_dist=exact,
            model=self.model,
        )

    @classmethod
    def from_coordinates(
        cls,
        model: NormedSpaceModel,
        coords,
        labels: Sequence[str] | None = None,
        base_index: int = 0,
    ) -> "FinitePointedMetricSpace":
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        labels = list(labels) if labels is not None else [str(i) for i in range(len(coords))]
        diffs = coords[:, None, :] - coords[None, :, :]
        dist = model.norms(diffs)
        dist = (dist + dist.T) / 2.0
        np.fill_diagonal(dist, 0.0)
        points = tuple(PointRecord(lab, tuple(map(float, c))) for lab, c in zip(labels, coords))
        return cls(points=points, base_index=base_index, dist=dist, model=model)

    @classmethod
    def on_line(
        cls, values: Sequence[Any], labels: Sequence[str] | None = None
    ) -> "FinitePointedMetricSpace":
        """Subset of the real line; the point 0 is the base. Exact when values are rational."""
        if 0 not in values:
            raise PreconditionError("a line space needs the point 0 as its base")
        labels = list(labels) if labels is not None else [str(v) for v in values]
        exact = None
        if is_exact(values):
            fr = [Fraction(v) for v in values]
            exact = tuple(tuple(abs(a - b) for b in fr) for a in fr)
        floats = np.array([float(v) for v in values])
        dist = np.abs(floats[:, None] - floats[None, :])
        points = tuple(PointRecord(lab, (float(v),)) for lab, v in zip(labels, values))
        return cls(
            points=points,
            base_index=list(values).index(0),
            dist=dist,
            exact_dist=exact,
            model=NormedSpaceModel.lp(1, 2.0),
        )

    def to_jsonable(self) -> dict:
        return space_to_document(self).model_dump(exclude_none=True)


# ========== JSON ==========
def model_from_document(doc: ModelDocument) -> NormedSpaceModel:
    if doc.kind == "lp":
        return NormedSpaceModel.lp(doc.dim, doc.p)
    if doc.kind == "linf":
        return NormedSpaceModel.linf(doc.dim)
    if doc.kind == "l1":
        return NormedSpaceModel.l1(doc.dim)
    return NormedSpaceModel.polyhedral(doc.generators)


def model_to_document(model: NormedSpaceModel) -> ModelDocument:
    if model.kind == NormKind.LP:
        return ModelDocument(kind="lp", dim=model.dim, p=model.p)
    if model.name.startswith("linf"):
        return ModelDocument(kind="linf", dim=model.dim)
    if model.name.startswith("l1"):
        return ModelDocument(kind="l1", dim=model.dim)
    return ModelDocument(kind="polyhedral", dim=model.dim, generators=model.generators.tolist())


def space_from_document(doc: SpaceDocument) -> FinitePointedMetricSpace:
    """Build and fully validate a space from its JSON document."""
    model = model_from_document(doc.model) if doc.model is not None else None
    if doc.dist is None:
        space = FinitePointedMetricSpace.from_coordinates(
            model, [pt.coord for pt in doc.points], [pt.label for pt in doc.points], doc.base
        )
    else:
        raw = [[parse_number(v) for v in row] for row in doc.dist]
        report = validate_metric(raw)
        if not report.ok:
            first = report.violations[0]
            raise PreconditionError(f"not a metric: {first.axiom} at {first.indices}")
        exact = None
        if is_exact([v for row in raw for v in row]):
            exact = tuple(tuple(Fraction(v) for v in row) for row in raw)
        points = tuple(
            PointRecord(pt.label, None if pt.coord is None else tuple(pt.coord))
            for pt in doc.points
        )
        space = FinitePointedMetricSpace(
            points=points,
            base_index=doc.base,
            dist=np.array([[float(v) for v in row] for row in raw]),
            exact_dist=exact,
            model=model,
        )
    return space


def space_to_document(space: FinitePointedMetricSpace) -> SpaceDocument:
    if space.exact_dist is not None:
        dist = [[format_fraction(v) for v in row] for row in space.exact_dist]
    else:
        dist = space.dist.tolist()
    return SpaceDocument(
        points=[
            PointDocument(label=pt.label, coord=None if pt.coord is None else list(pt.coord))
            for pt in space.points
        ],
        base=space.base_index,
        dist=dist,
        model=None if space.model is None else model_to_document(space.model),
    )


# ========== BETWEENNESS ==========
@dataclass(frozen=True)
class BetweennessTriple:
    x: int
    z: int
    y: int
    defect: float | Fraction


def betweenness_triples(
    space: FinitePointedMetricSpace, tol: float | None = None
) -> list[BetweennessTriple]:
    """All (x, z, y) with x < y, z ∉ {x, y} and |ρ(x,y) − ρ(x,z) − ρ(z,y)| ≤ tol.

    Sorted by (x, y, z). Rational spaces are compared exactly.
    """
    tol = settings.betweenness_tolerance if tol is None else tol
    n = space.size
    triples: list[BetweennessTriple] = []
    if space.exact_dist is not None:
        d = space.exact_dist
        for x in range(n):
            for y in range(x + 1, n):
                for z in range(n):
                    if z in (x, y):
                        continue
                    defect = abs(d[x][y] - d[x][z] - d[z][y])
                    if defect <= tol:
                        triples.append(BetweennessTriple(x, z, y, defect))
        return triples
    d = space.dist
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    for z in range(n):
        defect = np.abs(d - d[:, z][:, None] - d[z, :][None, :])
        mask = upper & (defect <= tol)
        mask[z, :] = False
        mask[:, z] = False
        for x, y in np.argwhere(mask):
            triples.append(BetweennessTriple(int(x), z, int(y), float(defect[x, y])))
    triples.sort(key=lambda t: (t.x, t.y, t.z))
    return triples


# ========== GRID BUILDER ==========
@dataclass(frozen=True)
class NeighborhoodSpec:
    radius: float
    count: int


def _dedup(coords: list[np.ndarray], labels: list[str], tol: float):
    kept_coords: list[np.ndarray] = []
    kept_labels: list[str] = []
    for coord, label in zip(coords, labels):
        if kept_coords:
            gap = np.abs(np.asarray(kept_coords) - coord).max(axis=1)
            if gap.min() <= tol:
                continue
        kept_coords.append(coord)
        kept_labels.append(label)
    return kept_coords, kept_labels


def build_grid_space(
    model: NormedSpaceModel,
    anchors: Sequence[Sequence[float]],
    segment_resolution: int,
    neighborhood_spec: NeighborhoodSpec | Sequence[NeighborhoodSpec | None] | None = None,
    seed: int = 0,
    segments: Sequence[tuple[int, int]] | None = None,
    extra_points: Sequence[tuple[str, Sequence[float]]] = (),
) -> FinitePointedMetricSpace:
    """Sample a normed space: origin (base), anchors, segments and random neighborhoods.

    Args:
        model: the ambient norm.
        anchors: anchor vectors a_1..a_m.
        segment_resolution: number of subintervals per segment (resolution + 1 points).
        neighborhood_spec: one spec for every anchor, or one (or None) per anchor.
        seed: seed for the neighborhood sampler.
        segments: index pairs over [origin] + anchors; default joins the origin to every anchor.
        extra_points: additional labelled points.

    Returns:
        FinitePointedMetricSpace: points within ``dedup_tolerance`` merged, first kept.
    """
    origin = np.zeros(model.dim)
    nodes = [origin] + [np.asarray(a, dtype=float) for a in anchors]
    if any(node.shape != (model.dim,) for node in nodes):
        raise StructuralError(f"anchors must have dimension {model.dim}")
    coords: list[np.ndarray] = list(nodes)
    labels = ["0"] + [f"a{i}" for i in range(1, len(nodes))]

    if segments is None:
        segments = [(0, i) for i in range(1, len(nodes))]
    if segment_resolution < 1:
        raise PreconditionError("segment resolution must be at least 1")
    for i, j in segments:
        start, end = nodes[i], nodes[j]
        for k in range(segment_resolution + 1):
            t = k / segment_resolution
            coords.append(start + t * (end - start))
            labels.append(f"s{i}-{j}:{k}")

    if isinstance(neighborhood_spec, NeighborhoodSpec):
        specs = [neighborhood_spec] * (len(nodes) - 1)
    else:
        specs = list(neighborhood_spec or [])
    rng = np.random.default_rng(seed)
    for i, spec in enumerate(specs, start=1):
        if spec is None or spec.count <= 0:
            continue
        directions = model.random_directions(rng, spec.count)
        radii = spec.radius * rng.uniform(size=spec.count) ** (1.0 / model.dim)
        for k, point in enumerate(nodes[i] + directions * radii[:, None]):
            coords.append(point)
            labels.append(f"n{i}:{k}")

    for label, point in extra_points:
        coords.append(np.asarray(point, dtype=float))
        labels.append(label)

    coords, labels = _dedup(coords, labels, settings.dedup_tolerance)
    logger.debug(f"grid space with {len(coords)} points in {model.name}")
    return FinitePointedMetricSpace.from_coordinates(model, np.asarray(coords), labels, 0)


# ========== QUOTIENTS AND LOCALITY ==========
def quotient_matrix(dist: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Q[i, j] = (v_i − v_j)/ρ(i, j) off the diagonal, −inf on it."""
    values = np.asarray(values, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = (values[:, None] - values[None, :]) / dist
    np.fill_diagonal(q, -np.inf)
    return q


def locality_witness(
    space: FinitePointedMetricSpace, f: "LipFunctional", eps: float
) -> tuple[int, int] | None:
    """A pair (x, y) with ρ(x,y) < eps and (f(x) − f(y))/ρ(x,y) > ‖f‖ − eps, if any.

    The best such quotient is returned (smallest indices on ties). ``None`` means the
    grid is too coarse to see the norm at scale ``eps``.
    """
    q = quotient_matrix(space.dist, f.values)
    norm = float(q.max())
    if norm <= 0:
        raise PreconditionError("locality needs a functional with positive norm")
    mask = (space.dist < eps) & (q > norm - eps)
    np.fill_diagonal(mask, False)
    candidates = np.flatnonzero(mask)
    if candidates.size == 0:
        return None
    best = candidates[np.argmax(q.flat[candidates])]
    x, y = divmod(int(best), space.size)
    return x, y
