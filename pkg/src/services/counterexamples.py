"""
Counterexamples in exact rational arithmetic.

* A fat (Smith-Volterra-Cantor) set A_k and its primitive g_k stay at distance ≥ ½ from
  every strongly attaining piecewise-linear candidate.
* The same obstruction lifted to a convex body through a 1-Lipschitz retraction onto a
  segment.
* Local perturbations g_n of g that strongly attain with norm 1 + 2ε_n and converge
  uniformly back to g.
* The c₀ identity ‖Σ a_j f_j‖ = max |a_k| for separated supports, checked on grids.
"""

import logging
from bisect import bisect_left
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from src.core.config import settings
from src.core.errors import PreconditionError, SizeGuardError, StructuralError
from src.services.lipfunc import (
    AttainedPair,
    AttainmentCertificate,
    AttainmentMode,
    ExtensionVariant,
    LipFunctional,
    compose_with_retraction,
    lip_norm,
    mcshane_extend,
)
from src.services.metric_core import (
    FinitePointedMetricSpace,
    PointRecord,
    build_grid_space,
    locality_witness,
)
from src.services.normed import NormedSpaceModel
from src.services.ucx import segment_points
from src.utils.serialization import format_fraction

logger = logging.getLogger(__name__)

Interval = tuple[Fraction, Fraction]

MAX_DEPTH = 20
MIN_EXTREME_LENGTH = Fraction(1, 32)


# ========== FAT CANTOR SETS ==========
@dataclass(frozen=True)
class FatCantorSet:
    depth: int
    kept_intervals: tuple[Interval, ...]

    @property
    def measure(self) -> Fraction:
        return sum((b - a for a, b in self.kept_intervals), Fraction(0))

    @property
    def removed_intervals(self) -> tuple[Interval, ...]:
        kept = self.kept_intervals
        return tuple((kept[i][1], kept[i + 1][0]) for i in range(len(kept) - 1))

    def to_jsonable(self) -> dict:
        return {
            "depth": self.depth,
            "kept_intervals": [
                [format_fraction(a), format_fraction(b)] for a, b in self.kept_intervals
            ],
            "measure": format_fraction(self.measure),
        }


def _check_depth(depth: int) -> None:
    if depth < 1:
        raise PreconditionError(f"depth must be at least 1, got {depth}")
    if depth > MAX_DEPTH:
        raise SizeGuardError(f"depth {depth} exceeds the limit {MAX_DEPTH} (2^depth intervals)")


def svc_set(depth: int) -> FatCantorSet:
    """Remove the open middle interval of length 4^(−i) from each interval at step i."""
    _check_depth(depth)
    intervals: list[Interval] = [(Fraction(0), Fraction(1))]
    for i in range(1, depth + 1):
        half_gap = Fraction(1, 2 * 4**i)
        nxt: list[Interval] = []
        for a, b in intervals:
            mid = (a + b) / 2
            nxt += [(a, mid - half_gap), (mid + half_gap, b)]
        intervals = nxt
    return FatCantorSet(depth, tuple(intervals))


def svc_measure(depth: int) -> Fraction:
    """1 − Σ_{i≤k} 2^(i−1)/4^i."""
    return 1 - sum((Fraction(2 ** (i - 1), 4**i) for i in range(1, depth + 1)), Fraction(0))


# ========== PIECEWISE LINEAR FUNCTIONS ==========
@dataclass(frozen=True)
class PiecewiseLinearFn:
    """Continuous piecewise-linear function on [0, 1] with value 0 at 0."""

    breakpoints: tuple[Fraction, ...]
    slopes: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        bps = tuple(Fraction(b) for b in self.breakpoints)
        slopes = tuple(Fraction(s) for s in self.slopes)
        if len(bps) < 2 or bps[0] != 0 or bps[-1] != 1:
            raise StructuralError("breakpoints must run from 0 to 1")
        if any(b >= c for b, c in zip(bps, bps[1:])):
            raise StructuralError("breakpoints must be strictly increasing")
        if len(slopes) != len(bps) - 1:
            raise StructuralError("one slope per piece")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "slopes", slopes)

    @cached_property
    def knot_values(self) -> tuple[Fraction, ...]:
        values = [Fraction(0)]
        for (a, b), s in zip(self.pieces_bounds(), self.slopes):
            values.append(values[-1] + s * (b - a))
        return tuple(values)

    def pieces_bounds(self) -> list[Interval]:
        return list(zip(self.breakpoints, self.breakpoints[1:]))

    def pieces(self) -> list[tuple[Fraction, Fraction, Fraction]]:
        return [(a, b, s) for (a, b), s in zip(self.pieces_bounds(), self.slopes)]

    def __call__(self, t) -> Fraction:
        t = Fraction(t)
        if not 0 <= t <= 1:
            raise PreconditionError(f"{t} is outside [0, 1]")
        k = max(bisect_left(self.breakpoints, t) - 1, 0)
        return self.knot_values[k] + self.slopes[k] * (t - self.breakpoints[k])

    @property
    def norm(self) -> Fraction:
        return max(abs(s) for s in self.slopes)

    def __sub__(self, other: "PiecewiseLinearFn") -> "PiecewiseLinearFn":
        bps = sorted(set(self.breakpoints) | set(other.breakpoints))
        slopes = []
        for a, b in zip(bps, bps[1:]):
            mid = (a + b) / 2
            slopes.append(self.slope_at(mid) - other.slope_at(mid))
        return PiecewiseLinearFn(tuple(bps), tuple(slopes))

    def slope_at(self, t: Fraction) -> Fraction:
        """Slope of the piece containing t (the left piece at a breakpoint)."""
        if not 0 <= t <= 1:
            raise PreconditionError(f"{t} is outside [0, 1]")
        return self.slopes[max(bisect_left(self.breakpoints, t) - 1, 0)]

    def extreme_pieces(self) -> list[tuple[Fraction, Fraction, Fraction]]:
        top = self.norm
        return [(a, b, s) for a, b, s in self.pieces() if abs(s) == top]

    def to_jsonable(self) -> dict:
        return {
            "breakpoints": [format_fraction(b) for b in self.breakpoints],
            "slopes": [format_fraction(s) for s in self.slopes],
        }


def cantor_primitive(depth: int) -> PiecewiseLinearFn:
    """g_k(t) = measure of A_k ∩ [0, t]: slope 1 on kept intervals, 0 on gaps."""
    cantor = svc_set(depth)
    bps: list[Fraction] = []
    slopes: list[Fraction] = []
    for i, (a, b) in enumerate(cantor.kept_intervals):
        bps.append(a)
        slopes.append(Fraction(1))
        if i + 1 < len(cantor.kept_intervals):
            bps.append(b)
            slopes.append(Fraction(0))
    bps.append(Fraction(1))
    return PiecewiseLinearFn(tuple(bps), tuple(slopes))


# ========== DISTANCE BOUND ==========
@dataclass(frozen=True)
class DistanceBound:
    distance: Fraction
    certified_bound: Fraction
    case: str
    witness: Interval

    def to_jsonable(self) -> dict:
        return {
            "distance": format_fraction(self.distance),
            "certified_bound": format_fraction(self.certified_bound),
            "case": self.case,
            "witness": [format_fraction(self.witness[0]), format_fraction(self.witness[1])],
        }


def _overlap(first: Interval, second: Interval) -> Interval | None:
    lo, hi = max(first[0], second[0]), min(first[1], second[1])
    return (lo, hi) if lo < hi else None


def sa_distance_lower_bound(g: PiecewiseLinearFn, f: PiecewiseLinearFn) -> DistanceBound:
    """Exact ‖g − f‖ and a certified lower bound for a strong-attainment candidate f.

    If ‖f‖ ≤ ½, any slope-1 piece of g gives |1 − f′| ≥ 1 − ‖f‖. Otherwise a gap of g
    (slope 0) inside an extreme piece of f gives |0 − f′| = ‖f‖.

    Raises:
        PreconditionError: if f has no extreme piece of length ≥ 1/32, or no gap of g
            falls inside one (the depth is too shallow for the piece).
    """
    distance = (g - f).norm
    norm = f.norm
    if norm <= Fraction(1, 2):
        for a, b, s in g.pieces():
            if s != 1:
                continue
            for c, d, t in f.pieces():
                hit = _overlap((a, b), (c, d))
                if hit is not None:
                    return DistanceBound(distance, abs(1 - t), "small_norm", hit)
    extremes = [p for p in f.extreme_pieces() if p[1] - p[0] >= MIN_EXTREME_LENGTH]
    if not extremes:
        raise PreconditionError("f has no extreme-slope piece of length at least 1/32")
    gaps = [(a, b) for a, b, s in g.pieces() if s == 0]
    for c, d, _ in sorted(extremes, key=lambda p: p[0] - p[1]):
        for gap in gaps:
            hit = _overlap(gap, (c, d))
            if hit is not None:
                return DistanceBound(distance, norm, "gap", hit)
    raise PreconditionError("no removed interval meets an extreme piece of f at this depth")


def sa_candidate_family(count: int, seed: int = 0, max_pieces: int = 16) -> list[PiecewiseLinearFn]:
    """Random candidates: breakpoints on the 1/32 lattice, slopes in {−1, −7/8, …, 1}."""
    rng = np.random.default_rng(seed)
    family = []
    for _ in range(count):
        pieces = int(rng.integers(1, max_pieces + 1))
        interior = sorted(rng.choice(np.arange(1, 32), size=pieces - 1, replace=False).tolist())
        bps = [Fraction(0)] + [Fraction(int(k), 32) for k in interior] + [Fraction(1)]
        slopes = [Fraction(int(n), 8) for n in rng.integers(-8, 9, size=pieces)]
        family.append(PiecewiseLinearFn(tuple(bps), tuple(slopes)))
    return family


# ========== GRIDS ==========
def breakpoint_space(
    fns: Sequence[PiecewiseLinearFn], mesh: Fraction | None = None
) -> FinitePointedMetricSpace:
    """Exact line space on the union of breakpoints (and an optional uniform mesh)."""
    points: set[Fraction] = {Fraction(0), Fraction(1)}
    for fn in fns:
        points.update(fn.breakpoints)
    if mesh is not None:
        steps = int(1 / Fraction(mesh))
        points.update(Fraction(k, steps) for k in range(steps + 1))
    ordered = sorted(points)
    return FinitePointedMetricSpace.on_line(ordered, [format_fraction(p) for p in ordered])


def as_functional(fn: PiecewiseLinearFn, space: FinitePointedMetricSpace) -> LipFunctional:
    """Exact values at the points of a line space inside [0, 1]."""
    values = [fn(Fraction(pt.label)) for pt in space.points]
    return LipFunctional.from_exact(space, values)


def segment_grid(
    model: NormedSpaceModel,
    depth: int,
    mesh: Fraction = Fraction(1, 100),
    cloud_count: int = 60,
    seed: int = 0,
) -> FinitePointedMetricSpace:
    """Grid of a convex body: the segment [0, e_1] sampled on a mesh plus the breakpoints
    of g_k, and a random cloud of nearby points. The segment end is labelled ``x0``."""
    g = cantor_primitive(depth)
    ts = set(g.breakpoints)
    steps = int(1 / mesh)
    ts.update(Fraction(k, steps) for k in range(steps + 1))
    ts.update(Fraction(k, 32) for k in range(33))
    e1 = np.zeros(model.dim)
    e1[0] = 1.0 / model.norm(np.eye(model.dim)[0])
    extra = [(f"t{format_fraction(t)}", float(t) * e1) for t in sorted(ts) if 0 < t < 1]
    rng = np.random.default_rng(seed)
    cloud = rng.uniform(-0.5, 1.5, size=(cloud_count, model.dim))
    extra += [(f"c{k}", point) for k, point in enumerate(cloud)]
    space = build_grid_space(model, [e1], 1, seed=seed, segments=[], extra_points=extra)
    points = list(space.points)
    end = space.index_of("a1")
    points[end] = PointRecord("x0", points[end].coord)
    return FinitePointedMetricSpace(tuple(points), space.base_index, space.dist, model=model)


def _segment_parameters(
    space: FinitePointedMetricSpace, end: int
) -> tuple[list[int], np.ndarray]:
    base = space.base_index
    length = float(space.dist[base, end])
    if abs(length - 1.0) > settings.betweenness_tolerance:
        raise PreconditionError(f"segment end is at distance {length!r} from 0, not 1")
    on_segment = segment_points(space, base, end)
    indices = [i for _, i in on_segment]
    ts = np.array([t for t, _ in on_segment])
    if not np.allclose(space.dist[base, indices], ts, atol=settings.betweenness_tolerance):
        raise PreconditionError("the segment sample is not isometric to [0, 1]")
    if len(indices) < 2:
        raise PreconditionError("no segment sample between 0 and the segment end")
    return indices, ts


def grid_sa_candidates(
    space: FinitePointedMetricSpace,
    candidates: Sequence[PiecewiseLinearFn],
    end: int,
) -> list[LipFunctional]:
    """Lift candidates from the segment to the whole grid by McShane extension."""
    indices, ts = _segment_parameters(space, end)
    sub = space.subspace(indices)
    order = [indices.index(i) for i in sorted(indices)]
    sub_ts = ts[order]
    lifted = []
    for fn in candidates:
        values = [float(fn(Fraction(float(t)))) for t in sub_ts]
        lifted.append(mcshane_extend(LipFunctional(sub, values), space, ExtensionVariant.MIDPOINT))
    return lifted


def is_grid_sa_candidate(
    f: LipFunctional, end: int, min_length: float = 0.01, tol: float = 1e-9
) -> bool:
    """Whether f is affine with extreme slope ±‖f‖ on a sampled sub-segment of length ≥ min_length."""
    indices, ts = _segment_parameters(f.space, end)
    norm = float(f.norm)
    if norm == 0:
        return True
    values = f.values[indices]
    slopes = np.diff(values) / np.diff(ts)
    run_start = None
    for k, slope in enumerate(slopes):
        extreme = abs(abs(slope) - norm) <= tol * max(1.0, norm)
        same = run_start is not None and abs(slope - slopes[run_start]) <= tol * max(1.0, norm)
        if extreme and (run_start is None or not same):
            run_start = k
        elif not extreme:
            run_start = None
        if run_start is not None and ts[k + 1] - ts[run_start] >= min_length - tol:
            return True
    return False


@dataclass(frozen=True)
class MconvAudit:
    h: LipFunctional
    norm_h: float
    distances: tuple[float, ...]
    min_distance: float
    threshold: float
    passed: bool
    h_is_candidate: bool

    def to_jsonable(self) -> dict:
        return {
            "norm_h": self.norm_h,
            "min_distance": self.min_distance,
            "threshold": self.threshold,
            "passed": self.passed,
            "h_is_candidate": self.h_is_candidate,
            "candidates": len(self.distances),
        }


def mconv_obstruction(
    space: FinitePointedMetricSpace,
    depth: int,
    candidates: Sequence[PiecewiseLinearFn] = (),
    end: int | str = "x0",
    mesh: float = 0.01,
) -> MconvAudit:
    """h := g_k ∘ u for the retraction u onto the segment [0, x₀], audited against candidates.

    u is the midpoint McShane extension of the segment parameter, clipped to [0, 1]; g_k is
    snapped to the segment grid. Every lifted candidate must stay ½ − 2·mesh away from h.
    """
    end = space.resolve(end)
    indices, ts = _segment_parameters(space, end)
    sub = space.subspace(indices)
    sub_ts = np.sort(ts)
    identity = LipFunctional(sub, sub.coords[:, 0] / space.coords[end, 0])
    u = mcshane_extend(identity, space, ExtensionVariant.MIDPOINT)
    u = LipFunctional(space, np.clip(u.values, 0.0, 1.0))

    g = cantor_primitive(depth)
    line = FinitePointedMetricSpace.on_line([float(t) for t in sub_ts])
    g_line = LipFunctional(line, [float(g(Fraction(float(t)))) for t in sub_ts])
    h = compose_with_retraction(g_line, u).h

    lifted = grid_sa_candidates(space, candidates, end)
    distances = tuple(float(lip_norm(h - f).norm) for f in lifted)
    threshold = 0.5 - 2.0 * mesh
    min_distance = min(distances) if distances else float("inf")
    logger.info(f"segment obstruction: {len(lifted)} candidates, min distance {min_distance:.4g}")
    return MconvAudit(
        h=h,
        norm_h=float(h.norm),
        distances=distances,
        min_distance=min_distance,
        threshold=threshold,
        passed=min_distance >= threshold,
        h_is_candidate=is_grid_sa_candidate(h, end, min_length=mesh),
    )


# ========== WEAK DENSITY ==========
@dataclass(frozen=True)
class BallSpec:
    center: int
    radius: Fraction | float
    eps: Fraction | float
    witness: int


@dataclass(frozen=True)
class DensityStep:
    index: int
    g_n: LipFunctional
    norm: Fraction | float
    target_norm: Fraction | float
    quotient: Fraction | float
    attaining_pair: tuple[int, int]
    deviation: float
    support_contained: bool
    certificate: AttainmentCertificate

    @property
    def passed(self) -> bool:
        tol = 0 if isinstance(self.norm, Fraction) else settings.norm_tolerance
        return (
            abs(self.norm - self.target_norm) <= tol
            and abs(self.quotient - self.target_norm) <= tol
            and self.support_contained
        )

    def to_jsonable(self) -> dict:
        def number(v):
            return format_fraction(v) if isinstance(v, Fraction) else float(v)

        return {
            "index": self.index,
            "norm": number(self.norm),
            "target_norm": number(self.target_norm),
            "quotient": number(self.quotient),
            "attaining_pair": list(self.attaining_pair),
            "deviation": self.deviation,
            "support_contained": self.support_contained,
            "passed": self.passed,
            "values": self.g_n.to_jsonable()["values"],
        }


def _distance(space: FinitePointedMetricSpace, i: int, j: int, exact: bool):
    return space.exact_dist[i][j] if exact else float(space.dist[i, j])


def sa_weak_density_construct(g: LipFunctional, balls: Sequence[BallSpec]) -> list[DensityStep]:
    """Perturb g inside each ball so that it strongly attains with norm 1 + 2ε_n.

    On E_n = (E \\ U_n) ∪ {x_n, y_n}, h_n = g except h_n(x_n) = g(y_n) − s_n(1+2ε_n)ρ(x_n, y_n)
    with s_n = sign(g(y_n) − g(x_n)) (sign 0 read as +1); g_n is its McShane extension.

    Raises:
        PreconditionError: for ‖g‖ ≠ 1, overlapping balls, 0 inside a ball, ε_n outside
            (0, ½) or a witness not at distance ε_n·r_n from the center.
    """
    space = g.space
    exact = g.exact and all(
        isinstance(b.radius, (int, Fraction)) and isinstance(b.eps, (int, Fraction)) for b in balls
    )
    norm_g = g.norm
    if abs(float(norm_g) - 1.0) > settings.norm_tolerance:
        raise PreconditionError(f"g must have norm 1, got {norm_g!r}")
    values = g.exact_values if exact else g.values
    base = space.base_index

    for n, ball in enumerate(balls):
        if not 0 < ball.eps < Fraction(1, 2):
            raise PreconditionError(f"ball {n}: eps must lie in (0, 1/2)")
        if _distance(space, base, ball.center, exact) < ball.radius:
            raise PreconditionError(f"ball {n} contains the base point")
        gap = _distance(space, ball.center, ball.witness, exact)
        target = ball.eps * ball.radius
        if (gap != target) if exact else abs(gap - float(target)) > settings.norm_tolerance:
            raise PreconditionError(
                f"ball {n}: witness at distance {gap}, expected eps·r = {target}"
            )
        for m in range(n):
            other = balls[m]
            if _distance(space, ball.center, other.center, exact) < ball.radius + other.radius:
                raise PreconditionError(f"balls {m} and {n} overlap")

    steps = []
    for n, ball in enumerate(balls):
        x, y = ball.center, ball.witness
        inside = [
            p for p in range(space.size) if _distance(space, x, p, exact) < ball.radius
        ]
        keep = sorted(set(range(space.size)) - set(inside) | {x, y})
        rho = _distance(space, x, y, exact)
        sign = 1 if values[y] - values[x] >= 0 else -1
        scale = 1 + 2 * ball.eps
        sub = space.subspace(keep)
        sub_values = [values[p] for p in keep]
        sub_values[keep.index(x)] = values[y] - sign * scale * rho
        h_n = LipFunctional.from_exact(sub, sub_values) if exact else LipFunctional(sub, sub_values)
        g_n = mcshane_extend(h_n, space, ExtensionVariant.MIDPOINT)

        pair = (y, x) if sign > 0 else (x, y)
        quotient = g_n.quotient(*pair)
        outside = [p for p in range(space.size) if p not in inside]
        contained = bool(np.all(g_n.values[outside] == g.values[outside]))
        if exact:
            contained = contained and all(
                g_n.exact_values[p] == g.exact_values[p] for p in outside
            )
        norm = g_n.norm
        certificate = AttainmentCertificate(
            AttainmentMode.STRONG, (AttainedPair(pair[0], pair[1], quotient),), norm
        )
        steps.append(
            DensityStep(
                index=n,
                g_n=g_n,
                norm=norm,
                target_norm=scale if exact else float(scale),
                quotient=quotient,
                attaining_pair=pair,
                deviation=float(np.abs(g_n.values - g.values).max()),
                support_contained=contained,
                certificate=certificate,
            )
        )
        logger.debug(f"ball {n}: ‖g_n‖ = {norm}, deviation {steps[-1].deviation:.3g}")
    return steps


def _nearest_even_distance(t: Fraction) -> Fraction:
    k = round(t / 2)
    return abs(t - 2 * k)


@dataclass(frozen=True)
class DensityFixture:
    g: LipFunctional
    balls: tuple[BallSpec, ...]


def weak_density_fixture(count: int = 4, coarse: Fraction = Fraction(1, 8)) -> DensityFixture:
    """Line grid on [0, 8], balls at 1.5, 3.5, 5.5, 7.5 with ε_n = r_n = 2^−(n+2) from n = 0.

    g is the distance to the nearest even integer; the grid is dyadic with mesh 1/256
    around every ball and carries each witness x_n + ε_n·r_n exactly.
    """
    if not 1 <= count <= 4:
        raise PreconditionError("the fixture has between one and four balls")
    centers = [Fraction(3, 2) + 2 * k for k in range(count)]
    radii = [Fraction(1, 2 ** (n + 2)) for n in range(count)]
    points: set[Fraction] = {Fraction(k) * coarse for k in range(int(8 / coarse) + 1)}
    fine = Fraction(1, 256)
    for c, r in zip(centers, radii):
        reach = int(2 * r / fine)
        points.update(c + k * fine for k in range(-reach, reach + 1))
        points.add(c + r * r)
    ordered = sorted(points)
    space = FinitePointedMetricSpace.on_line(ordered, [format_fraction(p) for p in ordered])
    g = LipFunctional.from_exact(space, [_nearest_even_distance(p) for p in ordered])
    balls = tuple(
        BallSpec(ordered.index(c), r, r, ordered.index(c + r * r)) for c, r in zip(centers, radii)
    )
    return DensityFixture(g, balls)


# ========== c₀ ESTIMATE ==========
@dataclass(frozen=True)
class C0Check:
    lhs: float
    rhs: float
    deviation: float
    tolerance: float
    passed: bool
    separation: float


def c0_estimate_check(
    functionals: Sequence[LipFunctional],
    coefficients: Sequence[float],
    locality_eps: float,
) -> C0Check:
    """Compare ‖Σ a_j f_j‖ with max |a_k| for norm-one functionals with separated supports.

    The deviation may reach max|a|·ε/(1 − ε) + ε at locality scale ε.

    Raises:
        PreconditionError: on supports that are not separated, non-unit norms or a grid
            without locality witnesses at scale ``locality_eps``.
    """
    if not functionals or len(functionals) != len(coefficients):
        raise PreconditionError("one coefficient per functional is required")
    space = functionals[0].space
    supports = []
    for j, f in enumerate(functionals):
        if f.space is not space:
            raise StructuralError("all functionals must live on one space")
        if abs(float(f.norm) - 1.0) > settings.norm_tolerance:
            raise PreconditionError(f"functional {j} does not have norm 1")
        if locality_witness(space, f, locality_eps) is None:
            raise PreconditionError(
                f"functional {j} has no locality witness at scale {locality_eps}"
            )
        supports.append(np.flatnonzero(f.values != 0))
    separation = np.inf
    for n in range(len(supports)):
        for m in range(n):
            if supports[n].size and supports[m].size:
                d = float(space.dist[np.ix_(supports[n], supports[m])].min())
                if d <= 0:
                    raise PreconditionError(
                        f"supports of functionals {m} and {n} are not separated"
                    )
                separation = min(separation, d)
    total = LipFunctional.zeros(space)
    for a, f in zip(coefficients, functionals):
        total = total + f * float(a)
    lhs = float(total.norm)
    rhs = float(max(abs(a) for a in coefficients))
    deviation = abs(lhs - rhs)
    tolerance = rhs * locality_eps / (1.0 - locality_eps) + locality_eps
    return C0Check(lhs, rhs, deviation, tolerance, deviation <= tolerance, float(separation))


def tent_family(
    space: FinitePointedMetricSpace, centers: Sequence[float], radius: float
) -> list[LipFunctional]:
    """Unit tents max(r − |t − c|, 0) on a line grid."""
    grid = space.coords[:, 0]
    return [LipFunctional(space, np.maximum(radius - np.abs(grid - c), 0.0)) for c in centers]
