from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings as hsettings

from src.core.errors import PreconditionError, SizeGuardError, StructuralError
from src.services.counterexamples import (
    PiecewiseLinearFn,
    as_functional,
    breakpoint_space,
    c0_estimate_check,
    cantor_primitive,
    mconv_obstruction,
    sa_candidate_family,
    sa_distance_lower_bound,
    sa_weak_density_construct,
    segment_grid,
    svc_measure,
    svc_set,
    tent_family,
    weak_density_fixture,
)
from src.services.metric_core import FinitePointedMetricSpace
from src.services.normed import NormedSpaceModel
from src.services.scenarios import separated_tents
from tests.helpers import seeds

HALF = Fraction(1, 2)


class TestFatCantor:
    def test_measure_at_depth_two(self):
        assert svc_set(2).measure == Fraction(5, 8)

    @pytest.mark.parametrize("depth", range(1, 9))
    def test_closed_form_measure(self, depth):
        cantor = svc_set(depth)
        assert cantor.measure == svc_measure(depth)
        assert len(cantor.kept_intervals) == 2**depth
        kept = cantor.kept_intervals
        assert all(b <= c for (_, b), (c, _) in zip(kept, kept[1:]))

    def test_measure_decreases_to_one_half(self):
        measures = [svc_measure(k) for k in range(1, 12)]
        assert all(b < a for a, b in zip(measures, measures[1:]))
        assert all(m > HALF for m in measures)

    def test_depth_limits(self):
        with pytest.raises(PreconditionError):
            svc_set(0)
        with pytest.raises(SizeGuardError):
            svc_set(21)

    def test_primitive_climbs_to_the_measure(self):
        g = cantor_primitive(3)
        assert g(1) == svc_measure(3)
        assert g.norm == 1
        gap = svc_set(3).removed_intervals[0]
        assert g(gap[0]) == g(gap[1])


class TestPiecewiseLinear:
    def test_evaluation_and_difference(self):
        tent = PiecewiseLinearFn((0, HALF, 1), (1, -1))
        assert tent(Fraction(1, 4)) == Fraction(1, 4)
        assert tent(HALF) == HALF
        assert tent(1) == 0
        assert (tent - tent).norm == 0

    def test_breakpoints_must_span_the_interval(self):
        with pytest.raises(StructuralError):
            PiecewiseLinearFn((0, HALF), (1,))

    def test_exact_functional_on_breakpoints(self):
        tent = PiecewiseLinearFn((0, HALF, 1), (1, -1))
        space = breakpoint_space([tent], mesh=Fraction(1, 4))
        f = as_functional(tent, space)
        assert f.exact
        assert f.norm == 1


class TestStrongAttainmentDistance:
    def test_small_norm_candidates(self):
        g = cantor_primitive(6)
        flat = PiecewiseLinearFn((0, 1), (Fraction(1, 4),))
        bound = sa_distance_lower_bound(g, flat)
        assert bound.case == "small_norm"
        assert bound.certified_bound == Fraction(3, 4)
        assert bound.distance >= bound.certified_bound

    def test_gap_inside_an_extreme_piece(self):
        g = cantor_primitive(6)
        steep = PiecewiseLinearFn((0, HALF, 1), (1, -1))
        bound = sa_distance_lower_bound(g, steep)
        assert bound.case == "gap"
        assert bound.certified_bound == 1
        assert bound.distance >= bound.certified_bound

    def test_short_extreme_pieces_are_rejected(self):
        g = cantor_primitive(6)
        spike = PiecewiseLinearFn((0, Fraction(1, 64), 1), (1, 0))
        with pytest.raises(PreconditionError):
            sa_distance_lower_bound(g, spike)

    def test_random_family_stays_half_away(self):
        g = cantor_primitive(6)
        family = sa_candidate_family(1000, seed=0)
        bounds = [sa_distance_lower_bound(g, f) for f in family]
        assert min(b.certified_bound for b in bounds) >= HALF
        assert all(b.distance >= b.certified_bound for b in bounds)

    @hsettings(max_examples=20, deadline=None)
    @given(seed=seeds)
    def test_family_is_seeded(self, seed):
        first = sa_candidate_family(5, seed)
        second = sa_candidate_family(5, seed)
        assert [f.breakpoints for f in first] == [f.breakpoints for f in second]
        assert all(f.norm <= 1 for f in first)


class TestSegmentObstruction:
    def test_lifted_candidates_stay_away_from_h(self):
        model = NormedSpaceModel.lp(2, 2.0)
        space = segment_grid(model, 8, cloud_count=40, seed=2)
        audit = mconv_obstruction(space, 8, sa_candidate_family(200, seed=2))
        assert audit.passed
        assert audit.min_distance >= 0.5 - 0.02
        assert len(audit.distances) == 200
        assert not audit.h_is_candidate

    def test_segment_end_is_labelled(self):
        space = segment_grid(NormedSpaceModel.lp(3, 3.0), 5, cloud_count=10)
        end = space.index_of("x0")
        assert space.dist[space.base_index, end] == pytest.approx(1.0)


class TestWeakDensity:
    @pytest.fixture(scope="class")
    def steps(self):
        fixture = weak_density_fixture()
        return sa_weak_density_construct(fixture.g, fixture.balls)

    def test_every_step_strongly_attains_with_the_target_norm(self, steps):
        assert len(steps) == 4
        for n, step in enumerate(steps):
            radius = Fraction(1, 2 ** (n + 2))
            assert step.norm == 1 + 2 * radius
            assert step.quotient == step.norm
            assert step.support_contained
            assert step.passed
            assert step.certificate.verify()

    def test_deviations_shrink(self, steps):
        deviations = [s.deviation for s in steps]
        assert all(b <= a for a, b in zip(deviations, deviations[1:]))
        assert deviations[-1] < deviations[0]

    def test_ball_containing_the_base_is_rejected(self):
        fixture = weak_density_fixture(1)
        ball = fixture.balls[0]
        wide = type(ball)(ball.center, Fraction(2), Fraction(1, 4), ball.witness)
        with pytest.raises(PreconditionError):
            sa_weak_density_construct(fixture.g, [wide])

    def test_fixture_size_is_limited(self):
        with pytest.raises(PreconditionError):
            weak_density_fixture(5)


class TestC0Estimate:
    @pytest.fixture(scope="class")
    def grid(self):
        points = [k / 200 for k in range(201)]
        return FinitePointedMetricSpace.on_line(points, [f"{t:.3f}" for t in points])

    def test_random_separated_families(self, grid):
        rng = np.random.default_rng(7)
        for _ in range(50):
            count = int(rng.integers(1, 6))
            centers = separated_tents(rng, count, 0.05)
            coefficients = rng.uniform(-2.0, 2.0, size=count)
            check = c0_estimate_check(tent_family(grid, centers, 0.05), coefficients, 0.05)
            assert check.passed
            assert check.lhs == pytest.approx(check.rhs, abs=1e-9)

    def test_overlapping_supports_are_rejected(self, grid):
        with pytest.raises(PreconditionError):
            c0_estimate_check(tent_family(grid, [0.3, 0.35], 0.1), [1.0, 1.0], 0.05)
