import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings as hsettings
from hypothesis import strategies as st

from src.core.errors import PreconditionError, StructuralError
from src.services.metric_core import FinitePointedMetricSpace
from src.services.normed import NormedSpaceModel
from src.services.seminorms import (
    SeminormModel,
    SupNorm,
    attainment_equivalences,
    gap_pair,
    jn_truncated_seminorm,
    lip_distance,
    near_attaining_point,
    random_unit_maxabs,
    seminorm_bpb_construct,
    seminorm_grid,
    seminorm_norms,
    sup_norm,
    uniform_distance,
    uniform_vs_lip_gap,
)
from tests.helpers import seeds


class TestModel:
    def test_integer_rows_are_kept_exact(self):
        p = SeminormModel.maxabs([[1, -2], [0, 3]])
        assert p.exact_value([Fraction(1, 2), Fraction(1, 3)]) == Fraction(1)
        assert p([0.5, 1 / 3]) == pytest.approx(1.0)

    def test_float_rows_have_no_exact_value(self):
        with pytest.raises(PreconditionError):
            SeminormModel.maxabs([[0.5, 0.1]]).exact_value([Fraction(1), Fraction(0)])

    def test_empty_and_unknown_targets(self):
        with pytest.raises(StructuralError):
            SeminormModel.opnorm(np.zeros((0, 2)))
        with pytest.raises(PreconditionError):
            SeminormModel.opnorm(np.eye(2), "l1")

    def test_spot_check(self):
        rng = np.random.default_rng(0)
        assert SeminormModel.opnorm([[1.0, 2.0], [0.0, 1.0]]).spot_check(rng)
        assert random_unit_maxabs(4, 3, rng).spot_check(rng)


class TestSupNorm:
    @pytest.mark.parametrize("n", [1, 2, 5, 9])
    def test_truncated_diagonal_seminorm(self, n):
        sup = sup_norm(jn_truncated_seminorm(n, n + 1), NormedSpaceModel.lp(n + 1, 2.0))
        assert sup.value == Fraction(n, n + 1)
        assert sup.method == "dual_norm"
        assert sup.witness[n - 1] == pytest.approx(1.0)

    def test_truncation_norms_increase(self):
        values = [
            sup_norm(jn_truncated_seminorm(n, 10), NormedSpaceModel.lp(10, 2.0)).value
            for n in range(1, 11)
        ]
        assert all(a < b for a, b in zip(values, values[1:]))
        assert all(v < 1 for v in values)

    def test_truncation_arguments(self):
        with pytest.raises(PreconditionError):
            jn_truncated_seminorm(0, 3)
        with pytest.raises(PreconditionError):
            jn_truncated_seminorm(4, 3)

    def test_vertices_of_the_square(self):
        sup = sup_norm(SeminormModel.maxabs([[1, 1]]), NormedSpaceModel.linf(2))
        assert sup.method == "vertices"
        assert sup.value == Fraction(2)

    def test_spectral_norm_over_hilbert_space(self):
        sup = sup_norm(SeminormModel.opnorm(np.diag([3.0, 1.0])), NormedSpaceModel.lp(2, 2.0))
        assert sup.method == "spectral"
        assert sup.value == pytest.approx(3.0)

    def test_dimensions_must_match(self):
        with pytest.raises(StructuralError):
            sup_norm(SeminormModel.maxabs([[1, 0, 0]]), NormedSpaceModel.lp(2, 2.0))


class TestSupEqualsLip:
    def test_first_coordinate_over_the_square(self):
        ambient = NormedSpaceModel.linf(2)
        p = SeminormModel.maxabs([[1, 0]])
        norms = seminorm_norms(p, ambient)
        assert norms.sup_norm == 1
        assert norms.method == "vertices"
        assert norms.agree

    def test_grid_has_distinct_points(self):
        ambient = NormedSpaceModel.linf(2)
        space = seminorm_grid(SeminormModel.maxabs([[1, 0]]), ambient, samples=8)
        assert space.labels[:2] == ["0", "z"]
        off_diagonal = space.dist[~np.eye(space.size, dtype=bool)]
        assert off_diagonal.min() > 0

    @hsettings(max_examples=20, deadline=None)
    @given(seed=seeds, p=st.sampled_from([1.5, 2.0, 3.0]), dim=st.integers(2, 4))
    def test_random_maxabs_seminorms(self, seed, p, dim):
        rng = np.random.default_rng(seed)
        seminorm = SeminormModel.maxabs(rng.normal(size=(3, dim)))
        norms = seminorm_norms(seminorm, NormedSpaceModel.lp(dim, p))
        assert norms.agree, norms.slack


class TestAttainment:
    def test_truncated_seminorm_attains_everywhere(self):
        report = attainment_equivalences(jn_truncated_seminorm(5, 6), NormedSpaceModel.lp(6, 2.0))
        assert report.norm == Fraction(5, 6)
        assert report.agree
        assert not report.inconclusive
        assert [c.name for c in report.conditions] == ["i", "ii", "iii", "iv", "v"]

    def test_operator_seminorm_over_hilbert_space(self):
        p = SeminormModel.opnorm([[2.0, 1.0], [0.0, 1.0]])
        report = attainment_equivalences(p, NormedSpaceModel.lp(2, 2.0))
        assert report.agree
        payload = report.to_jsonable()
        assert payload["conditions"]["iv"]["holds"] is True

    def test_conditions_are_checked_independently(self, monkeypatch):
        # a sup search that stopped at e_2, where ‖T·‖ is 1 rather than 3
        stalled = SupNorm(1.0, np.array([0.0, 1.0]), "multistart")
        monkeypatch.setattr("src.services.seminorms.sup_norm", lambda p, ambient: stalled)
        p = SeminormModel.opnorm(np.diag([3.0, 1.0]))
        report = attainment_equivalences(p, NormedSpaceModel.lp(2, 2.0))
        holds = {c.name: c.holds for c in report.conditions}
        assert holds == {"i": True, "ii": True, "iii": False, "iv": False, "v": True}
        assert not report.agree
        assert report.inconclusive
        payload = report.to_jsonable()["conditions"]
        assert payload["iii"]["lip_norm"] > 2.5
        assert payload["v"]["value"] == pytest.approx(3.0)


class TestDistances:
    @pytest.mark.parametrize("n", range(1, 21))
    def test_uniform_distance_shrinks_while_lip_distance_does_not(self, n):
        gap = uniform_vs_lip_gap(n)
        assert gap.uniform_distance == Fraction(1, n)
        assert gap.lip_lower_bound == 1
        assert gap.uniform_numeric == pytest.approx(1 / n, abs=1e-9)

    def test_lip_distance_on_a_grid(self):
        p0, pn = gap_pair(4)
        ambient = NormedSpaceModel.linf(2)
        space = FinitePointedMetricSpace.from_coordinates(
            ambient, np.array([[0.0, 0.0], [0.0, 4.0], [1.0, 4.0]]), ["0", "x", "y"], 0
        )
        assert lip_distance(p0, pn, space) == pytest.approx(1.0)

    def test_lip_distance_needs_the_origin_as_base(self):
        p0, pn = gap_pair(2)
        ambient = NormedSpaceModel.linf(2)
        space = seminorm_grid(pn, ambient, samples=4)
        shifted = FinitePointedMetricSpace.from_coordinates(
            ambient, space.coords + 1.0, list(space.labels), space.base_index
        )
        with pytest.raises(PreconditionError):
            lip_distance(p0, pn, shifted)

    def test_uniform_distance_needs_polyhedral_data(self):
        p0, pn = gap_pair(3)
        with pytest.raises(PreconditionError):
            uniform_distance(p0, pn, NormedSpaceModel.lp(2, 2.0))

    def test_gap_needs_positive_n(self):
        with pytest.raises(PreconditionError):
            gap_pair(0)


class TestSeminormCorrection:
    def test_random_almost_attaining_pairs(self):
        rng = np.random.default_rng(0)
        delta, eps = 0.0025, 0.2
        for _ in range(50):
            p0 = random_unit_maxabs(3, 5, rng)
            x0 = near_attaining_point(p0, delta, rng)
            result = seminorm_bpb_construct(p0, x0, delta, eps)
            assert result.passed, [a.describe() for a in result.audits]
            assert result.p(result.x) == pytest.approx(1.0, abs=1e-9)
            assert result.distance_x <= math.sqrt(2 * delta) + 1e-12

    def test_attaining_point_is_kept(self):
        p0 = SeminormModel.maxabs([[0.5, 0.5], [1.0, 0.0]])
        x0 = np.array([1.0, 1.0])
        result = seminorm_bpb_construct(p0, x0, 0.005, 0.2)
        assert result.p is p0
        assert result.distance_x == 0.0
        assert result.distance_p == pytest.approx(0.0, abs=1e-9)
        assert result.passed

    def test_delta_must_be_small_against_eps(self):
        p0 = SeminormModel.maxabs([[1, 0]])
        with pytest.raises(PreconditionError):
            seminorm_bpb_construct(p0, [1.0, 0.0], 0.02, 0.2)

    def test_point_must_almost_attain(self):
        p0 = SeminormModel.maxabs([[1, 0]])
        with pytest.raises(PreconditionError):
            seminorm_bpb_construct(p0, [0.5, 1.0], 0.0025, 0.2)

    def test_only_maxabs_seminorms(self):
        with pytest.raises(PreconditionError):
            seminorm_bpb_construct(SeminormModel.opnorm(np.eye(2), "linf"), [1.0, 0.0], 0.01, 0.2)
