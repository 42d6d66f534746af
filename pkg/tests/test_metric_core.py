from fractions import Fraction

import numpy as np
import pytest

from src.core.errors import PreconditionError, StructuralError
from src.models.schemas import SpaceDocument
from src.services.lipfunc import LipFunctional
from src.services.metric_core import (
    FinitePointedMetricSpace,
    NeighborhoodSpec,
    PointRecord,
    Violation,
    betweenness_triples,
    build_grid_space,
    locality_witness,
    quotient_matrix,
    space_from_document,
    validate_metric,
)
from src.services.normed import NormedSpaceModel


class TestValidateMetric:
    def test_line_distances_are_a_metric(self, line_space):
        assert validate_metric(line_space.exact_dist).ok

    def test_exact_triangle_violation_is_reported(self):
        report = validate_metric([[0, 1, 3], [1, 0, 1], [3, 1, 0]])
        assert report.violations == [Violation("triangle", (0, 1, 2), Fraction(1))]

    def test_asymmetry_is_reported(self):
        report = validate_metric(np.array([[0.0, 1.0], [1.5, 0.0]]))
        assert [v.axiom for v in report.violations] == ["symmetry"]

    def test_nonpositive_distance_between_distinct_points(self):
        report = validate_metric([[0, 0], [0, 0]])
        assert [v.axiom for v in report.violations] == ["positivity"]

    def test_non_square_matrix_raises(self):
        with pytest.raises(StructuralError):
            validate_metric(np.zeros((2, 3)))


class TestSpaces:
    def test_on_line_is_exact_with_zero_as_base(self):
        space = FinitePointedMetricSpace.on_line([2, 0, Fraction(1, 2)])
        assert space.exact
        assert space.base_index == 1
        assert space.exact_dist[0][2] == Fraction(3, 2)

    def test_on_line_requires_the_origin(self):
        with pytest.raises(PreconditionError):
            FinitePointedMetricSpace.on_line([1, 2])

    def test_asymmetric_matrix_is_rejected(self):
        with pytest.raises(PreconditionError):
            FinitePointedMetricSpace(
                points=(PointRecord("0"), PointRecord("1")),
                base_index=0,
                dist=np.array([[0.0, 1.0], [2.0, 0.0]]),
            )

    def test_distinct_points_need_a_positive_distance(self):
        with pytest.raises(PreconditionError):
            FinitePointedMetricSpace(
                points=(PointRecord("0"), PointRecord("a"), PointRecord("b")),
                base_index=0,
                dist=np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]),
            )
        with pytest.raises(PreconditionError):
            FinitePointedMetricSpace.from_coordinates(
                NormedSpaceModel.lp(2, 2.0), [[0.0, 0.0], [1.0, 1.0], [1.0, 1.0]]
            )

    def test_subspace_keeps_labels_and_base(self, line_space):
        sub = line_space.subspace([3, 0, 1])
        assert sub.labels == ["0", "1", "3"]
        assert sub.base_index == 0
        assert sub.exact_dist[1][2] == 2

    def test_subspace_without_base_raises(self, line_space):
        with pytest.raises(StructuralError):
            line_space.subspace([1, 2])

    def test_resolve_by_label_and_index(self, line_space):
        assert line_space.resolve("2") == 2
        assert line_space.resolve(3) == 3
        with pytest.raises(StructuralError):
            line_space.resolve("7")

    def test_document_without_distances_uses_the_model(self):
        doc = SpaceDocument.model_validate(
            {
                "points": [{"label": "o", "coord": [0, 0]}, {"label": "p", "coord": [3, 4]}],
                "model": {"kind": "lp", "dim": 2, "p": 2},
            }
        )
        space = space_from_document(doc)
        assert space.dist[0, 1] == pytest.approx(5.0)


class TestGridBuilder:
    def test_segment_points_are_deduplicated(self):
        space = build_grid_space(NormedSpaceModel.lp(2, 2.0), [[1.0, 0.0]], 4)
        assert space.labels == ["0", "a1", "s0-1:1", "s0-1:2", "s0-1:3"]
        assert space.base_index == 0

    def test_neighborhoods_are_seeded(self):
        model = NormedSpaceModel.lp(2, 3.0)
        spec = NeighborhoodSpec(radius=0.1, count=5)
        first = build_grid_space(model, [[0.5, 0.5]], 2, spec, seed=3)
        second = build_grid_space(model, [[0.5, 0.5]], 2, spec, seed=3)
        assert np.array_equal(first.coords, second.coords)
        assert first.size == 2 + 1 + 5

    def test_wrong_anchor_dimension_raises(self):
        with pytest.raises(StructuralError):
            build_grid_space(NormedSpaceModel.lp(2, 2.0), [[1.0, 0.0, 0.0]], 2)


class TestBetweenness:
    def test_line_triples(self):
        space = FinitePointedMetricSpace.on_line([0, 1, 2])
        triples = betweenness_triples(space)
        assert [(t.x, t.z, t.y) for t in triples] == [(0, 1, 2)]
        assert triples[0].defect == 0

    def test_sup_norm_segments_are_not_unique(self):
        space = FinitePointedMetricSpace.from_coordinates(
            NormedSpaceModel.linf(2), [[0, 0], [2, 0], [1, 1], [1, -1]]
        )
        triples = betweenness_triples(space)
        assert {(t.x, t.z, t.y) for t in triples if (t.x, t.y) == (0, 1)} == {(0, 2, 1), (0, 3, 1)}

    @pytest.mark.parametrize("seed", range(50))
    def test_collinear_points_in_strictly_convex_norms(self, seed):
        rng = np.random.default_rng(seed)
        dim = int(rng.integers(2, 5))
        model = NormedSpaceModel.lp(dim, float(rng.choice([1.5, 2.0, 3.0, 4.0])))
        start, direction = rng.normal(size=(2, dim))
        steps = np.cumsum(rng.uniform(0.2, 1.0, size=3))
        coords = [np.zeros(dim)] + [start + t * direction for t in steps]
        space = FinitePointedMetricSpace.from_coordinates(model, coords)
        assert [(t.x, t.z, t.y) for t in betweenness_triples(space)] == [(1, 2, 3)]


class TestQuotientsAndLocality:
    def test_quotient_matrix_diagonal(self, float_line):
        q = quotient_matrix(float_line.dist, np.array([0.0, 1.0, 1.5, 3.0]))
        assert np.all(np.diag(q) == -np.inf)
        assert q[3, 2] == pytest.approx(1.5)

    def test_locality_witness_on_a_fine_grid(self, fine_line):
        f = LipFunctional(fine_line, fine_line.coords[:, 0].copy())
        x, y = locality_witness(fine_line, f, 0.05)
        assert fine_line.dist[x, y] < 0.05
        assert f.quotient(x, y) == pytest.approx(1.0)

    def test_locality_witness_missing_below_the_mesh(self, fine_line):
        f = LipFunctional(fine_line, fine_line.coords[:, 0].copy())
        assert locality_witness(fine_line, f, 0.005) is None

    def test_locality_needs_a_positive_norm(self, fine_line):
        with pytest.raises(PreconditionError):
            locality_witness(fine_line, LipFunctional.zeros(fine_line), 0.1)
