from fractions import Fraction

import numpy as np
import pytest

from src.core.errors import NotUniformlyConvexError, PreconditionError, StructuralError
from src.services.normed import NormedSpaceModel, distance_to_segment
from src.utils.serialization import dumps, format_fraction, parse_number, to_jsonable


class TestModels:
    def test_lp_norm_and_conjugate(self):
        model = NormedSpaceModel.lp(2, 3.0)
        assert model.q == pytest.approx(1.5)
        assert model.norm([1.0, 1.0]) == pytest.approx(2 ** (1 / 3))

    def test_exponent_range(self):
        with pytest.raises(PreconditionError):
            NormedSpaceModel.lp(2, 1.0)

    def test_l1_vertices_and_dual(self):
        model = NormedSpaceModel.l1(2)
        assert model.norm([0.5, -0.5]) == pytest.approx(1.0)
        vertices = {tuple(np.round(v, 12)) for v in model.extreme_points()}
        assert vertices == {(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)}
        assert model.dual_norm([3.0, -1.0]) == pytest.approx(3.0)

    def test_linf_dual_is_l1(self):
        model = NormedSpaceModel.linf(3)
        assert len(model.extreme_points()) == 8
        assert model.dual_norm([1.0, -2.0, 0.5]) == pytest.approx(3.5)

    def test_polyhedral_generators_must_span(self):
        with pytest.raises(StructuralError):
            NormedSpaceModel.polyhedral([[1.0, 0.0], [2.0, 0.0]])

    def test_polyhedral_models_are_not_uniformly_convex(self):
        model = NormedSpaceModel.linf(2)
        assert not model.uniformly_convex
        with pytest.raises(NotUniformlyConvexError):
            model.dual_map([1.0, 0.0])
        with pytest.raises(PreconditionError):
            NormedSpaceModel.lp(2, 2.0).extreme_points()

    def test_dual_map(self):
        model = NormedSpaceModel.lp(2, 4.0)
        u = np.array([1.0, 2.0])
        phi = model.dual_map(u)
        assert model.dual_norm(phi) == pytest.approx(1.0)
        assert phi @ u == pytest.approx(model.norm(u))
        with pytest.raises(PreconditionError):
            model.dual_map([0.0, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(StructuralError):
            NormedSpaceModel.lp(2, 2.0).norm([1.0, 2.0, 3.0])

    @pytest.mark.parametrize(
        "model", [NormedSpaceModel.lp(3, 1.5), NormedSpaceModel.linf(3), NormedSpaceModel.l1(3)]
    )
    def test_spot_check(self, model):
        assert model.spot_check(np.random.default_rng(0))

    def test_distance_to_segment(self):
        model = NormedSpaceModel.lp(2, 2.0)
        assert distance_to_segment(model, [0.0, 1.0], [-1.0, 0.0], [1.0, 0.0]) == pytest.approx(1.0)
        assert distance_to_segment(model, [3.0, 0.0], [-1.0, 0.0], [1.0, 0.0]) == pytest.approx(2.0)
        assert distance_to_segment(model, [0.0, 2.0], [1.0, 0.0], [1.0, 0.0]) == pytest.approx(
            np.sqrt(5.0)
        )


class TestSerialization:
    def test_numbers(self):
        assert parse_number("3/8") == Fraction(3, 8)
        assert parse_number(2) == 2.0
        assert format_fraction(Fraction(6, 4)) == "3/2"

    def test_json_values(self):
        payload = to_jsonable(
            {
                "q": Fraction(1, 3),
                "v": np.array([1.0, np.inf]),
                "n": np.int64(4),
                "b": np.bool_(True),
            }
        )
        assert payload == {"q": "1/3", "v": [1.0, "inf"], "n": 4, "b": True}

    def test_dumps_sorts_keys(self):
        assert dumps({"b": 1, "a": Fraction(1, 2)}, indent=None) == '{"a": "1/2", "b": 1}'
