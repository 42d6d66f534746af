import math

import numpy as np
import pytest

from src.core.errors import GridTooCoarseError, NotUniformlyConvexError, PreconditionError
from src.services.metric_core import build_grid_space
from src.services.normed import NormedSpaceModel
from src.services.ucx import (
    bump_functional,
    closed_form_modulus,
    delta_for_eps,
    duality_map,
    linear_functional,
    modulus_convexity,
    segment_points,
    select_tilde_pair,
    slice_diameter_check,
)

L2 = NormedSpaceModel.lp(2, 2.0)


class TestModulus:
    @pytest.mark.parametrize("eps", [0.25, 0.5, 1.0, 1.5])
    def test_hilbert_plane_matches_the_closed_form(self, eps):
        estimate = modulus_convexity(L2, eps)
        assert estimate.method == "slsqp"
        assert estimate.value == pytest.approx(1.0 - math.sqrt(1.0 - eps**2 / 4.0), abs=1e-6)
        assert estimate.best == estimate.closed_form

    def test_closed_form_for_large_exponents(self):
        assert closed_form_modulus(4.0, 1.0) == pytest.approx(1.0 - (15.0 / 16.0) ** 0.25)
        assert closed_form_modulus(1.5, 1.0) is None

    def test_polyhedral_norms_are_rejected(self):
        with pytest.raises(NotUniformlyConvexError):
            modulus_convexity(NormedSpaceModel.linf(2), 0.5)

    def test_eps_outside_the_range(self):
        with pytest.raises(PreconditionError):
            modulus_convexity(L2, 2.5)

    def test_delta_for_eps_meets_both_constraints(self):
        eps = 0.25
        delta = delta_for_eps(L2, eps)
        modulus = closed_form_modulus(2.0, eps)
        assert delta < eps**2 / 2
        assert math.sqrt(2 * delta) < modulus / 2

    def test_delta_for_eps_at_one_half(self):
        modulus = 1.0 - math.sqrt(1.0 - 1.0 / 16.0)
        delta = delta_for_eps(L2, 0.5)
        assert delta == pytest.approx((modulus / 2) ** 2 / 2 * (1 - 1e-6), rel=1e-9)
        assert delta == pytest.approx(1.2606e-4, rel=1e-3)

    @pytest.mark.parametrize("eps", [0.0, 0.51, 1.0])
    def test_delta_for_eps_range(self, eps):
        with pytest.raises(PreconditionError):
            delta_for_eps(L2, eps)


class TestSlices:
    def test_slice_at_the_modulus_is_thinner_than_eps(self):
        eps = 0.5
        delta = closed_form_modulus(2.0, eps)
        check = slice_diameter_check(L2, [1.0, 0.0], delta, 10_000, seed=0, eps=eps)
        assert check.accepted > 0
        assert check.bound_satisfied
        assert check.max_distance < eps

    def test_slice_functional_must_have_unit_norm(self):
        with pytest.raises(PreconditionError):
            slice_diameter_check(L2, [2.0, 0.0], 0.1)

    def test_duality_map_norms_the_vector(self):
        model = NormedSpaceModel.lp(3, 3.0)
        u = np.array([1.0, -2.0, 0.5])
        u = u / model.norm(u)
        phi = duality_map(model, u)
        assert phi @ u == pytest.approx(1.0)
        assert model.dual_norm(phi) == pytest.approx(1.0)

    def test_duality_map_needs_a_unit_vector(self):
        with pytest.raises(PreconditionError):
            duality_map(L2, [2.0, 0.0])


class TestTildePair:
    @staticmethod
    def segment_space(resolution):
        return build_grid_space(L2, [[1.0, 0.0], [0.75, 0.0]], resolution, segments=[(1, 2)])

    def test_segment_points_are_ordered_from_x(self):
        space = self.segment_space(8)
        x, y = space.index_of("a1"), space.index_of("a2")
        points = segment_points(space, x, y)
        assert points[0] == (0.0, x)
        assert points[-1][1] == y
        assert len(points) == 9

    def test_short_sub_pair_is_selected(self):
        space = self.segment_space(64)
        f = linear_functional(space, [1.0, 0.0])
        x, y = space.index_of("a1"), space.index_of("a2")
        tilde = select_tilde_pair(f, x, y, delta=0.01, eps=0.25)
        assert tilde.separation < 0.25 * 0.25
        assert tilde.quotient > 0.99

        bump = bump_functional(space, tilde.x, tilde.y)
        assert float(bump.norm) == pytest.approx(1.0)
        assert bump.quotient(tilde.x, tilde.y) == pytest.approx(1.0)

    def test_coarse_segment_reports_the_needed_resolution(self):
        space = self.segment_space(1)
        f = linear_functional(space, [1.0, 0.0])
        x, y = space.index_of("a1"), space.index_of("a2")
        with pytest.raises(GridTooCoarseError) as info:
            select_tilde_pair(f, x, y, delta=0.01, eps=0.25)
        assert info.value.needed_resolution > 1


class TestBump:
    @pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
    @pytest.mark.parametrize("offset", [10, 48, 90])
    def test_bump_has_norm_one_on_a_segment_grid(self, p, offset):
        model = NormedSpaceModel.lp(2, p)
        space = build_grid_space(model, [[1.0, 0.5], [0.75, 0.25]], 99, segments=[(1, 2)])
        assert len(segment_points(space, space.index_of("a1"), space.index_of("a2"))) == 100
        x_tilde = space.index_of(f"s1-2:{offset}")
        y_tilde = space.index_of(f"s1-2:{offset + 3}")
        bump = bump_functional(space, x_tilde, y_tilde)
        assert float(bump.norm) <= 1.0 + 1e-9
        assert float(bump.norm) == pytest.approx(1.0, abs=1e-9)
        assert bump.quotient(x_tilde, y_tilde) == pytest.approx(1.0, abs=1e-9)
        outside = space.dist[x_tilde] >= space.dist[x_tilde, y_tilde]
        assert np.all(bump.values[outside] == 0.0)
