import numpy as np
import pytest
from hypothesis import given, settings as hsettings
from hypothesis import strategies as st

from src.core.config import settings
from src.core.errors import PreconditionError, StructuralError
from src.services.freespace import (
    FreeVector,
    decompose_in_convW,
    duality_gap,
    free_norm,
    free_norm_primal,
    molecules,
    pairing,
    supporting_functional,
)
from src.services.lipfunc import LipFunctional
from tests.helpers import random_space, seeds


@hsettings(max_examples=25, deadline=None)
@given(seed=seeds, size=st.integers(min_value=2, max_value=8))
def test_dual_and_primal_norms_agree(seed, size):
    space = random_space(seed, size)
    weights = np.random.default_rng(seed).normal(size=size)
    z = FreeVector.from_point_weights(space, weights)
    assert duality_gap(z) <= settings.duality_tolerance


@hsettings(max_examples=10, deadline=None)
@given(seed=seeds)
def test_point_differences_are_isometric(seed):
    space = random_space(seed, 5, p=3.0)
    for x in range(space.size):
        for y in range(x + 1, space.size):
            z = FreeVector.point(space, x) - FreeVector.point(space, y)
            assert free_norm(z).norm == pytest.approx(space.dist[x, y], abs=1e-9)


def test_every_molecule_has_norm_one(square_space):
    for mol in molecules(square_space):
        assert free_norm(mol.vector).norm == pytest.approx(1.0, abs=1e-9)


def test_pairing_with_a_molecule_is_the_quotient(float_line):
    f = LipFunctional(float_line, np.array([0.0, 0.5, 2.0, 1.0]))
    for mol in molecules(float_line):
        assert pairing(f, mol.vector) == pytest.approx(f.quotient(*mol.pair))


def test_molecule_needs_distinct_points(float_line):
    with pytest.raises(PreconditionError):
        FreeVector.molecule(float_line, 1, 1)


def test_vectors_on_different_spaces_do_not_mix(float_line, square_space):
    with pytest.raises(StructuralError):
        FreeVector.point(float_line, 1) + FreeVector.point(square_space, 1)


def test_dual_optimum_supports_the_vector():
    space = random_space(11, 6)
    z = FreeVector.from_point_weights(space, [0.0, 1.0, -2.0, 0.5, 0.0, 1.5])
    g = supporting_functional(z)
    assert float(g.norm) == pytest.approx(1.0, abs=1e-9)
    assert pairing(g, z) == pytest.approx(free_norm(z).norm, abs=1e-7)


def test_primal_transport_reproduces_the_norm():
    space = random_space(5, 5)
    z = FreeVector.point(space, 1) * 2.0 - FreeVector.point(space, 3)
    primal = free_norm_primal(z)
    cost = sum(amount * space.dist[x, y] for x, y, amount in primal.transport)
    assert cost == pytest.approx(primal.norm, abs=1e-9)


class TestDecomposition:
    def test_convex_combination_is_recovered(self):
        space = random_space(3, 5)
        z = FreeVector.molecule(space, 1, 0) * 0.5 + FreeVector.molecule(space, 2, 1) * 0.3
        decomposition = decompose_in_convW(z)
        assert decomposition.residual <= 1e-9
        assert decomposition.total <= 0.8 + 1e-9
        assert decomposition.total == pytest.approx(free_norm(z).norm, abs=1e-7)
        assert all(w > 0 for w in decomposition.weights.values())

    def test_outside_the_unit_ball_raises(self):
        space = random_space(3, 5)
        with pytest.raises(PreconditionError):
            decompose_in_convW(FreeVector.molecule(space, 1, 0) * 2.0)

    def test_zero_vector(self, float_line):
        decomposition = decompose_in_convW(FreeVector.zero(float_line))
        assert decomposition.weights == {}
        assert decomposition.total == 0.0
