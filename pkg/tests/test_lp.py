import numpy as np
import pytest
from hypothesis import given, settings as hsettings
from scipy import sparse

from src.core.config import settings
from src.core.errors import LpInfeasibleError, LpUnboundedError
from src.core.lp import LinearProgram, solve_lp, tableau_cells
from tests.helpers import seeds

BACKENDS = ["simplex", "highs"]


def textbook() -> LinearProgram:
    # max x + y  s.t.  x + 2y <= 4,  3x + y <= 6,  x, y >= 0
    return LinearProgram(
        c=np.array([-1.0, -1.0]),
        a_ub=np.array([[1.0, 2.0], [3.0, 1.0]]),
        b_ub=np.array([4.0, 6.0]),
    )


@pytest.mark.parametrize("backend", BACKENDS)
def test_textbook_optimum(backend):
    solution = solve_lp(textbook(), backend)
    assert solution.backend == backend
    assert np.allclose(solution.x, [1.6, 1.2], atol=1e-9)
    assert solution.objective == pytest.approx(-2.8, abs=1e-9)


@pytest.mark.parametrize("backend", BACKENDS)
def test_infeasible_problem_raises(backend):
    problem = LinearProgram(c=np.array([1.0]), a_ub=np.array([[1.0]]), b_ub=np.array([-1.0]))
    with pytest.raises(LpInfeasibleError):
        solve_lp(problem, backend)


def test_unbounded_problem_raises():
    problem = LinearProgram(c=np.array([-1.0]), a_ub=np.array([[-1.0]]), b_ub=np.array([0.0]))
    with pytest.raises(LpUnboundedError):
        solve_lp(problem, "simplex")


@pytest.mark.parametrize("backend", BACKENDS)
def test_free_variable_with_equality(backend):
    # min x  s.t.  x + y = -2,  0 <= y <= 3,  x free
    problem = LinearProgram(
        c=np.array([1.0, 0.0]),
        a_eq=np.array([[1.0, 1.0]]),
        b_eq=np.array([-2.0]),
        bounds=[(None, None), (0.0, 3.0)],
    )
    solution = solve_lp(problem, backend)
    assert np.allclose(solution.x, [-5.0, 3.0], atol=1e-9)
    assert solution.objective == pytest.approx(-5.0)


def test_simplex_accepts_sparse_rows():
    base = textbook()
    problem = LinearProgram(c=base.c, a_ub=sparse.csr_matrix(base.a_ub), b_ub=base.b_ub)
    assert solve_lp(problem, "simplex").objective == pytest.approx(-2.8, abs=1e-9)


def test_auto_switches_to_highs_above_the_cell_limit(monkeypatch):
    assert tableau_cells(textbook()) > 1
    monkeypatch.setattr(settings, "simplex_max_cells", 1)
    assert solve_lp(textbook(), "auto").backend == "highs"


def test_auto_uses_simplex_for_small_problems(monkeypatch):
    monkeypatch.setattr(settings, "lp_backend", "auto")
    assert solve_lp(textbook()).backend == "simplex"


@hsettings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_backends_agree_on_random_box_problems(seed):
    rng = np.random.default_rng(seed)
    n, m = rng.integers(2, 6), rng.integers(1, 6)
    problem = LinearProgram(
        c=rng.normal(size=n),
        a_ub=rng.uniform(-1.0, 1.0, size=(m, n)),
        b_ub=rng.uniform(0.1, 1.0, size=m),
        bounds=[(0.0, 1.0)] * n,
    )
    simplex = solve_lp(problem, "simplex")
    highs = solve_lp(problem, "highs")
    assert simplex.objective == pytest.approx(highs.objective, abs=1e-7)
    assert np.all(problem.a_ub @ simplex.x <= problem.b_ub + 1e-9)
