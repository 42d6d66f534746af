import pytest

from src.services.metric_core import FinitePointedMetricSpace
from src.services.normed import NormedSpaceModel


@pytest.fixture
def line_space() -> FinitePointedMetricSpace:
    """{0, 1, 2, 3} with exact distances."""
    return FinitePointedMetricSpace.on_line([0, 1, 2, 3])


@pytest.fixture
def float_line() -> FinitePointedMetricSpace:
    return FinitePointedMetricSpace.on_line([0.0, 1.0, 2.0, 3.0])


@pytest.fixture
def fine_line() -> FinitePointedMetricSpace:
    grid = [k / 100 for k in range(101)]
    return FinitePointedMetricSpace.on_line(grid, [f"{t:.2f}" for t in grid])


@pytest.fixture
def square_space() -> FinitePointedMetricSpace:
    return FinitePointedMetricSpace.from_coordinates(
        NormedSpaceModel.linf(2), [[0, 0], [1, 0], [0, 1], [1, 1]]
    )
