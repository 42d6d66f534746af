import numpy as np
from hypothesis import strategies as st

from src.services.lipfunc import LipFunctional
from src.services.metric_core import FinitePointedMetricSpace
from src.services.normed import NormedSpaceModel

seeds = st.integers(min_value=0, max_value=2**16)


def random_space(seed: int, size: int, dim: int = 2, p: float = 2.0) -> FinitePointedMetricSpace:
    """Random points of ℓ_p^dim with the origin as base point."""
    rng = np.random.default_rng(seed)
    coords = rng.uniform(-1.0, 1.0, size=(size, dim))
    coords[0] = 0.0
    return FinitePointedMetricSpace.from_coordinates(NormedSpaceModel.lp(dim, p), coords)


def random_functional(space: FinitePointedMetricSpace, seed: int) -> LipFunctional:
    """Random functional of norm one."""
    rng = np.random.default_rng(seed + 1)
    values = rng.normal(size=space.size)
    f = LipFunctional.from_values(space, values, normalize=True)
    return f / float(f.norm)
