import numpy as np
import pytest
from hypothesis import assume
from hypothesis import strategies as st

from nominal_uq import Pmf

_unit_floats = st.floats(min_value=0.0, max_value=1.0,
                         allow_nan=False, allow_infinity=False)


@st.composite
def pmfs(draw, min_classes=2, max_classes=8):
    """Valid PMFs of varying K, built by renormalizing raw unit floats."""
    k = draw(st.integers(min_classes, max_classes))
    raw = draw(st.lists(_unit_floats, min_size=k, max_size=k))
    assume(sum(raw) > 1e-9)
    return Pmf(raw, policy="renormalize")


def dirichlet_pmfs(rng, count, n_classes, alpha=1.0):
    """A (count, n_classes) matrix of PMFs drawn flat on the simplex."""
    return rng.dirichlet(np.full(n_classes, alpha), size=count)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
