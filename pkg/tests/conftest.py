import numpy as np
import pytest
from hypothesis import strategies as st

from thermo_reach.core import GibbsContext

P1 = np.array([0.35, 0.55, 0.1])
P2 = np.array([0.7, 0.2, 0.1])
ENERGIES = (0.0, 0.2, 0.5)


@pytest.fixture
def ctx3():
    return GibbsContext.from_energies(ENERGIES)


@st.composite
def instances(draw, min_d=2, max_d=5):
    """(state, context) with a strictly positive state and sorted energies in [0, 1]."""
    d = draw(st.integers(min_d, max_d))
    raw = draw(st.lists(st.floats(0.01, 1.0), min_size=d, max_size=d))
    e = draw(st.lists(st.floats(0.0, 1.0), min_size=d, max_size=d))
    p = np.asarray(raw) / np.sum(raw)
    return p, GibbsContext.from_energies(sorted(e))


def rng_for(*key):
    return np.random.default_rng(list(key))
