import numpy as np
import pytest
from hypothesis import strategies as st

from symprop import DiscreteDistribution


@st.composite
def simplex(draw, min_k=1, max_k=8):
    k = draw(st.integers(min_k, max_k))
    weights = draw(
        st.lists(
            st.floats(0.01, 1.0, allow_nan=False, allow_infinity=False),
            min_size=k,
            max_size=k,
        )
    )
    arr = np.asarray(weights, dtype=float)
    return DiscreteDistribution(arr / arr.sum())


@st.composite
def simplex_pair(draw, min_k=1, max_k=8):
    k = draw(st.integers(min_k, max_k))
    def one():
        weights = draw(
            st.lists(
                st.floats(0.01, 1.0, allow_nan=False, allow_infinity=False),
                min_size=k,
                max_size=k,
            )
        )
        arr = np.asarray(weights, dtype=float)
        return DiscreteDistribution(arr / arr.sum())
    return one(), one()


def random_distribution(rng, k, allow_zero=False):
    raw = rng.random(k)
    if allow_zero and k > 1 and rng.random() < 0.3:
        raw[rng.integers(k)] = 0.0
    return DiscreteDistribution(raw / raw.sum())


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
