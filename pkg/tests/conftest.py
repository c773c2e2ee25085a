
import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("ci")


def brute_subadditive(vals, m):
    # all pairs, including overlapping ones
    n = 1 << m
    return all(vals[S | T] <= vals[S] + vals[T] for S in range(n) for T in range(n))


def brute_monotone(vals, m):
    n = 1 << m
    return all(vals[S] <= vals[T] for T in range(n) for S in range(n) if S & T == S)


def mask(*items):
    """1-based item labels to a bitmask."""
    out = 0
    for i in items:
        out |= 1 << (i - 1)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
