import numpy as np
import pytest

from ergmkit.rng import make_rng


@pytest.fixture
def rng():
    return make_rng(20260810, 0)


def rng_for(tag: int) -> np.random.Generator:
    """Independent deterministic stream per test site."""
    return make_rng(20260810, tag)
