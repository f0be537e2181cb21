import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from nctorus.lattice import SkewMatrix

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DENOMS = (1, 2, 3, 4, 5, 6, 8)


@st.composite
def rational_theta(draw, n=None, denoms=DENOMS):
    if n is None:
        n = draw(st.integers(2, 4))
    upper = [Fraction(draw(st.integers(-7, 7)), draw(st.sampled_from(denoms)))
             for _ in range(n * (n - 1) // 2)]
    return SkewMatrix.from_upper(n, upper)


def lattice_vec(n, bound=5):
    return st.lists(st.integers(-bound, bound), min_size=n, max_size=n).map(tuple)


def random_rational_theta(rng: random.Random, n: int, denoms=DENOMS) -> SkewMatrix:
    upper = [Fraction(rng.randint(-7, 7), rng.choice(denoms)) for _ in range(n * (n - 1) // 2)]
    return SkewMatrix.from_upper(n, upper)


@pytest.fixture
def np_rng():
    return np.random.default_rng(20261015)
