# Licensed under the MIT license

import asyncio
import os
from functools import wraps
from unittest import skipUnless

import numpy as np
from hypothesis import strategies as st

from cpsis.degrees import build_distribution
from cpsis.system import SystemForm
from cpsis.types import DegreeDistribution, EpidemicParams

RUN_PERF_TESTS = bool(os.environ.get("PERF_TESTS", False))

TRIMODAL = [(2, 850), (3, 100), (4, 50)]
BIMODAL = [(2, 500), (4, 500)]
REGULAR4 = [(4, 1000)]

TRIMODAL_TAU_C = 22 / 29
FIG1_INFECTED = (90.0, 50.0, 10.0)
FIG2_INFECTED = [(90.0, 50.0, 10.0), (425.0, 50.0, 25.0), (1.0, 1.0, 1.0)]


def trimodal() -> DegreeDistribution:
    return build_distribution(TRIMODAL)


def bimodal() -> DegreeDistribution:
    return build_distribution(BIMODAL)


def regular4() -> DegreeDistribution:
    return build_distribution(REGULAR4)


class LinearDecay(SystemForm):
    """y' = -rate * y, for checking the integrator against a known solution."""

    def __init__(self, rate: float = 1.0, size: int = 1) -> None:
        super().__init__(EpidemicParams(0.0, 1.0), build_distribution([(2, 1)]))
        self.rate = rate
        self.size = size

    @property
    def dimension(self) -> int:
        return self.size

    def pack(self, state):
        return np.asarray(state, dtype=float)

    def unpack(self, y):
        return y

    def __call__(self, y):
        return -self.rate * y

    def to_theta(self, states):
        raise NotImplementedError


@st.composite
def degree_pairs(draw, max_classes=6, max_degree=20, max_count=10_000):
    """Valid (degree, count) pairs: distinct degrees, not all equal to 1."""
    table = draw(
        st.dictionaries(
            st.integers(1, max_degree),
            st.integers(1, max_count),
            min_size=1,
            max_size=max_classes,
        ).filter(lambda table: any(degree > 1 for degree in table))
    )
    return sorted(table.items())


def random_distribution(rng: np.random.Generator, max_classes=5) -> DegreeDistribution:
    L = int(rng.integers(1, max_classes + 1))
    degrees = rng.choice(np.arange(2, 13), size=L, replace=False)
    counts = rng.integers(20, 2000, size=L)
    return build_distribution(zip(degrees.tolist(), counts.tolist()))


# module level helpers, picklable by the spawn start method


def mapper(value):
    return value * 2


def raise_fn():
    raise RuntimeError("raising")


def async_test(fn):
    @wraps(fn)
    def wrapper(*args, **kwargs):
        return asyncio.run(fn(*args, **kwargs))

    return wrapper


def perf_test(fn):
    @wraps(fn)
    @skipUnless(RUN_PERF_TESTS, "Performance test")
    def wrapper(*args, **kwargs):
        return fn(*args, **kwargs)

    return wrapper
