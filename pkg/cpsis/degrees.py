# Licensed under the MIT license

"""
Degree distributions, their moments, the epidemic threshold and the
structural assumptions used by the global stability certificate.
"""

import logging
import math
import operator
from typing import Iterable, List, Tuple

from .types import (
    AssumptionReport,
    DegenerateDistribution,
    DegreeDistribution,
    DuplicateDegree,
    EmptyInput,
    EpidemicParams,
    InvalidParameter,
    MalformedDegrees,
    Moments,
    NonPositiveEntry,
)

A1_FACTOR = 2.0 + math.sqrt(2.0)

log = logging.getLogger(__name__)


def _positive_int(value: object, what: str) -> int:
    try:
        number = operator.index(value)  # type: ignore
    except TypeError:
        if isinstance(value, float) and value.is_integer():
            number = int(value)
        else:
            raise NonPositiveEntry(f"{what} must be an integer, got {value!r}")

    if number < 1:
        raise NonPositiveEntry(f"{what} must be positive, got {number}")
    return number


def compute_moments(degrees: Tuple[int, ...], counts: Tuple[int, ...]) -> Moments:
    """Accumulate in integers, divide once."""
    total = sum(counts)
    s1 = sum(n * c for n, c in zip(degrees, counts))
    s2 = sum(n * n * c for n, c in zip(degrees, counts))
    s3 = sum(n * n * n * c for n, c in zip(degrees, counts))
    return Moments(n=s1 / total, n2=s2 / total, n3=s3 / total, nN=float(s1))


def build_distribution(pairs: Iterable[Tuple[int, int]]) -> DegreeDistribution:
    """Validate (degree, count) pairs and return a sorted distribution."""
    entries: List[Tuple[int, int]] = []
    try:
        for entry in pairs:
            degree, count = entry
            entries.append(
                (_positive_int(degree, "degree"), _positive_int(count, "count"))
            )
    except (TypeError, ValueError):
        raise MalformedDegrees(f"expected (degree, count) pairs, got {pairs!r}")

    if not entries:
        raise EmptyInput("degree distribution needs at least one class")

    entries.sort()
    degrees = tuple(d for d, _ in entries)
    counts = tuple(c for _, c in entries)
    for prev, cur in zip(degrees, degrees[1:]):
        if prev == cur:
            raise DuplicateDegree(f"degree {cur} listed more than once")

    if all(d == 1 for d in degrees):
        raise DegenerateDistribution(
            "all degrees equal 1: <n^2> = <n> and the threshold is undefined"
        )

    dist = DegreeDistribution(degrees, counts, compute_moments(degrees, counts))
    log.debug(f"built distribution L={dist.L} N={dist.N} moments={dist.moments}")
    return dist


def parse_degrees(text: str) -> List[Tuple[int, int]]:
    """Parse `degree:count` tokens separated by commas, eg `2:850,3:100`."""
    pairs = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        parts = token.split(":")
        if len(parts) != 2:
            raise MalformedDegrees(f"expected degree:count, got {token!r}")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise MalformedDegrees(f"non-integer entry in {token!r}")

    if not pairs:
        raise EmptyInput("no degree:count tokens given")
    return pairs


def moments(dist: DegreeDistribution) -> Moments:
    return dist.moments


def _check_gamma(gamma: float) -> None:
    if not gamma > 0 or not math.isfinite(gamma):
        raise InvalidParameter(f"recovery rate gamma must be positive, got {gamma}")


def epidemic_params(tau: float, gamma: float) -> EpidemicParams:
    """Validated (tau, gamma) pair."""
    _check_gamma(gamma)
    if not tau >= 0 or not math.isfinite(tau):
        raise InvalidParameter(
            f"infection rate tau must be nonnegative, got {tau}"
        )
    return EpidemicParams(float(tau), float(gamma))


def tau_c(dist: DegreeDistribution, gamma: float) -> float:
    """Epidemic threshold gamma <n> / (<n^2> - <n>)."""
    _check_gamma(gamma)
    return gamma * threshold_ratio(dist)


def threshold_ratio(dist: DegreeDistribution) -> float:
    """a = <n> / (<n^2> - <n>), so that tau_c = gamma * a."""
    m = dist.moments
    if not m.n2 > m.n:
        raise DegenerateDistribution("<n^2> must exceed <n>")
    return m.n / (m.n2 - m.n)


def check_assumptions(dist: DegreeDistribution) -> AssumptionReport:
    m = dist.moments
    excess = m.n2 - m.n
    return AssumptionReport(
        a1_holds=A1_FACTOR * m.n <= m.n2,
        a2_holds=dist.L == 2,
        a=m.n / excess,
        B=m.n2 / excess,
    )
