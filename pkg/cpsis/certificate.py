# Licensed under the MIT license

"""
Global stability certificate for the disease-free state below threshold.

If theta(t) <= x eventually, then eventually

    [S_l] >= N_l / (1 + a n_l x),   nN / S_s <= 1 + B x,   D / S_s <= b(x),

and theta is then eventually below any z above z*(x), the root in (0, 1) of

    p_x(z) = gamma (1 + B x)(1 - z) - gamma (1 + z) + gamma a (b(x) - 2) z (1 - z).

Iterating x <- (x + z*(x)) / 2 from x = 1 drives the bound on theta to zero
whenever z*(x) < x, which holds for either of two degree assumptions:
A1, (2 + sqrt 2) <n> <= <n^2>, or A2, exactly two degree classes.

Every bound holds with the rate a = <n> / (<n^2> - <n>) replaced by any a'
with tau / gamma < a' <= a. The default certificate uses the midpoint of
that range, which turns the sublinear decay of x_n into a linear one.
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from .degrees import check_assumptions, tau_c, threshold_ratio
from .roots import bisect
from .system import theta_series
from .types import (
    BoundChainReport,
    BoundVariant,
    BoundViolation,
    CertificateError,
    CertificateVerdict,
    ConsistencyError,
    DegreeDistribution,
    EpidemicParams,
    InvalidParameter,
    LevelReport,
    OutOfDomain,
    RootNotBracketed,
    StabilityCertificate,
    Trajectory,
    VariantNotApplicable,
)

DEFAULT_TARGET_EPS = 1e-6
DEFAULT_MAX_ITER = 10_000
ROOT_SLACK = 1e-10  # closed-form roots this far outside (0, 1) are still accepted
BOUND_SLACK = 1e-7  # relative slack for trajectory checks

log = logging.getLogger(__name__)


def _rate(dist: DegreeDistribution, rate: Optional[float]) -> float:
    return threshold_ratio(dist) if rate is None else rate


def _check_x(x: float) -> None:
    if not 0 < x <= 1:
        raise OutOfDomain(f"theta bound x={x!r} outside (0, 1]")


def _check_variant(dist: DegreeDistribution, variant: BoundVariant) -> None:
    report = check_assumptions(dist)
    if variant is BoundVariant.A1 and not report.a1_holds:
        raise VariantNotApplicable(
            f"A1 needs (2 + sqrt 2) <n> <= <n^2>, got <n>={dist.moments.n:g} "
            f"<n^2>={dist.moments.n2:g}"
        )
    if variant is BoundVariant.A2 and not report.a2_holds:
        raise VariantNotApplicable(f"A2 needs two degree classes, got {dist.L}")


def s_lower_bound(
    x: float, dist: DegreeDistribution, rate: Optional[float] = None
) -> np.ndarray:
    """Eventual lower bound N_l / (1 + a n_l x) on each [S_l]."""
    _check_x(x)
    return dist.N_l / (1 + _rate(dist, rate) * dist.n_l * x)


def stub_sum(x: float, dist: DegreeDistribution, rate: Optional[float] = None) -> float:
    """Sum of n_l times the [S_l] lower bounds."""
    return float(dist.n_l @ s_lower_bound(x, dist, rate))


def jensen_bound(
    x: float,
    dist: DegreeDistribution,
    rate: Optional[float] = None,
    check: bool = False,
) -> float:
    """
    1 + B x with B = a <n^2> / <n>, an upper bound on nN / S_s.

    With `check`, also confirm that the sharper nN / stub_sum does not exceed it.
    """
    _check_x(x)
    m = dist.moments
    bound = 1 + _rate(dist, rate) * m.n2 / m.n * x
    if check:
        sharp = m.nN / stub_sum(x, dist, rate)
        if sharp > bound * (1 + 1e-12):
            raise ConsistencyError(f"nN / stub sum {sharp!r} exceeds {bound!r}")
    return bound


def d_over_ss_bound(
    x: float,
    dist: DegreeDistribution,
    variant: BoundVariant,
    rate: Optional[float] = None,
) -> float:
    """Upper bound b(x) on D / S_s under the given assumption."""
    _check_x(x)
    _check_variant(dist, variant)
    a = _rate(dist, rate)
    m = dist.moments
    if variant is BoundVariant.A1:
        return m.n2 / m.n * (1 + a * m.n2 / m.n * x)

    (n1, n2), (N1, N2) = dist.degrees, dist.counts
    grow = 1 + a * n1 * x
    return (n1 * n1 * N1 + grow * n2 * n2 * N2) / (n1 * N1 + grow * n2 * N2)


def theta_polynomial(
    x: float,
    dist: DegreeDistribution,
    gamma: float,
    variant: BoundVariant,
    rate: Optional[float] = None,
) -> Polynomial:
    """p_x as a polynomial in z."""
    a = _rate(dist, rate)
    jensen = jensen_bound(x, dist, rate)
    b = d_over_ss_bound(x, dist, variant, rate)
    z = Polynomial([0.0, 1.0])
    return (
        gamma * jensen * (1 - z)
        - gamma * (1 + z)
        + gamma * a * (b - 2) * z * (1 - z)
    )


def z_star(
    x: float,
    dist: DegreeDistribution,
    gamma: float,
    variant: BoundVariant,
    rate: Optional[float] = None,
) -> float:
    """The root of p_x in (0, 1)."""
    p = theta_polynomial(x, dist, gamma, variant, rate)
    c0, c1, c2 = np.pad(p.coef, (0, 3 - len(p.coef)))

    if abs(c2) <= 1e-14 * (abs(c1) + abs(c0)):
        candidates = [-c0 / c1] if c1 != 0 else []
    else:
        disc = c1 * c1 - 4 * c2 * c0
        if disc >= 0:
            q = -0.5 * (c1 + math.copysign(math.sqrt(disc), c1))
            candidates = [q / c2, c0 / q] if q != 0 else [q / c2]
        else:
            candidates = []

    for root in candidates:
        if -ROOT_SLACK < root < 1 + ROOT_SLACK:
            return min(max(root, 0.0), 1.0)

    log.debug(f"closed-form roots {candidates} of p_x at x={x!r} rejected, bisecting")
    try:
        return bisect(lambda z: float(p(z)), 0.0, 1.0, 0.0, max_iter=200).root
    except RootNotBracketed:
        raise RootNotBracketed(
            f"p_x has no sign change on [0, 1] at x={x!r}: "
            f"p(0)={float(p(0.0))!r}, p(1)={float(p(1.0))!r}"
        )


def contraction(
    x: float,
    dist: DegreeDistribution,
    gamma: float,
    variant: BoundVariant,
    rate: Optional[float] = None,
) -> float:
    """F(x) = (x + z*(x)) / 2; F(0) = 0."""
    if x == 0:
        return 0.0
    return 0.5 * (x + z_star(x, dist, gamma, variant, rate))


def select_variant(dist: DegreeDistribution) -> Optional[BoundVariant]:
    report = check_assumptions(dist)
    if report.a1_holds:
        return BoundVariant.A1
    if report.a2_holds:
        return BoundVariant.A2
    return None


def iterate_certificate(
    dist: DegreeDistribution,
    gamma: float,
    tau: float,
    target_eps: float = DEFAULT_TARGET_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
    sharpen: bool = True,
) -> StabilityCertificate:
    """
    Run x_0 = 1, x_{n+1} = F(x_n) until x_n < target_eps.

    Failure modes are verdicts, not exceptions: `NotApplicable` when
    tau >= tau_c or neither assumption holds, `IterationCapReached`, or
    `Stalled` if some z*(x_n) >= x_n.
    """
    if not 0 < target_eps < 1:
        raise InvalidParameter(f"target_eps must lie in (0, 1), got {target_eps}")
    if max_iter < 1:
        raise InvalidParameter(f"max_iter must be positive, got {max_iter}")
    if not tau >= 0:
        raise InvalidParameter(f"tau must be nonnegative, got {tau}")

    a = threshold_ratio(dist)
    rate = 0.5 * (tau / gamma + a) if sharpen else a
    variant = select_variant(dist)
    threshold = tau_c(dist, gamma)

    def certificate(verdict, sequence, iterations, x) -> StabilityCertificate:
        return StabilityCertificate(
            assumption_used=variant,
            tau=tau,
            gamma=gamma,
            rate=rate,
            sequence=sequence,
            iterations=iterations,
            final_x=x,
            verdict=verdict,
        )

    if tau >= threshold or variant is None:
        reason = "tau >= tau_c" if tau >= threshold else "neither A1 nor A2 holds"
        log.info(f"certificate not applicable: {reason}")
        return certificate(CertificateVerdict.NOT_APPLICABLE, [], 0, 1.0)

    x = 1.0
    sequence = []
    for iteration in range(1, max_iter + 1):
        z = z_star(x, dist, gamma, variant, rate)
        sequence.append((x, z))
        if z >= x:
            log.warning(f"certificate stalled at x={x!r}: z*={z!r}")
            return certificate(CertificateVerdict.STALLED, sequence, iteration, x)

        x = 0.5 * (x + z)
        if x < target_eps:
            log.info(
                f"certified with {variant.value} after {iteration} steps, x={x:.3e}"
            )
            return certificate(CertificateVerdict.CERTIFIED, sequence, iteration, x)

    log.warning(f"certificate hit the cap of {max_iter} steps at x={x:.3e}")
    return certificate(CertificateVerdict.ITERATION_CAP_REACHED, sequence, max_iter, x)


def a1_curvature(dist: DegreeDistribution, gamma: float) -> Tuple[float, float]:
    """
    Second and third derivatives at 0 of x -> p_x(x) under A1, with the
    unsharpened rate. The first is <= 0 exactly when A1 holds.
    """
    m = dist.moments
    K = m.n2 - m.n
    second = -2 * gamma * (m.n2 ** 2 - 4 * m.n * m.n2 + 2 * m.n ** 2) / K ** 2
    third = -6 * gamma * (m.n2 / K) ** 2
    return second, third


def excess_polynomial(
    dist: DegreeDistribution,
    gamma: float,
    variant: BoundVariant,
    rate: Optional[float] = None,
) -> Polynomial:
    """
    p_x(x) as a polynomial in x for A1; for A2 the cubic r(x) = p_x(x) W(x)
    with W(x) = n_1 N_1 + (1 + a n_1 x) n_2 N_2 clearing the denominator.

    z*(x) < x on (0, 1] exactly when this is negative there.
    """
    a = _rate(dist, rate)
    m = dist.moments
    x = Polynomial([0.0, 1.0])
    jensen = 1 + a * m.n2 / m.n * x
    base = gamma * jensen * (1 - x) - gamma * (1 + x)

    if variant is BoundVariant.A1:
        b = m.n2 / m.n * jensen
        return base + gamma * a * (b - 2) * x * (1 - x)

    if dist.L != 2:
        raise VariantNotApplicable(f"A2 needs two degree classes, got {dist.L}")
    (n1, n2), (N1, N2) = dist.degrees, dist.counts
    grow = 1 + a * n1 * x
    W = n1 * N1 + grow * n2 * N2
    numerator = n1 * n1 * N1 + grow * n2 * n2 * N2
    return W * base + gamma * a * (numerator - 2 * W) * x * (1 - x)


def bimodal_margin(dist: DegreeDistribution) -> float:
    """V, whose sign decides the curvature of r at 0 for two classes."""
    if dist.L != 2:
        raise VariantNotApplicable(f"A2 needs two degree classes, got {dist.L}")
    (n1, n2), (N1, N2) = dist.degrees, dist.counts
    return float(
        2 * n1 ** 2 * N1 ** 2 * (n1 - 1) ** 2
        + 2 * n2 ** 2 * N2 ** 2 * (n2 - 1) ** 2
        + N1 * N2 * n1 * n2 * (n1 - 2) ** 2
        + N1 * N2 * n1 * n2 ** 2 * (3 * n1 - 4)
    )


def bimodal_curvature(dist: DegreeDistribution, gamma: float) -> Tuple[float, float]:
    """r''(0) and r'''(0) in closed form, unsharpened rate."""
    V = bimodal_margin(dist)
    m = dist.moments
    K = m.n2 - m.n
    (n1, n2), (_, N2) = dist.degrees, dist.counts
    second = -2 * gamma * m.n / (dist.N * K ** 2) * V
    third = -6 * gamma * n2 * N2 * m.n * n1 * (m.n2 + m.n * n2 - 2 * m.n) / K ** 2
    return second, third


def comparison_solution(
    times: np.ndarray,
    start: float,
    S_start: np.ndarray,
    x: float,
    params: EpidemicParams,
    dist: DegreeDistribution,
) -> np.ndarray:
    """
    Solution of y' = gamma N_l - y (gamma + tau n_l x) from y(start) = S_start,
    one column per class. [S_l] dominates it while theta <= x.
    """
    tau, gamma = params
    decay = gamma + tau * dist.n_l * x
    limit = gamma * dist.N_l / decay
    elapsed = np.asarray(times, dtype=float)[:, None] - start
    return limit + (np.asarray(S_start) - limit) * np.exp(-decay * elapsed)


def verify_bound_chain(
    trajectory: Trajectory,
    certificate: StabilityCertificate,
    dist: DegreeDistribution,
    params: EpidemicParams,
    slack: float = BOUND_SLACK,
) -> BoundChainReport:
    """
    Check the certificate's bounds along a subcritical trajectory.

    For each level x_n the entry time is the first sample after theta last
    exceeds x_n. The [S_l] bounds must become true at some later sample and
    stay true; the nN / S_s and D / S_s bounds are checked from then on,
    and [S_l] must dominate the comparison solution from the entry time.
    Levels not reached or not settled by the end of the run are pending.
    """
    if certificate.verdict is not CertificateVerdict.CERTIFIED:
        raise CertificateError(
            f"no certified chain to verify: verdict {certificate.verdict.value}"
        )
    if params.tau >= tau_c(dist, params.gamma):
        raise CertificateError(f"tau={params.tau:g} is not below threshold")

    variant = certificate.assumption_used
    rate = certificate.rate
    times = trajectory.times
    S, theta = theta_series(trajectory.states, dist)
    n = dist.n_l
    N_l = dist.N_l
    S_s = S @ n
    ratios = {
        "jensen": dist.moments.nN / S_s,
        "d_over_ss": (S @ (n * n)) / S_s,
    }

    levels = []
    violations = []

    def flag(level: int, rows: np.ndarray, check: str, values, bound) -> None:
        bad = np.nonzero(rows)[0]
        if bad.size:
            i = bad[0]
            value = values[i] if np.ndim(values) else values
            limit = bound[i] if np.ndim(bound) else bound
            violations.append(
                BoundViolation(
                    level, float(times[i]), check, float(value), float(limit)
                )
            )

    for level, x in enumerate(certificate.levels()):
        above = np.nonzero(theta > x)[0]
        if above.size and above[-1] == len(times) - 1:
            levels.append(LevelReport(level, x, None, None))
            continue
        entry = int(above[-1]) + 1 if above.size else 0

        bound = s_lower_bound(x, dist, rate)
        holds = np.all(S[entry:] >= bound - slack * N_l, axis=1)
        settled_rows = np.nonzero(holds)[0]
        if not settled_rows.size:
            levels.append(LevelReport(level, x, float(times[entry]), None))
            continue
        settled = entry + int(settled_rows[0])
        levels.append(LevelReport(level, x, float(times[entry]), float(times[settled])))

        broken = np.zeros(len(times), dtype=bool)
        broken[settled:] = ~holds[settled - entry :]
        worst = np.argmin(S - bound, axis=1)
        lowest = S[np.arange(len(times)), worst]
        flag(level, broken, "s_lower_bound", lowest, bound[worst])

        jensen = jensen_bound(x, dist, rate)
        rows = np.zeros(len(times), dtype=bool)
        rows[settled:] = ratios["jensen"][settled:] > jensen + slack
        flag(level, rows, "jensen", ratios["jensen"], jensen)

        b = d_over_ss_bound(x, dist, variant, rate)
        rows = np.zeros(len(times), dtype=bool)
        rows[settled:] = ratios["d_over_ss"][settled:] > b * (1 + slack)
        flag(level, rows, "d_over_ss", ratios["d_over_ss"], b)

        y = comparison_solution(times[entry:], times[entry], S[entry], x, params, dist)
        gap = S[entry:] - y
        rows = np.zeros(len(times), dtype=bool)
        rows[entry:] = np.any(gap < -slack * N_l, axis=1)
        lowest = np.argmin(gap, axis=1)
        values = np.zeros(len(times))
        limits = np.zeros(len(times))
        values[entry:] = S[entry:][np.arange(len(gap)), lowest]
        limits[entry:] = y[np.arange(len(gap)), lowest]
        flag(level, rows, "comparison", values, limits)

    reached = sum(1 for report in levels if report.entry_time is not None)
    report = BoundChainReport(
        levels=levels, violations=violations, levels_reached=reached
    )
    log.info(
        f"bound chain: {reached} of {len(levels)} levels reached, "
        f"{len(violations)} violations"
    )
    return report
