# Licensed under the MIT license

"""
Disease-free and endemic equilibria.

The endemic state is parameterised by its steady [SS] count U. The pair
balance gives [SI] = g(U), the unique nonnegative root of

    gamma nN U = gamma Z^2 + Z U (tau + 2 gamma) + gamma U^2,

and the remaining steady condition reduces to f(U) = 1 with f strictly
increasing on (0, nN], f(nN) = tau / tau_c. One bisection therefore finds
the state whenever tau > tau_c.
"""

import logging
import math

import numpy as np

from .degrees import tau_c
from .roots import bisect
from .system import FullSystem
from .types import (
    BelowThreshold,
    BracketFailure,
    CPState,
    DegreeDistribution,
    EndemicCoordinates,
    EpidemicParams,
    EquilibriumKind,
    EquilibriumReport,
    OutOfDomain,
)

BRACKET_EPS = 1e-12  # lower bracket endpoint and bisection width, relative to nN
VIRTUAL_START = 1e-6  # first offset past nN when bracketing the virtual branch
VIRTUAL_DOUBLINGS = 60

log = logging.getLogger(__name__)


def disease_free(dist: DegreeDistribution) -> CPState:
    return CPState(
        S=dist.N_l.copy(),
        I=np.zeros(dist.L),
        SI=0.0,
        SS=dist.moments.nN,
        II=0.0,
    )


def _discriminant(U: float, params: EpidemicParams, nN: float) -> float:
    tau, gamma = params
    return math.sqrt(U * U * (tau * tau + 4 * gamma * tau) + 4 * U * nN * gamma ** 2)


def _g(U: float, params: EpidemicParams, nN: float) -> float:
    # conjugate form of (-U(tau + 2 gamma) + s) / (2 gamma); no cancellation at nN
    if U == 0:
        return 0.0
    tau, gamma = params
    s = _discriminant(U, params, nN)
    return 2 * gamma * U * (nN - U) / (U * (tau + 2 * gamma) + s)


def _f(U: float, params: EpidemicParams, dist: DegreeDistribution) -> float:
    tau, gamma = params
    n = dist.n_l
    Z = _g(U, params, dist.moments.nN)
    weights = n * (n - 1) * dist.N_l
    return float(tau * U / (U + Z) * np.sum(weights / (gamma * (U + Z) + tau * n * Z)))


def _check_domain(U: float, nN: float, open_left: bool) -> None:
    low_ok = U > 0 if open_left else U >= 0
    if not (low_ok and U <= nN):
        side = "(" if open_left else "["
        raise OutOfDomain(f"U={U!r} outside {side}0, {nN:g}]")


def g_of_U(U: float, params: EpidemicParams, dist: DegreeDistribution) -> float:
    """Steady [SI] as a function of the steady [SS] count U in [0, nN]."""
    nN = dist.moments.nN
    _check_domain(U, nN, open_left=False)
    return _g(U, params, nN)


def g_prime(U: float, params: EpidemicParams, dist: DegreeDistribution) -> float:
    tau, gamma = params
    nN = dist.moments.nN
    _check_domain(U, nN, open_left=True)
    s = _discriminant(U, params, nN)
    ds = (2 * U * (tau * tau + 4 * gamma * tau) + 4 * nN * gamma ** 2) / (2 * s)
    return (ds - (tau + 2 * gamma)) / (2 * gamma)


def g_double_prime(
    U: float, params: EpidemicParams, dist: DegreeDistribution
) -> float:
    gamma = params.gamma
    nN = dist.moments.nN
    _check_domain(U, nN, open_left=True)
    s = _discriminant(U, params, nN)
    return -2 * nN * nN * gamma ** 3 / s ** 3


def f_of_U(U: float, params: EpidemicParams, dist: DegreeDistribution) -> float:
    """
    f(U) = tau U / (U + g) * sum_l n_l (n_l - 1) N_l / (gamma (U + g) + tau n_l g)

    with g = g(U). The endemic state sits at f(U) = 1.
    """
    _check_domain(U, dist.moments.nN, open_left=True)
    return _f(U, params, dist)


def lift(coords: EndemicCoordinates, dist: DegreeDistribution) -> CPState:
    """Full model state with [S_l] = X_l, [SI] = Z, [SS] = U and [II] = V."""
    X = np.array(coords.X, dtype=float)
    return CPState(S=X, I=dist.N_l - X, SI=coords.Z, SS=coords.U, II=coords.V)


def endemic_coordinates(
    U: float, params: EpidemicParams, dist: DegreeDistribution
) -> EndemicCoordinates:
    """Back-substitute X_l, Z and V from the steady [SS] count."""
    tau, gamma = params
    nN = dist.moments.nN
    Z = _g(U, params, nN)
    X = gamma * dist.N_l / (gamma + tau * dist.n_l * Z / (Z + U))
    return EndemicCoordinates(X=X, Z=Z, U=U, V=nN - U - 2 * Z)


def residual(state: CPState, params: EpidemicParams, dist: DegreeDistribution) -> float:
    """Max-norm of the full right-hand side."""
    return float(np.max(np.abs(FullSystem(params, dist)(state.as_array()))))


def _virtual_admissible(
    U: float, params: EpidemicParams, dist: DegreeDistribution
) -> bool:
    tau, gamma = params
    Z = _g(U, params, dist.moments.nN)
    return U + Z > 0 and bool(np.all(gamma * (U + Z) + tau * dist.n_l * Z > 0))


def _virtual_bracket(params: EpidemicParams, dist: DegreeDistribution):
    """Bracket f(U) = 1 beyond nN, where g(U) < 0 and f grows to a pole."""
    nN = dist.moments.nN
    lo = nN
    offset = VIRTUAL_START * nN
    for _ in range(VIRTUAL_DOUBLINGS):
        U = nN + offset
        if _virtual_admissible(U, params, dist):
            if _f(U, params, dist) > 1:
                return lo, U
            lo = U
            offset *= 2
            continue

        # stepped over the pole: close in from the admissible side
        bad = U
        for _ in range(200):
            mid = 0.5 * (lo + bad)
            if not _virtual_admissible(mid, params, dist):
                bad = mid
            elif _f(mid, params, dist) > 1:
                return lo, mid
            else:
                lo = mid
        break

    raise BracketFailure(f"could not bracket the virtual branch beyond U={lo:g}")


def endemic_equilibrium(
    params: EpidemicParams, dist: DegreeDistribution, allow_virtual: bool = False
) -> EquilibriumReport:
    """
    The unique endemic state for tau > tau_c.

    Below the threshold this raises `BelowThreshold` unless `allow_virtual`
    is set, in which case the unphysical branch with negative infected
    coordinates is returned with kind `Virtual`.
    """
    tau, gamma = params
    nN = dist.moments.nN
    threshold = tau_c(dist, gamma)

    def excess(U: float) -> float:
        return _f(U, params, dist) - 1.0

    if tau > threshold:
        kind = EquilibriumKind.ENDEMIC
        found = bisect(excess, BRACKET_EPS * nN, nN, BRACKET_EPS * nN)
    elif not allow_virtual:
        raise BelowThreshold(
            f"tau={tau:g} <= tau_c={threshold:g}: no endemic equilibrium exists"
        )
    elif math.isclose(tau, threshold, rel_tol=1e-12):
        state = disease_free(dist)
        log.info(f"virtual branch meets the disease-free state at tau={tau:g}")
        return EquilibriumReport(
            kind=EquilibriumKind.VIRTUAL,
            coordinates=state,
            residual_norm=residual(state, params, dist),
            bracket=(nN, nN),
            endemic=EndemicCoordinates(dist.N_l.copy(), 0.0, nN, 0.0),
        )
    else:
        kind = EquilibriumKind.VIRTUAL
        lo, hi = _virtual_bracket(params, dist)
        found = bisect(excess, lo, hi, BRACKET_EPS * nN)

    coords = endemic_coordinates(found.root, params, dist)
    state = lift(coords, dist)
    norm = residual(state, params, dist)
    log.info(
        f"{kind.value} equilibrium at tau={tau:g}: U={coords.U:.10g} "
        f"sum I={float(np.sum(state.I)):.10g} residual={norm:.3e}"
    )
    return EquilibriumReport(
        kind=kind,
        coordinates=state,
        residual_norm=norm,
        iterations=found.iterations,
        bracket=found.bracket,
        endemic=coords,
    )
