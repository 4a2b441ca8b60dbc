# Licensed under the MIT license

"""
Right-hand sides of the compact pairwise SIS model in three forms:

* full: ([S_l], [I_l], [SI], [SS], [II]), 2L+3 equations
* reduced: ([S_l], [SI], [II]) with [I_l] and [SS] recovered from conservation
* theta: ([S_l], theta) with theta = [SI] / S_s

All states are absolute counts. The forms are pure functions of the state;
`SystemForm` instances only cache the degree arrays.
"""

import logging
from abc import ABC, abstractmethod
from typing import Sequence, Tuple, Union

import numpy as np

from .types import (
    ConservationResiduals,
    CountExceedsClass,
    CPState,
    DegreeDistribution,
    DerivedAggregates,
    EpidemicParams,
    InvalidParameter,
    ReducedState,
    SusceptibleStubsExhausted,
    ThetaState,
)

STUB_FLOOR = 1e-12  # relative to nN; below this S_s is treated as exhausted

AnyState = Union[CPState, ReducedState, ThetaState]

log = logging.getLogger(__name__)


class SystemForm(ABC):
    """One way of writing the model as y' = f(y) on a flat vector."""

    def __init__(self, params: EpidemicParams, dist: DegreeDistribution) -> None:
        self.params = params
        self.dist = dist
        self.n = dist.n_l
        self.N_l = dist.N_l
        self.nN = dist.moments.nN

    @property
    @abstractmethod
    def dimension(self) -> int:
        """Length of the flat state vector."""

    @abstractmethod
    def pack(self, state: AnyState) -> np.ndarray:
        """Flatten a structured state into this form's vector."""

    @abstractmethod
    def unpack(self, y: np.ndarray) -> AnyState:
        """Structured view of a flat vector."""

    @abstractmethod
    def __call__(self, y: np.ndarray) -> np.ndarray:
        """Time derivative at y."""

    @abstractmethod
    def to_theta(self, states: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Susceptible counts (T x L) and theta (T) for stored rows."""

    @property
    def weights(self) -> np.ndarray:
        """Per-component magnitude used to scale absolute tolerances."""
        return np.ones(self.dimension)

    def _stubs(self, S: np.ndarray) -> float:
        S_s = float(self.n @ S)
        if S_s <= STUB_FLOOR * self.nN:
            raise SusceptibleStubsExhausted(
                f"susceptible stub count S_s={S_s:.3e} is not positive"
            )
        return S_s


class FullSystem(SystemForm):
    @property
    def dimension(self) -> int:
        return 2 * self.dist.L + 3

    def pack(self, state: AnyState) -> np.ndarray:
        return state.as_array()

    def unpack(self, y: np.ndarray) -> CPState:
        return CPState.from_array(y)

    def __call__(self, y: np.ndarray) -> np.ndarray:
        tau, gamma = self.params
        L = self.dist.L
        n = self.n
        S, I = y[:L], y[L : 2 * L]
        SI, SS, II = y[2 * L], y[2 * L + 1], y[2 * L + 2]

        S_s = self._stubs(S)
        Q = float(((n - 1) * n) @ S) / (S_s * S_s)
        infection = tau * n * S * (SI / S_s)

        out = np.empty_like(y, dtype=float)
        out[:L] = gamma * I - infection
        out[L : 2 * L] = infection - gamma * I
        out[2 * L] = gamma * (II - SI) + tau * (SS - SI) * SI * Q - tau * SI
        out[2 * L + 1] = 2 * gamma * SI - 2 * tau * SS * SI * Q
        out[2 * L + 2] = 2 * tau * SI - 2 * gamma * II + 2 * tau * SI * SI * Q
        return out

    def to_theta(self, states: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        L = self.dist.L
        S = states[:, :L]
        return S, states[:, 2 * L] / (S @ self.n)


class ReducedSystem(SystemForm):
    @property
    def dimension(self) -> int:
        return self.dist.L + 2

    def pack(self, state: AnyState) -> np.ndarray:
        if isinstance(state, CPState):
            state = reduce_state(state)
        return state.as_array()

    def unpack(self, y: np.ndarray) -> ReducedState:
        return ReducedState.from_array(y)

    def __call__(self, y: np.ndarray) -> np.ndarray:
        tau, gamma = self.params
        L = self.dist.L
        n = self.n
        S, SI, II = y[:L], y[L], y[L + 1]

        S_s = self._stubs(S)
        Q = float(((n - 1) * n) @ S) / (S_s * S_s)

        out = np.empty_like(y, dtype=float)
        out[:L] = gamma * (self.N_l - S) - tau * n * S * (SI / S_s)
        out[L] = (
            gamma * (II - SI)
            + tau * (self.nN - 3 * SI - II) * SI * Q
            - tau * SI
        )
        out[L + 1] = 2 * tau * SI - 2 * gamma * II + 2 * tau * SI * SI * Q
        return out

    def to_theta(self, states: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        L = self.dist.L
        S = states[:, :L]
        return S, states[:, L] / (S @ self.n)


class ThetaSystem(SystemForm):
    @property
    def dimension(self) -> int:
        return self.dist.L + 1

    @property
    def weights(self) -> np.ndarray:
        w = np.ones(self.dimension)
        w[-1] = 1.0 / self.dist.N
        return w

    def pack(self, state: AnyState) -> np.ndarray:
        if not isinstance(state, ThetaState):
            state = theta_state(state, self.dist)
        return state.as_array()

    def unpack(self, y: np.ndarray) -> ThetaState:
        return ThetaState.from_array(y)

    def __call__(self, y: np.ndarray) -> np.ndarray:
        tau, gamma = self.params
        L = self.dist.L
        n = self.n
        S, theta = y[:L], y[L]

        S_s = self._stubs(S)
        D = float((n * n) @ S)

        out = np.empty_like(y, dtype=float)
        out[:L] = gamma * (self.N_l - S) - tau * n * S * theta
        out[L] = (
            gamma * (self.nN / S_s) * (1 - theta)
            - gamma * (1 + theta)
            + tau * (D / S_s - 2) * theta * (1 - theta)
        )
        return out

    def to_theta(self, states: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        L = self.dist.L
        return states[:, :L], states[:, L]


def rhs_full(
    state: CPState, params: EpidemicParams, dist: DegreeDistribution
) -> CPState:
    """Time derivative of the full 2L+3 system, as a CPState of rates."""
    return CPState.from_array(FullSystem(params, dist)(state.as_array()))


def rhs_reduced(
    state: ReducedState, params: EpidemicParams, dist: DegreeDistribution
) -> ReducedState:
    return ReducedState.from_array(ReducedSystem(params, dist)(state.as_array()))


def rhs_theta(
    state: ThetaState, params: EpidemicParams, dist: DegreeDistribution
) -> ThetaState:
    if not 0.0 <= state.theta <= 1.0:
        raise InvalidParameter(f"theta must lie in [0, 1], got {state.theta}")
    return ThetaState.from_array(ThetaSystem(params, dist)(state.as_array()))


def aggregates(state: AnyState, dist: DegreeDistribution) -> DerivedAggregates:
    """S_s, D, I_s and Q_CP; Q_CP is infinite when no susceptible stubs remain."""
    n = dist.n_l
    S = np.asarray(state.S, dtype=float)
    S_s = float(n @ S)
    D = float((n * n) @ S)
    if isinstance(state, CPState):
        I_s = float(n @ state.I)
    else:
        I_s = dist.moments.nN - S_s

    exhausted = S_s <= STUB_FLOOR * dist.moments.nN
    Q = float("inf") if exhausted else float(((n - 1) * n) @ S) / (S_s * S_s)
    return DerivedAggregates(S_s=S_s, D=D, I_s=I_s, Q_CP=Q, exhausted=exhausted)


def conservation_residuals(
    state: CPState, dist: DegreeDistribution
) -> ConservationResiduals:
    S_s = float(dist.n_l @ state.S)
    return ConservationResiduals(
        singles=state.S + state.I - dist.N_l,
        pairs=state.SS + 2 * state.SI + state.II - dist.moments.nN,
        stubs=S_s - state.SS - state.SI,
    )


def initial_condition(
    dist: DegreeDistribution, infected_per_class: Sequence[float]
) -> CPState:
    """
    Seed a state with the given infected counts per class.

    Pairs follow random mixing of stubs: [SI] = S_s I_s / nN,
    [SS] = S_s^2 / nN, [II] = I_s^2 / nN, which satisfies both pair
    conservation identities exactly.
    """
    I = np.asarray(infected_per_class, dtype=float)
    if I.shape != (dist.L,):
        raise InvalidParameter(
            f"expected {dist.L} infected counts, got {len(infected_per_class)}"
        )

    N_l = dist.N_l
    for l, (count, size) in enumerate(zip(I, N_l)):
        if not 0 <= count <= size:
            raise CountExceedsClass(
                f"infected count {count} for class {l + 1} outside [0, {size:g}]"
            )

    nN = dist.moments.nN
    I_s = float(dist.n_l @ I)
    S_s = nN - I_s
    return CPState(
        S=N_l - I,
        I=I,
        SI=S_s * I_s / nN,
        SS=S_s * S_s / nN,
        II=I_s * I_s / nN,
    )


def reduce_state(state: CPState) -> ReducedState:
    return ReducedState(np.array(state.S, dtype=float), state.SI, state.II)


def lift_reduced(state: ReducedState, dist: DegreeDistribution) -> CPState:
    """Recover [I_l] and [SS] from the conservation laws."""
    S = np.array(state.S, dtype=float)
    return CPState(
        S=S,
        I=dist.N_l - S,
        SI=state.SI,
        SS=dist.moments.nN - 2 * state.SI - state.II,
        II=state.II,
    )


def theta_state(state: AnyState, dist: DegreeDistribution) -> ThetaState:
    if isinstance(state, ThetaState):
        return state
    S = np.array(state.S, dtype=float)
    S_s = float(dist.n_l @ S)
    if S_s <= STUB_FLOOR * dist.moments.nN:
        raise SusceptibleStubsExhausted("theta undefined without susceptible stubs")
    return ThetaState(S, state.SI / S_s)


def theta_series(
    states: np.ndarray, dist: DegreeDistribution
) -> Tuple[np.ndarray, np.ndarray]:
    """(S, theta) rows for stored states of any form, told apart by width."""
    L = dist.L
    params = EpidemicParams(0.0, 1.0)
    width = states.shape[1]
    forms = {
        2 * L + 3: FullSystem,
        L + 2: ReducedSystem,
        L + 1: ThetaSystem,
    }
    if width not in forms:
        raise InvalidParameter(f"rows of width {width} match no system form")
    return forms[width](params, dist).to_theta(states)
