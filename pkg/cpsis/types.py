# Licensed under the MIT license

from enum import Enum
from typing import (
    Any,
    Callable,
    Dict,
    List,
    NamedTuple,
    NewType,
    Optional,
    Sequence,
    Tuple,
    TypeVar,
)

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

TaskID = NewType("TaskID", int)

TracebackStr = str

PoolTask = Optional[Tuple[TaskID, Callable[..., R], List[Sequence[T]]]]
PoolResult = Tuple[TaskID, Optional[List[R]], Optional[TracebackStr]]

DegreePairs = Sequence[Tuple[int, int]]


class CPSISError(Exception):
    """Base class for every error raised by cpsis."""


class ValidationError(CPSISError):
    """Input outside the model's admissible set."""


class EmptyInput(ValidationError):
    pass


class NonPositiveEntry(ValidationError):
    pass


class DuplicateDegree(ValidationError):
    pass


class DegenerateDistribution(ValidationError):
    pass


class MalformedDegrees(ValidationError):
    pass


class CountExceedsClass(ValidationError):
    pass


class InvalidParameter(ValidationError):
    pass


class OutOfDomain(ValidationError):
    pass


class VariantNotApplicable(ValidationError):
    pass


class IntegrationError(CPSISError):
    pass


class StepCapExceeded(IntegrationError):
    pass


class StepSizeUnderflow(IntegrationError):
    pass


class SusceptibleStubsExhausted(IntegrationError):
    pass


class EquilibriumError(CPSISError):
    pass


class BelowThreshold(EquilibriumError):
    pass


class BracketFailure(EquilibriumError):
    pass


class RootNotBracketed(BracketFailure):
    pass


class NoConvergence(CPSISError):
    pass


class ConsistencyError(CPSISError):
    pass


class CertificateError(CPSISError):
    pass


class WorkerError(CPSISError):
    """Traceback of a failed task, proxied from a pool worker process."""


class Moments(NamedTuple):
    n: float
    n2: float
    n3: float
    nN: float


class DegreeDistribution(NamedTuple):
    """Degree classes (n_l, N_l), sorted by degree, with cached moments."""

    degrees: Tuple[int, ...]
    counts: Tuple[int, ...]
    moments: Moments

    @property
    def L(self) -> int:
        return len(self.degrees)

    @property
    def N(self) -> int:
        return sum(self.counts)

    @property
    def n_l(self) -> np.ndarray:
        return np.array(self.degrees, dtype=float)

    @property
    def N_l(self) -> np.ndarray:
        return np.array(self.counts, dtype=float)

    def pairs(self) -> List[Tuple[int, int]]:
        return list(zip(self.degrees, self.counts))


class EpidemicParams(NamedTuple):
    tau: float
    gamma: float


class AssumptionReport(NamedTuple):
    a1_holds: bool
    a2_holds: bool
    a: float
    B: float


class CPState(NamedTuple):
    """Full model state in absolute counts."""

    S: np.ndarray
    I: np.ndarray
    SI: float
    SS: float
    II: float

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.S, self.I, [self.SI, self.SS, self.II]])

    @classmethod
    def from_array(cls, y: np.ndarray) -> "CPState":
        L = (len(y) - 3) // 2
        return cls(
            np.array(y[:L], dtype=float),
            np.array(y[L : 2 * L], dtype=float),
            float(y[2 * L]),
            float(y[2 * L + 1]),
            float(y[2 * L + 2]),
        )


class ReducedState(NamedTuple):
    S: np.ndarray
    SI: float
    II: float

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.S, [self.SI, self.II]])

    @classmethod
    def from_array(cls, y: np.ndarray) -> "ReducedState":
        return cls(np.array(y[:-2], dtype=float), float(y[-2]), float(y[-1]))


class ThetaState(NamedTuple):
    S: np.ndarray
    theta: float

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.S, [self.theta]])

    @classmethod
    def from_array(cls, y: np.ndarray) -> "ThetaState":
        return cls(np.array(y[:-1], dtype=float), float(y[-1]))


class DerivedAggregates(NamedTuple):
    S_s: float
    D: float
    I_s: float
    Q_CP: float
    exhausted: bool


class ConservationResiduals(NamedTuple):
    singles: np.ndarray
    pairs: float
    stubs: float


class IntegrationConfig(NamedTuple):
    """
    Step control and stopping policy for the adaptive integrator.

    `abs_tol` and `equilibrium_tol` left as `None` are resolved against the
    network size and rates by `integrator.resolve_config`.
    """

    rel_tol: float = 1e-8
    abs_tol: Optional[float] = None
    t_max: float = 50.0
    max_steps: int = 200_000
    equilibrium_tol: Optional[float] = None


class Trajectory(NamedTuple):
    times: np.ndarray
    states: np.ndarray
    converged: bool
    terminal_rhs_norm: float
    accepted: int = 0
    rejected: int = 0

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]


class EquilibriumKind(Enum):
    DISEASE_FREE = "DiseaseFree"
    ENDEMIC = "Endemic"
    VIRTUAL = "Virtual"


class EndemicCoordinates(NamedTuple):
    X: np.ndarray
    Z: float
    U: float
    V: float


class EquilibriumReport(NamedTuple):
    kind: EquilibriumKind
    coordinates: CPState
    residual_norm: float
    iterations: int = 0
    bracket: Tuple[float, float] = (0.0, 0.0)
    endemic: Optional[EndemicCoordinates] = None


class DfeSpectrum(NamedTuple):
    repeated_eig: float
    multiplicity: int
    quad_roots: Tuple[float, float]
    alpha: float
    stable: bool


class BifurcationCoefficients(NamedTuple):
    b: float
    d: float
    w: np.ndarray
    v: np.ndarray
    b_sum: float
    d_sum: float


class Verdict(Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    MARGINAL = "Marginal"


class StabilityReport(NamedTuple):
    kind: EquilibriumKind
    leading_eigenvalue: complex
    verdict: Verdict
    numerical: bool


class SweepRow(NamedTuple):
    tau: float
    dfe_lead_re: float
    endemic_sum_I: Optional[float]
    endemic_lead_re: Optional[float]


class BoundVariant(Enum):
    A1 = "A1"
    A2 = "A2"


class CertificateVerdict(Enum):
    CERTIFIED = "Certified"
    NOT_APPLICABLE = "NotApplicable"
    ITERATION_CAP_REACHED = "IterationCapReached"
    STALLED = "Stalled"


class StabilityCertificate(NamedTuple):
    assumption_used: Optional[BoundVariant]
    tau: float
    gamma: float
    rate: float
    sequence: List[Tuple[float, float]]
    iterations: int
    final_x: float
    verdict: CertificateVerdict

    def levels(self) -> List[float]:
        return [x for x, _ in self.sequence]


class BoundViolation(NamedTuple):
    level: int
    time: float
    check: str
    value: float
    bound: float


class LevelReport(NamedTuple):
    level: int
    x: float
    entry_time: Optional[float]
    settled_time: Optional[float]


class BoundChainReport(NamedTuple):
    levels: List[LevelReport]
    violations: List[BoundViolation]
    levels_reached: int

    @property
    def first_violation(self) -> Optional[BoundViolation]:
        return self.violations[0] if self.violations else None

    @property
    def ok(self) -> bool:
        return not self.violations


class RunConfig(NamedTuple):
    """Everything a CLI command needs; mirrors the JSON config file keys."""

    degrees: Tuple[Tuple[int, int], ...] = ()
    gamma: float = 1.0
    tau: Optional[float] = None
    initial_infected: Optional[Tuple[float, ...]] = None
    t_max: float = 50.0
    rel_tol: float = 1e-8
    abs_tol: Optional[float] = None
    tau_min: Optional[float] = None
    tau_max: Optional[float] = None
    steps: int = 50
    eps: float = 1e-6
    max_iter: int = 10_000
    allow_virtual: bool = False
    verify: bool = False
    plain_rate: bool = False
    stop_at_equilibrium: bool = False
    processes: int = 1

    def as_dict(self) -> Dict[str, Any]:
        data = self._asdict()
        data["degrees"] = [{"degree": d, "count": c} for d, c in self.degrees]
        if self.initial_infected is not None:
            data["initial_infected"] = list(self.initial_infected)
        return data
