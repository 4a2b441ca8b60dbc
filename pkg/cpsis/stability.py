# Licensed under the MIT license

"""
Local stability of the equilibria and the transcritical bifurcation at tau_c.

The bifurcation analysis works in the coordinates x = ([I_l], [SI], [II])
with [S_l] = N_l - [I_l] and [SS] = nN - 2[SI] - [II], and bifurcation
parameter phi = tau - tau_c. In these coordinates the disease-free state is
the origin.
"""

import asyncio
import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .degrees import tau_c
from .equilibria import endemic_equilibrium
from .linalg import leading_eigenvalue
from .pool import Pool
from .system import ReducedSystem, SystemForm, reduce_state
from .types import (
    BifurcationCoefficients,
    ConsistencyError,
    CPState,
    DegreeDistribution,
    DfeSpectrum,
    EpidemicParams,
    EquilibriumKind,
    InvalidParameter,
    StabilityReport,
    SweepRow,
    Verdict,
)

FD_STEP = 1e-6
FD_FLOOR = 1e-6  # step floor, relative to N
MARGINAL_TOL = 1e-8  # relative to gamma
CONSISTENCY_TOL = 1e-9

log = logging.getLogger(__name__)


def _stable_quadratic(p: float, q: float) -> Tuple[float, float]:
    """Real roots of l^2 + p l + q, larger first, without cancellation."""
    disc = p * p - 4 * q
    root = math.sqrt(max(disc, 0.0))
    r1 = -0.5 * (p + math.copysign(root, p))
    r2 = q / r1 if r1 != 0 else 0.0
    return (r1, r2) if r1 >= r2 else (r2, r1)


def dfe_spectrum(params: EpidemicParams, dist: DegreeDistribution) -> DfeSpectrum:
    """
    Spectrum of the linearisation at the disease-free state: -gamma with
    multiplicity L and the roots of l^2 + (2 gamma - alpha) l - 2 gamma (alpha + tau).
    """
    tau, gamma = params
    m = dist.moments
    alpha = tau * (m.n2 - m.n) / m.n - (tau + gamma)
    roots = _stable_quadratic(2 * gamma - alpha, -2 * gamma * (alpha + tau))
    return DfeSpectrum(
        repeated_eig=-gamma,
        multiplicity=dist.L,
        quad_roots=roots,
        alpha=alpha,
        stable=alpha + tau < 0,
    )


def dfe_jacobian(params: EpidemicParams, dist: DegreeDistribution) -> np.ndarray:
    """Jacobian of the reduced system ([S_l], [SI], [II]) at the disease-free state."""
    tau, gamma = params
    L = dist.L
    nN = dist.moments.nN
    alpha = dfe_spectrum(params, dist).alpha

    J = np.zeros((L + 2, L + 2))
    J[:L, :L] = -gamma * np.eye(L)
    J[:L, L] = -tau * dist.n_l * dist.N_l / nN
    J[L:, L:] = [[alpha, gamma], [2 * tau, -2 * gamma]]
    return J


def critical_jacobian(dist: DegreeDistribution, gamma: float) -> np.ndarray:
    """Jacobian at the origin of the ([I_l], [SI], [II]) system with tau = tau_c."""
    tc = tau_c(dist, gamma)
    L = dist.L

    J = np.zeros((L + 2, L + 2))
    J[:L, :L] = -gamma * np.eye(L)
    J[:L, L] = tc * dist.n_l * dist.N_l / dist.moments.nN
    J[L:, L:] = [[-tc, gamma], [2 * tc, -2 * gamma]]
    return J


def null_eigenvectors(
    dist: DegreeDistribution, gamma: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Right (w) and left (v) null vectors of the critical Jacobian."""
    tc = tau_c(dist, gamma)
    w = np.concatenate([tc * dist.n_l * dist.N_l / dist.moments.nN, [gamma, tc]])
    v = np.concatenate([np.zeros(dist.L), [2.0, 1.0]])
    return w, v


def bifurcation_system(
    x: np.ndarray, phi: float, dist: DegreeDistribution, gamma: float
) -> np.ndarray:
    """Right-hand side in ([I_l], [SI], [II]) coordinates at tau = tau_c + phi."""
    tau = tau_c(dist, gamma) + phi
    L = dist.L
    n = dist.n_l
    nN = dist.moments.nN
    I, SI, II = x[:L], x[L], x[L + 1]
    S = dist.N_l - I
    S_s = float(n @ S)
    Q = float(((n - 1) * n) @ S) / (S_s * S_s)

    out = np.empty(L + 2)
    out[:L] = tau * n * S * SI / S_s - gamma * I
    out[L] = gamma * (II - SI) + tau * (nN - 3 * SI - II) * SI * Q - tau * SI
    out[L + 1] = 2 * tau * SI - 2 * gamma * II + 2 * tau * SI * SI * Q
    return out


def second_partials(
    dist: DegreeDistribution, gamma: float
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Second derivatives of `bifurcation_system` at the origin and tau = tau_c.

    Returns `(H, H_phi)` with H[k, i, j] = d2 f_k / dx_i dx_j and
    H_phi[k, i] = d2 f_k / dx_i dphi.
    """
    tc = tau_c(dist, gamma)
    m = dist.moments
    L = dist.L
    n = dist.n_l
    N_l = dist.N_l
    nN = m.nN
    K = m.n2 - m.n
    SI, II = L, L + 1

    H = np.zeros((L + 2, L + 2, L + 2))
    for l in range(L):
        cross = tc * n[l] * (N_l[l] * n / nN ** 2)
        cross[l] -= tc * n[l] / nN
        H[l, :L, SI] = cross
        H[l, SI, :L] = cross

    cross = -(tc / nN) * ((n * n - n) * m.n - 2 * K * n) / m.n
    H[SI, :L, SI] = cross
    H[SI, SI, :L] = cross
    H[SI, SI, SI] = -6 * tc * K / (nN * m.n)
    H[SI, SI, II] = H[SI, II, SI] = -tc * K / (nN * m.n)
    H[II, SI, SI] = 4 * tc * K / (nN * m.n)

    H_phi = np.zeros((L + 2, L + 2))
    H_phi[:L, SI] = n * N_l / nN
    H_phi[SI, SI] = K / m.n - 1
    H_phi[II, SI] = 2.0
    return H, H_phi


def bifurcation_coefficients(
    dist: DegreeDistribution, gamma: float
) -> BifurcationCoefficients:
    """
    Normal-form coefficients b and d of the transcritical bifurcation.

    Both are evaluated in closed form and again from the defining sums over
    the second partials; a mismatch raises `ConsistencyError`.
    """
    tc = tau_c(dist, gamma)
    m = dist.moments
    K = m.n2 - m.n

    b = 4 * gamma ** 2 * tc / (m.nN * K) * (-m.n3 + 2 * m.n2 - m.n)
    d = 2 * gamma * K / m.n

    w, v = null_eigenvectors(dist, gamma)
    H, H_phi = second_partials(dist, gamma)
    b_sum = float(np.einsum("k,i,j,kij->", v, w, w, H))
    d_sum = float(np.einsum("k,i,ki->", v, w, H_phi))

    for name, closed, summed in (("b", b, b_sum), ("d", d, d_sum)):
        if not math.isclose(closed, summed, rel_tol=CONSISTENCY_TOL):
            raise ConsistencyError(
                f"{name}: closed form {closed!r} disagrees with sum {summed!r}"
            )

    log.debug(f"bifurcation coefficients b={b:.6e} d={d:.6e}")
    return BifurcationCoefficients(b=b, d=d, w=w, v=v, b_sum=b_sum, d_sum=d_sum)


def numeric_jacobian(
    system: SystemForm,
    y: Union[np.ndarray, CPState],
    h: float = FD_STEP,
) -> np.ndarray:
    """Centered differences with step h * max(|y_j|, 1e-6 N), per weight."""
    y = system.pack(y) if not isinstance(y, np.ndarray) else np.array(y, float)
    floor = FD_FLOOR * system.dist.N * system.weights
    steps = h * np.maximum(np.abs(y), floor)

    J = np.empty((y.size, y.size))
    for j, step in enumerate(steps):
        up = y.copy()
        down = y.copy()
        up[j] += step
        down[j] -= step
        J[:, j] = (system(up) - system(down)) / (2 * step)
    return J


def _verdict(lead: complex, gamma: float) -> Verdict:
    if abs(lead.real) < MARGINAL_TOL * gamma:
        return Verdict.MARGINAL
    return Verdict.STABLE if lead.real < 0 else Verdict.UNSTABLE


def classify(
    kind: EquilibriumKind,
    state: CPState,
    params: EpidemicParams,
    dist: DegreeDistribution,
) -> StabilityReport:
    """
    Linear stability of an equilibrium.

    The disease-free state uses the analytic Jacobian. Other states use
    finite differences on the reduced system, whose extra eigenvalue
    -(gamma + tau [SI] Q_CP), transverse to the stub identity, is always
    negative; those verdicts are flagged as numerical.
    """
    if kind is EquilibriumKind.DISEASE_FREE:
        J = dfe_jacobian(params, dist)
    else:
        J = numeric_jacobian(ReducedSystem(params, dist), reduce_state(state))

    lead = leading_eigenvalue(J)
    return StabilityReport(
        kind=kind,
        leading_eigenvalue=lead,
        verdict=_verdict(lead, params.gamma),
        numerical=kind is not EquilibriumKind.DISEASE_FREE,
    )


def sweep_row(
    tau: float, dist: DegreeDistribution, gamma: float, allow_virtual: bool = False
) -> SweepRow:
    params = EpidemicParams(tau, gamma)
    dfe_lead = leading_eigenvalue(dfe_jacobian(params, dist)).real

    endemic_sum: Optional[float] = None
    endemic_lead: Optional[float] = None
    if tau > tau_c(dist, gamma) or allow_virtual:
        report = endemic_equilibrium(params, dist, allow_virtual=allow_virtual)
        state = report.coordinates
        endemic_sum = float(np.sum(state.I))
        if report.kind is EquilibriumKind.VIRTUAL and endemic_sum == 0:
            endemic_lead = dfe_lead
        else:
            lead = classify(report.kind, state, params, dist).leading_eigenvalue
            endemic_lead = lead.real

    return SweepRow(tau, dfe_lead, endemic_sum, endemic_lead)


def _loop_running() -> bool:
    try:
        asyncio.get_running_loop()
    except RuntimeError:
        return False
    return True


async def sweep_on_pool(
    taus: Sequence[float],
    dist: DegreeDistribution,
    gamma: float,
    allow_virtual: bool = False,
    processes: Optional[int] = None,
) -> List[SweepRow]:
    """
    Sweep rows computed on a process pool, in the order of `taus`.

    Await this from a running event loop; `bifurcation_sweep` wraps it in
    `asyncio.run` for synchronous callers.
    """
    async with Pool(processes) as pool:
        return await pool.starmap(
            sweep_row, [(tau, dist, gamma, allow_virtual) for tau in taus]
        )


def bifurcation_sweep(
    dist: DegreeDistribution,
    gamma: float,
    tau_grid: Sequence[float],
    allow_virtual: bool = False,
    processes: int = 1,
) -> List[SweepRow]:
    """
    One row per tau; rows are independent and returned sorted by tau.

    With `processes > 1` the rows are computed through `asyncio.run`, which
    cannot be called while an event loop is running in the same thread; async
    callers await `sweep_on_pool` instead.
    """
    taus = [float(t) for t in tau_grid]
    if not taus:
        raise InvalidParameter("tau grid is empty")
    for prev, cur in zip(taus, taus[1:]):
        if not cur > prev:
            raise InvalidParameter(f"tau grid must ascend, got {prev} then {cur}")
    if not taus[0] > 0:
        raise InvalidParameter(f"tau grid must be positive, got {taus[0]}")

    if processes > 1:
        if _loop_running():
            raise RuntimeError(
                "a pooled sweep cannot start inside a running event loop; "
                "await sweep_on_pool instead"
            )
        rows = asyncio.run(sweep_on_pool(taus, dist, gamma, allow_virtual, processes))
    else:
        rows = [sweep_row(tau, dist, gamma, allow_virtual) for tau in taus]

    rows.sort(key=lambda row: row.tau)
    log.info(f"sweep of {len(rows)} rates over [{taus[0]:g}, {taus[-1]:g}] done")
    return rows
