# Licensed under the MIT license

"""
Adaptive Dormand-Prince 5(4) integration of the system forms.

Every accepted step is kept; trajectories at these problem sizes are short
enough that no dense output is needed.
"""

import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .system import AnyState, SystemForm
from .types import (
    IntegrationConfig,
    InvalidParameter,
    StepCapExceeded,
    StepSizeUnderflow,
    Trajectory,
)

DEFAULT_REL_TOL = 1e-8
ABS_TOL_FACTOR = 1e-8  # abs_tol = ABS_TOL_FACTOR * N
EQUILIBRIUM_TOL_FACTOR = 1e-9  # equilibrium_tol = factor * N * max(tau, gamma)
# when stopping at equilibrium the error scale is capped at this share of
# equilibrium_tol / max(tau, gamma); the RHS norm left by step control tracks it
EQUILIBRIUM_SCALE_SHARE = 1e-2

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
PI_ALPHA = 0.7 / 5
PI_BETA = 0.4 / 5

# Dormand-Prince tableau
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# fifth minus embedded fourth order weights
E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

StateLike = Union[np.ndarray, AnyState]

log = logging.getLogger(__name__)


def resolve_config(
    cfg: Optional[IntegrationConfig], system: SystemForm
) -> IntegrationConfig:
    """Fill in size-dependent defaults and validate the result."""
    cfg = cfg or IntegrationConfig()
    N = system.dist.N
    tau, gamma = system.params

    if cfg.abs_tol is None:
        cfg = cfg._replace(abs_tol=ABS_TOL_FACTOR * N)
    if cfg.equilibrium_tol is None:
        cfg = cfg._replace(equilibrium_tol=EQUILIBRIUM_TOL_FACTOR * N * max(tau, gamma))

    if not cfg.rel_tol >= 1e-14:
        raise InvalidParameter(f"rel_tol must be at least 1e-14, got {cfg.rel_tol}")
    for name in ("abs_tol", "t_max", "equilibrium_tol"):
        if not getattr(cfg, name) > 0:
            raise InvalidParameter(f"{name} must be positive, got {getattr(cfg, name)}")
    if cfg.max_steps < 1:
        raise InvalidParameter(f"max_steps must be positive, got {cfg.max_steps}")
    return cfg


def rhs_norm(system: SystemForm, f: np.ndarray) -> float:
    """Max-norm of a derivative with each component scaled by its weight."""
    return float(np.max(np.abs(f / system.weights)))


def _initial_step(
    system: SystemForm, y0: np.ndarray, f0: np.ndarray, atol: np.ndarray, rtol: float
) -> float:
    scale = atol + rtol * np.abs(y0)
    d0 = np.max(np.abs(y0 / scale))
    d1 = np.max(np.abs(f0 / scale))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1

    f1 = system(y0 + h0 * f0)
    d2 = np.max(np.abs((f1 - f0) / scale)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def _run(
    system: SystemForm, y0: StateLike, cfg: Optional[IntegrationConfig], stop: bool
) -> Trajectory:
    cfg = resolve_config(cfg, system)
    y = system.pack(y0) if not isinstance(y0, np.ndarray) else np.array(y0, float)
    if y.shape != (system.dimension,):
        raise InvalidParameter(
            f"state of length {y.shape[0]} does not fit a system of {system.dimension}"
        )

    rtol = cfg.rel_tol
    atol = cfg.abs_tol * system.weights
    scale_cap = (
        EQUILIBRIUM_SCALE_SHARE
        * cfg.equilibrium_tol
        / max(*system.params)
        * system.weights
        if stop
        else np.inf
    )
    t = 0.0
    times = [t]
    states = [y.copy()]

    f = system(y)
    norm = rhs_norm(system, f)
    if stop and norm < cfg.equilibrium_tol:
        log.debug(f"state already at equilibrium, rhs norm {norm:.3e}")
        return Trajectory(np.array(times), np.array(states), True, norm)

    h = min(_initial_step(system, y, f, atol, rtol), cfg.t_max)
    err_prev = 1e-4
    accepted = rejected = 0
    converged = False
    k = np.empty((7, y.size))

    while t < cfg.t_max:
        if accepted + rejected >= cfg.max_steps:
            raise StepCapExceeded(
                f"step cap {cfg.max_steps} reached at t={t:g} of {cfg.t_max:g}"
            )
        if h < 10 * np.spacing(max(abs(t), 1.0)):
            raise StepSizeUnderflow(f"step size {h:.3e} underflowed at t={t:g}")

        last = h >= cfg.t_max - t
        if last:
            h = cfg.t_max - t
        k[0] = f
        for i in range(1, 7):
            k[i] = system(y + h * (np.dot(A[i], k[:i])))
        y_new = y + h * (B @ k)  # equals the last stage point (FSAL)
        err_vec = h * (E @ k)

        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        scale = np.minimum(scale, scale_cap)
        err = float(np.max(np.abs(err_vec) / scale))

        if err <= 1.0:
            t = cfg.t_max if last else t + h
            y = y_new
            f = k[6]
            accepted += 1
            times.append(t)
            states.append(y.copy())

            err = max(err, 1e-10)
            factor = SAFETY * err ** -PI_ALPHA * err_prev ** PI_BETA
            h *= min(MAX_FACTOR, max(MIN_FACTOR, factor))
            err_prev = err

            norm = rhs_norm(system, f)
            if stop and norm < cfg.equilibrium_tol:
                converged = True
                break
        else:
            rejected += 1
            factor = SAFETY * err ** -PI_ALPHA
            h *= min(1.0, max(MIN_FACTOR, factor))
            log.debug(f"rejected step at t={t:g}: err={err:.3e}, retry h={h:.3e}")

    if not stop:
        converged = norm < cfg.equilibrium_tol
    if stop and not converged:
        log.warning(
            f"no equilibrium by t={t:g}: rhs norm {norm:.3e} "
            f">= {cfg.equilibrium_tol:.3e}"
        )
    log.debug(
        f"integration done t={t:g} accepted={accepted} rejected={rejected} "
        f"rhs norm={norm:.3e}"
    )
    return Trajectory(
        np.array(times), np.array(states), converged, norm, accepted, rejected
    )


def integrate(
    system: SystemForm, y0: StateLike, cfg: Optional[IntegrationConfig] = None
) -> Trajectory:
    """Integrate over [0, t_max], keeping every accepted step."""
    return _run(system, y0, cfg, stop=False)


def integrate_to_equilibrium(
    system: SystemForm, y0: StateLike, cfg: Optional[IntegrationConfig] = None
) -> Tuple[np.ndarray, bool]:
    """Integrate until the weighted RHS norm drops below equilibrium_tol."""
    traj = _run(system, y0, cfg, stop=True)
    return traj.terminal, traj.converged


def simulate(
    system: SystemForm,
    y0: StateLike,
    cfg: Optional[IntegrationConfig] = None,
    stop_at_equilibrium: bool = False,
) -> Trajectory:
    """Trajectory of a system form, optionally cut short at equilibrium."""
    return _run(system, y0, cfg, stop=stop_at_equilibrium)


def segment_states(
    system: SystemForm,
    y0: StateLike,
    checkpoints: Sequence[float],
    cfg: Optional[IntegrationConfig] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    States at the given ascending times, restarting the integrator at each
    checkpoint so that no interpolation is involved.

    Returns `(times, states)` with the initial state as the first row.
    """
    cfg = resolve_config(cfg, system)
    y = system.pack(y0) if not isinstance(y0, np.ndarray) else np.array(y0, float)
    times = [0.0]
    states = [y]
    for t_next in checkpoints:
        span = t_next - times[-1]
        if not span > 0:
            raise InvalidParameter(f"checkpoints must ascend from 0, got {t_next}")
        traj = _run(system, states[-1], cfg._replace(t_max=span), stop=False)
        times.append(float(t_next))
        states.append(traj.terminal)
    return np.array(times), np.array(states)
