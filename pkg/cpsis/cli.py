# Licensed under the MIT license

"""
Command line front end.

    cpsis moments     --degrees 2:850,3:100,4:50
    cpsis simulate    --degrees ... --tau 0.5 --out trajectory.csv
    cpsis equilibrium --degrees ... --tau 1
    cpsis sweep       --degrees ... --tau-min 0.5 --tau-max 2 --steps 100
    cpsis certify     --degrees 2:500,4:500 --tau 0.3 --verify

JSON results go to stdout, logs to stderr.
"""

import argparse
import csv
import json
import logging
import sys
from typing import IO, Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .certificate import iterate_certificate, verify_bound_chain
from .config import emit_config, from_mapping, load_config
from .degrees import build_distribution, check_assumptions, epidemic_params, tau_c
from .equilibria import disease_free, endemic_equilibrium
from .integrator import simulate
from .stability import bifurcation_sweep, classify
from .system import FullSystem, initial_condition, theta_series
from .types import (
    CertificateVerdict,
    CPSISError,
    CPState,
    DegreeDistribution,
    EpidemicParams,
    EquilibriumError,
    EquilibriumKind,
    IntegrationConfig,
    IntegrationError,
    InvalidParameter,
    RunConfig,
    ValidationError,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_VALIDATION = 2
EXIT_INTEGRATION = 3
EXIT_EQUILIBRIUM = 4

SWEEP_HEADER = ["tau", "dfe_lead_re", "endemic_sum_I", "endemic_lead_re"]

log = logging.getLogger(__name__)


def _number(value: Optional[float]) -> str:
    return "" if value is None else format(value, ".17g")


def _write_json(data: Dict[str, Any], stream: IO[str]) -> None:
    json.dump(data, stream, indent=2)
    stream.write("\n")


def _state_dict(state: CPState) -> Dict[str, Any]:
    return {
        "S": [float(v) for v in state.S],
        "I": [float(v) for v in state.I],
        "SI": float(state.SI),
        "SS": float(state.SS),
        "II": float(state.II),
    }


def _distribution(cfg: RunConfig) -> DegreeDistribution:
    return build_distribution(cfg.degrees)


def _params(cfg: RunConfig) -> EpidemicParams:
    if cfg.tau is None:
        raise InvalidParameter("an infection rate is required (--tau)")
    return epidemic_params(cfg.tau, cfg.gamma)


def _integration_config(cfg: RunConfig) -> IntegrationConfig:
    return IntegrationConfig(rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, t_max=cfg.t_max)


def default_infected(dist: DegreeDistribution) -> List[float]:
    """A tenth of each class, at least one node."""
    return [float(min(count, max(1, count // 10))) for count in dist.counts]


def cmd_moments(cfg: RunConfig, out: IO[str]) -> int:
    dist = _distribution(cfg)
    m = dist.moments
    report = check_assumptions(dist)
    _write_json(
        {
            "n": m.n,
            "n2": m.n2,
            "n3": m.n3,
            "nN": m.nN,
            "tau_c": tau_c(dist, cfg.gamma),
            "a": report.a,
            "B": report.B,
            "a1": report.a1_holds,
            "a2": report.a2_holds,
        },
        out,
    )
    return EXIT_OK


def _trajectory_rows(dist: DegreeDistribution, times, states) -> List[List[str]]:
    L = dist.L
    _, theta = theta_series(states, dist)
    rows = []
    for t, y, th in zip(times, states, theta):
        S, I, pairs = y[:L], y[L : 2 * L], y[2 * L :]
        rows.append([_number(v) for v in (t, *I, *S, *pairs, th)])
    return rows


def cmd_simulate(
    cfg: RunConfig, out: IO[str], csv_path: Optional[str], summary_path: Optional[str]
) -> int:
    dist = _distribution(cfg)
    params = _params(cfg)
    infected = cfg.initial_infected or default_infected(dist)
    state = initial_condition(dist, infected)

    system = FullSystem(params, dist)
    traj = simulate(
        system, state, _integration_config(cfg), cfg.stop_at_equilibrium
    )

    L = dist.L
    header = (
        ["t"]
        + [f"I_{l}" for l in range(1, L + 1)]
        + [f"S_{l}" for l in range(1, L + 1)]
        + ["SI", "SS", "II", "theta"]
    )
    rows = _trajectory_rows(dist, traj.times, traj.states)
    if csv_path:
        with open(csv_path, "w", newline="") as f:
            _write_csv(f, header, rows)
    else:
        _write_csv(out, header, rows)

    terminal = system.unpack(traj.terminal)
    summary = _simulation_summary(terminal, traj, params, dist)
    if summary_path:
        with open(summary_path, "w") as f:
            _write_json(summary, f)
    if csv_path:
        _write_json(summary, out)
    elif not summary_path:
        # stdout carries the CSV
        _write_json(summary, sys.stderr)
    return EXIT_OK


def _simulation_summary(terminal: CPState, traj, params, dist) -> Dict[str, Any]:
    """Terminal state and the nearest equilibrium, by max-norm distance."""
    y = terminal.as_array()
    distances = {
        EquilibriumKind.DISEASE_FREE: float(
            np.max(np.abs(y - disease_free(dist).as_array()))
        )
    }
    if params.tau > tau_c(dist, params.gamma):
        endemic = endemic_equilibrium(params, dist).coordinates
        distances[EquilibriumKind.ENDEMIC] = float(
            np.max(np.abs(y - endemic.as_array()))
        )
    nearest = min(distances, key=distances.get)

    return {
        "tau": params.tau,
        "gamma": params.gamma,
        "t_final": float(traj.times[-1]),
        "steps": {"accepted": traj.accepted, "rejected": traj.rejected},
        "converged": bool(traj.converged),
        "terminal_rhs_norm": traj.terminal_rhs_norm,
        "terminal": _state_dict(terminal),
        "sum_I": float(np.sum(terminal.I)),
        "equilibrium": nearest.value,
        "distances": {kind.value: d for kind, d in distances.items()},
    }


def _write_csv(stream: IO[str], header: Sequence[str], rows) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


def cmd_equilibrium(cfg: RunConfig, out: IO[str]) -> int:
    dist = _distribution(cfg)
    params = _params(cfg)
    report = endemic_equilibrium(params, dist, allow_virtual=cfg.allow_virtual)
    stability = classify(report.kind, report.coordinates, params, dist)
    lead = stability.leading_eigenvalue

    endemic = report.endemic
    _write_json(
        {
            "kind": report.kind.value,
            "tau": params.tau,
            "gamma": params.gamma,
            "residual_norm": report.residual_norm,
            "iterations": report.iterations,
            "bracket": list(report.bracket),
            "coordinates": _state_dict(report.coordinates),
            "endemic": None
            if endemic is None
            else {
                "X": [float(v) for v in endemic.X],
                "Z": endemic.Z,
                "U": endemic.U,
                "V": endemic.V,
            },
            "stability": {
                "leading_eigenvalue": [lead.real, lead.imag],
                "verdict": stability.verdict.value,
                "numerical": stability.numerical,
            },
        },
        out,
    )
    return EXIT_OK


def tau_grid(cfg: RunConfig, dist: DegreeDistribution) -> np.ndarray:
    """Evenly spaced rates; defaults span half to twice the threshold."""
    threshold = tau_c(dist, cfg.gamma)
    lo = cfg.tau_min if cfg.tau_min is not None else 0.5 * threshold
    hi = cfg.tau_max if cfg.tau_max is not None else 2.0 * threshold
    if not 0 < lo < hi:
        raise InvalidParameter(f"need 0 < tau_min < tau_max, got {lo}, {hi}")
    if cfg.steps < 2:
        raise InvalidParameter(f"a sweep needs at least 2 steps, got {cfg.steps}")
    return np.linspace(lo, hi, cfg.steps)


def cmd_sweep(cfg: RunConfig, out: IO[str], csv_path: Optional[str]) -> int:
    dist = _distribution(cfg)
    rows = bifurcation_sweep(
        dist,
        cfg.gamma,
        tau_grid(cfg, dist),
        allow_virtual=cfg.allow_virtual,
        processes=cfg.processes,
    )
    formatted = [[_number(v) for v in row] for row in rows]
    if csv_path:
        with open(csv_path, "w", newline="") as f:
            _write_csv(f, SWEEP_HEADER, formatted)
    else:
        _write_csv(out, SWEEP_HEADER, formatted)
    return EXIT_OK


def cmd_certify(cfg: RunConfig, out: IO[str]) -> int:
    dist = _distribution(cfg)
    params = _params(cfg)
    cert = iterate_certificate(
        dist,
        params.gamma,
        params.tau,
        target_eps=cfg.eps,
        max_iter=cfg.max_iter,
        sharpen=not cfg.plain_rate,
    )
    data: Dict[str, Any] = {
        "assumption": cert.assumption_used.value if cert.assumption_used else None,
        "tau": cert.tau,
        "gamma": cert.gamma,
        "rate": cert.rate,
        "iterations": cert.iterations,
        "final_x": cert.final_x,
        "sequence": [[x, z] for x, z in cert.sequence],
        "verdict": cert.verdict.value,
    }

    if cfg.verify:
        if cert.verdict is CertificateVerdict.CERTIFIED:
            infected = cfg.initial_infected or default_infected(dist)
            traj = simulate(
                FullSystem(params, dist),
                initial_condition(dist, infected),
                _integration_config(cfg),
            )
            chain = verify_bound_chain(traj, cert, dist, params)
            data["verification"] = {
                "levels": len(chain.levels),
                "levels_reached": chain.levels_reached,
                "violations": [v._asdict() for v in chain.violations],
            }
        else:
            log.warning(f"skipping --verify: verdict is {cert.verdict.value}")
            data["verification"] = None

    _write_json(data, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--degrees", help="degree:count pairs, eg 2:850,3:100,4:50")
    common.add_argument("--gamma", type=float, help="recovery rate")
    common.add_argument("--tau", type=float, help="infection rate per SI link")
    common.add_argument("--out", metavar="PATH", help="CSV output file")
    common.add_argument("--emit-config", metavar="PATH", help="write merged config")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    integration = argparse.ArgumentParser(add_help=False)
    integration.add_argument(
        "--initial-infected", help="comma separated, one per class"
    )
    integration.add_argument("--t-max", type=float)
    integration.add_argument("--rel-tol", type=float)
    integration.add_argument("--abs-tol", type=float)

    parser = argparse.ArgumentParser(
        prog="cpsis", description="compact pairwise SIS epidemics on networks"
    )
    parser.add_argument("--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True

    commands.add_parser("moments", parents=[common], help="moments and threshold")

    simulate = commands.add_parser(
        "simulate", parents=[common, integration], help="integrate a trajectory"
    )
    simulate.add_argument("--summary", metavar="PATH", help="JSON summary file")
    simulate.add_argument(
        "--stop-at-equilibrium", action="store_true", default=None
    )

    equilibrium = commands.add_parser(
        "equilibrium", parents=[common], help="solve for the endemic state"
    )
    equilibrium.add_argument("--allow-virtual", action="store_true", default=None)

    sweep = commands.add_parser("sweep", parents=[common], help="bifurcation table")
    sweep.add_argument("--tau-min", type=float)
    sweep.add_argument("--tau-max", type=float)
    sweep.add_argument("--steps", type=int)
    sweep.add_argument("--processes", type=int)
    sweep.add_argument("--allow-virtual", action="store_true", default=None)

    certify = commands.add_parser(
        "certify", parents=[common, integration], help="global stability certificate"
    )
    certify.add_argument("--eps", type=float)
    certify.add_argument("--max-iter", type=int)
    certify.add_argument("--verify", action="store_true", default=None)
    certify.add_argument("--plain-rate", action="store_true", default=None)
    return parser


def run_config(args: argparse.Namespace) -> RunConfig:
    """Config file values overlaid with whatever flags were given."""
    base = load_config(args.config) if args.config else RunConfig()
    flags = {
        key: value
        for key, value in vars(args).items()
        if key in RunConfig._fields and value is not None
    }
    if isinstance(flags.get("initial_infected"), str):
        try:
            flags["initial_infected"] = [
                float(v) for v in flags["initial_infected"].split(",")
            ]
        except ValueError:
            raise InvalidParameter(
                f"bad --initial-infected {flags['initial_infected']!r}"
            )
    return from_mapping(flags, base)


def exit_code(error: CPSISError) -> int:
    if isinstance(error, ValidationError):
        return EXIT_VALIDATION
    if isinstance(error, IntegrationError):
        return EXIT_INTEGRATION
    if isinstance(error, EquilibriumError):
        return EXIT_EQUILIBRIUM
    return EXIT_FAILURE


COMMANDS: Dict[str, Callable[..., int]] = {
    "moments": lambda cfg, args, out: cmd_moments(cfg, out),
    "simulate": lambda cfg, args, out: cmd_simulate(cfg, out, args.out, args.summary),
    "equilibrium": lambda cfg, args, out: cmd_equilibrium(cfg, out),
    "sweep": lambda cfg, args, out: cmd_sweep(cfg, out, args.out),
    "certify": lambda cfg, args, out: cmd_certify(cfg, out),
}


def main(argv: Optional[Sequence[str]] = None, out: Optional[IO[str]] = None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr
    )

    try:
        cfg = run_config(args)
        if args.emit_config:
            emit_config(cfg, args.emit_config)
        return COMMANDS[args.command](cfg, args, out)

    except CPSISError as e:
        print(f"error: {e}", file=sys.stderr)
        return exit_code(e)
