# Licensed under the MIT license

import time
from unittest import TestCase

import numpy as np

from cpsis.degrees import build_distribution, tau_c
from cpsis.integrator import simulate
from cpsis.stability import bifurcation_sweep
from cpsis.system import FullSystem, ReducedSystem, ThetaSystem, initial_condition
from cpsis.types import EpidemicParams, IntegrationConfig

from .base import FIG1_INFECTED, FIG2_INFECTED, perf_test, trimodal

SWEEP_SETS = [
    # grid points, processes
    (100, 1),
    (100, 2),
    (100, 4),
    (400, 4),
]

CLASS_COUNTS = [3, 10, 30, 100]


class Timer:
    def __init__(self):
        self.start = 0
        self.end = 0

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *args):
        self.end = time.perf_counter()

    @property
    def result(self):
        return self.end - self.start


class PerfTest(TestCase):
    @perf_test
    def test_sweep_processes(self):
        dist = trimodal()
        threshold = tau_c(dist, 1.0)
        results = []
        for points, processes in SWEEP_SETS:
            grid = np.linspace(0.5 * threshold, 2 * threshold, points)
            with Timer() as timer:
                bifurcation_sweep(dist, 1.0, grid, processes=processes)
            results.append((points, processes, timer.result))

        print()
        for result in results:
            print(*result)

    @perf_test
    def test_system_forms(self):
        results = []
        for L in CLASS_COUNTS:
            dist = build_distribution((k, 100) for k in range(2, L + 2))
            params = EpidemicParams(2 * tau_c(dist, 1.0), 1.0)
            state = initial_condition(dist, 0.1 * dist.N_l)
            for form in (FullSystem, ReducedSystem, ThetaSystem):
                with Timer() as timer:
                    traj = simulate(form(params, dist), state, IntegrationConfig())
                results.append((L, form.__name__, traj.accepted, timer.result))

        print()
        for result in results:
            print(*result)

    @perf_test
    def test_acceptance_budgets(self):
        dist = trimodal()
        with Timer() as timer:
            tau_c(dist, 1.0)
        self.assertLess(timer.result, 1e-3)

        params = EpidemicParams(0.5, 1.0)
        with Timer() as timer:
            simulate(
                FullSystem(params, dist),
                initial_condition(dist, FIG1_INFECTED),
                IntegrationConfig(t_max=50),
            )
        self.assertLess(timer.result, 1.0)

        params = EpidemicParams(1.0, 1.0)
        with Timer() as timer:
            for infected in FIG2_INFECTED:
                simulate(
                    FullSystem(params, dist),
                    initial_condition(dist, infected),
                    IntegrationConfig(t_max=400),
                    stop_at_equilibrium=True,
                )
        self.assertLess(timer.result, 3.0)
