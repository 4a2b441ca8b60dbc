# Licensed under the MIT license

import math
from unittest import TestCase

import numpy as np

from cpsis.equilibria import disease_free, endemic_equilibrium
from cpsis.integrator import (
    integrate,
    integrate_to_equilibrium,
    resolve_config,
    segment_states,
    simulate,
)
from cpsis.system import (
    FullSystem,
    ThetaSystem,
    initial_condition,
    theta_series,
    theta_state,
)
from cpsis.types import (
    CPState,
    EpidemicParams,
    IntegrationConfig,
    InvalidParameter,
    StepCapExceeded,
)

from .base import FIG1_INFECTED, FIG2_INFECTED, LinearDecay, trimodal


def sum_infected(states: np.ndarray, L: int) -> np.ndarray:
    return states[:, L : 2 * L].sum(axis=1)


class IntegratorTest(TestCase):
    def setUp(self):
        self.dist = trimodal()
        self.subcritical = FullSystem(EpidemicParams(0.5, 1.0), self.dist)
        self.supercritical = FullSystem(EpidemicParams(1.0, 1.0), self.dist)

    def test_linear_decay(self):
        cfg = IntegrationConfig(rel_tol=1e-9, abs_tol=1e-12, t_max=1.0)
        traj = integrate(LinearDecay(), np.array([1.0]), cfg)
        self.assertEqual(traj.times[-1], 1.0)
        self.assertAlmostEqual(traj.terminal[0], math.exp(-1), delta=1e-8)
        self.assertEqual(len(traj.times), traj.accepted + 1)

    def test_linear_decay_to_equilibrium(self):
        terminal, converged = integrate_to_equilibrium(LinearDecay(), np.array([1.0]))
        self.assertTrue(converged)
        self.assertLess(terminal[0], 1e-9)

    def test_theta_stays_in_unit_interval(self):
        for system in (self.subcritical, self.supercritical):
            for infected in FIG2_INFECTED:
                state = initial_condition(self.dist, infected)
                traj = integrate(system, state, IntegrationConfig(t_max=40))
                _, theta = theta_series(traj.states, self.dist)
                with self.subTest(tau=system.params.tau, infected=infected):
                    self.assertTrue(np.all((theta >= 0) & (theta <= 1)))

    def test_resolve_config(self):
        cfg = resolve_config(None, self.supercritical)
        self.assertAlmostEqual(cfg.abs_tol, 1e-5)
        self.assertAlmostEqual(cfg.equilibrium_tol, 1e-6)

        for bad in (
            IntegrationConfig(rel_tol=1e-16),
            IntegrationConfig(t_max=0.0),
            IntegrationConfig(abs_tol=-1.0),
            IntegrationConfig(max_steps=0),
        ):
            with self.subTest(cfg=bad), self.assertRaises(InvalidParameter):
                resolve_config(bad, self.supercritical)

    def test_state_length(self):
        with self.assertRaises(InvalidParameter):
            integrate(self.supercritical, np.zeros(4))

    def test_step_cap(self):
        state = initial_condition(self.dist, FIG1_INFECTED)
        with self.assertRaises(StepCapExceeded):
            integrate(self.subcritical, state, IntegrationConfig(t_max=40, max_steps=2))

    def test_subcritical_decay(self):
        state = initial_condition(self.dist, FIG1_INFECTED)
        traj = integrate(self.subcritical, state, IntegrationConfig(t_max=40))
        infected = sum_infected(traj.states, self.dist.L)
        self.assertEqual(infected[0], 150.0)
        self.assertLess(infected[-1], 1e-3 * self.dist.N)

        # at most one interior maximum
        rising = np.diff(infected) > 0
        peaks = np.count_nonzero(rising[:-1] & ~rising[1:])
        self.assertLessEqual(peaks, 1)

    def test_subcritical_equilibrium(self):
        state = initial_condition(self.dist, FIG1_INFECTED)
        terminal, converged = integrate_to_equilibrium(
            self.subcritical, state, IntegrationConfig(t_max=200)
        )
        self.assertTrue(converged)
        self.assertLess(CPState.from_array(terminal).I.sum(), 1e-3)

    def test_disease_free_converges_immediately(self):
        traj = simulate(
            self.supercritical, disease_free(self.dist), stop_at_equilibrium=True
        )
        self.assertTrue(traj.converged)
        self.assertEqual(len(traj.times), 1)
        self.assertEqual(traj.terminal_rhs_norm, 0.0)

    def test_global_endemic_attraction(self):
        report = endemic_equilibrium(self.supercritical.params, self.dist)
        expected = report.coordinates.as_array()
        cfg = IntegrationConfig(t_max=400)

        terminals = []
        for infected in FIG2_INFECTED:
            with self.subTest(infected=infected):
                state = initial_condition(self.dist, infected)
                terminal, converged = integrate_to_equilibrium(
                    self.supercritical, state, cfg
                )
                self.assertTrue(converged)
                np.testing.assert_allclose(
                    terminal, expected, rtol=1e-5, atol=1e-6 * self.dist.N
                )
                terminals.append(terminal)

        spread = np.max(np.ptp(np.array(terminals), axis=0) / np.abs(expected).max())
        self.assertLess(spread, 1e-5)

    def test_endemic_detection_with_loose_tolerances(self):
        state = initial_condition(self.dist, FIG1_INFECTED)
        eq_tol = resolve_config(None, self.supercritical).equilibrium_tol
        for cfg in (
            IntegrationConfig(t_max=400),
            IntegrationConfig(t_max=400, rel_tol=1e-12),
            IntegrationConfig(t_max=400, abs_tol=1e-2),
        ):
            with self.subTest(cfg=cfg):
                traj = simulate(self.supercritical, state, cfg, True)
                self.assertTrue(traj.converged)
                self.assertLess(traj.terminal_rhs_norm, eq_tol)
                self.assertLess(traj.times[-1], 400.0)

    def test_pair_conservation_drift(self):
        state = initial_condition(self.dist, FIG1_INFECTED)
        cfg = IntegrationConfig(t_max=50)
        traj = integrate(self.supercritical, state, cfg)
        L = self.dist.L
        SI, SS, II = traj.states[:, 2 * L : 2 * L + 3].T
        pairs = SS + 2 * SI + II
        drift = np.max(np.abs(pairs - self.dist.moments.nN))
        self.assertLess(drift, 100 * cfg.rel_tol * self.dist.moments.nN)

        singles = traj.states[:, :L] + traj.states[:, L : 2 * L] - self.dist.N_l
        self.assertLess(np.max(np.abs(singles)), 100 * cfg.rel_tol * self.dist.N)

    def test_tolerance_refinement(self):
        state = initial_condition(self.dist, FIG1_INFECTED)
        coarse = integrate(
            self.supercritical, state, IntegrationConfig(rel_tol=1e-6, t_max=20)
        )
        fine = integrate(
            self.supercritical, state, IntegrationConfig(rel_tol=1e-9, t_max=20)
        )
        self.assertGreater(fine.accepted, coarse.accepted)
        np.testing.assert_allclose(coarse.terminal, fine.terminal, rtol=1e-4)

    def test_theta_form_tracks_full_form(self):
        state = initial_condition(self.dist, FIG1_INFECTED)
        theta_system = ThetaSystem(self.supercritical.params, self.dist)
        checkpoints = [1.0, 5.0, 10.0, 20.0]
        cfg = IntegrationConfig(rel_tol=1e-10, abs_tol=1e-10 * self.dist.N)

        _, full_states = segment_states(self.supercritical, state, checkpoints, cfg)
        times, theta_states = segment_states(
            theta_system, theta_state(state, self.dist), checkpoints, cfg
        )
        np.testing.assert_array_equal(times, [0.0] + checkpoints)

        S_full, theta_full = theta_series(full_states, self.dist)
        S_theta, theta_theta = theta_series(theta_states, self.dist)
        np.testing.assert_allclose(theta_theta, theta_full, atol=1e-6)
        np.testing.assert_allclose(S_theta, S_full, rtol=1e-6)

    def test_segment_checkpoints_ascend(self):
        state = initial_condition(self.dist, FIG1_INFECTED)
        with self.assertRaises(InvalidParameter):
            segment_states(self.supercritical, state, [2.0, 1.0])
