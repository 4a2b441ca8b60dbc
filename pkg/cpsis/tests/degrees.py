# Licensed under the MIT license

import math
from unittest import TestCase

from hypothesis import given, settings

from cpsis.degrees import (
    build_distribution,
    check_assumptions,
    epidemic_params,
    parse_degrees,
    tau_c,
    threshold_ratio,
)
from cpsis.types import (
    DegenerateDistribution,
    DuplicateDegree,
    EmptyInput,
    InvalidParameter,
    MalformedDegrees,
    NonPositiveEntry,
    ValidationError,
)

from .base import BIMODAL, REGULAR4, TRIMODAL, TRIMODAL_TAU_C, degree_pairs


class DegreesTest(TestCase):
    def test_trimodal_moments(self):
        dist = build_distribution(TRIMODAL)
        self.assertEqual(dist.N, 1000)
        self.assertEqual(dist.L, 3)
        self.assertAlmostEqual(dist.moments.n, 2.2, places=14)
        self.assertAlmostEqual(dist.moments.n2, 5.1, places=14)
        self.assertAlmostEqual(dist.moments.n3, 12.7, places=14)
        self.assertEqual(dist.moments.nN, 2200.0)

    def test_sorted_by_degree(self):
        dist = build_distribution([(4, 50), (2, 850), (3, 100)])
        self.assertEqual(dist.degrees, (2, 3, 4))
        self.assertEqual(dist.counts, (850, 100, 50))

    def test_invalid_pairs(self):
        with self.assertRaises(EmptyInput):
            build_distribution([])
        with self.assertRaises(NonPositiveEntry):
            build_distribution([(0, 10)])
        with self.assertRaises(NonPositiveEntry):
            build_distribution([(2, -1)])
        with self.assertRaises(NonPositiveEntry):
            build_distribution([(2.5, 10)])
        with self.assertRaises(DuplicateDegree):
            build_distribution([(2, 10), (2, 5)])
        with self.assertRaises(DegenerateDistribution):
            build_distribution([(1, 10)])

    def test_malformed_pairs(self):
        for pairs in ([(2, 850, 1)], [(2,)], [2, 3], 5, [None]):
            with self.subTest(pairs=pairs), self.assertRaises(MalformedDegrees):
                build_distribution(pairs)

    def test_integral_floats_accepted(self):
        dist = build_distribution([(2.0, 10.0), (3, 5)])
        self.assertEqual(dist.degrees, (2, 3))

    def test_parse_degrees(self):
        self.assertEqual(parse_degrees("2:850, 3:100,4:50"), TRIMODAL)
        for text in ("2-850", "2:x", "2:1:3"):
            with self.subTest(text=text), self.assertRaises(MalformedDegrees):
                parse_degrees(text)
        with self.assertRaises(EmptyInput):
            parse_degrees(" , ")

    def test_errors_are_validation_errors(self):
        with self.assertRaises(ValidationError):
            parse_degrees("bogus")

    def test_tau_c(self):
        self.assertAlmostEqual(
            tau_c(build_distribution(TRIMODAL), 1.0), TRIMODAL_TAU_C, places=14
        )
        self.assertAlmostEqual(tau_c(build_distribution(REGULAR4), 1.0), 1 / 3)
        self.assertAlmostEqual(tau_c(build_distribution(BIMODAL), 2.0), 6 / 7)
        with self.assertRaises(InvalidParameter):
            tau_c(build_distribution(TRIMODAL), 0.0)

    def test_regular_threshold(self):
        for k in range(2, 10):
            dist = build_distribution([(k, 100)])
            self.assertAlmostEqual(tau_c(dist, 1.0), 1 / (k - 1))

    def test_epidemic_params(self):
        self.assertEqual(epidemic_params(0.5, 1), (0.5, 1.0))
        self.assertEqual(epidemic_params(0, 1).tau, 0.0)
        for tau, gamma in ((-0.1, 1.0), (0.5, 0.0), (0.5, -1.0), (math.nan, 1.0)):
            with self.subTest(tau=tau, gamma=gamma):
                with self.assertRaises(InvalidParameter):
                    epidemic_params(tau, gamma)

    def test_assumptions(self):
        report = check_assumptions(build_distribution(TRIMODAL))
        self.assertFalse(report.a1_holds)
        self.assertFalse(report.a2_holds)
        self.assertAlmostEqual(report.a, 22 / 29)
        self.assertAlmostEqual(report.B, 51 / 29)

        self.assertTrue(check_assumptions(build_distribution(REGULAR4)).a1_holds)
        self.assertFalse(check_assumptions(build_distribution([(3, 10)])).a1_holds)

        report = check_assumptions(build_distribution(BIMODAL))
        self.assertFalse(report.a1_holds)
        self.assertTrue(report.a2_holds)

    @settings(deadline=None, max_examples=100)
    @given(degree_pairs())
    def test_threshold_positive(self, pairs):
        dist = build_distribution(pairs)
        self.assertGreater(dist.moments.n2, dist.moments.n)
        self.assertGreater(tau_c(dist, 1.0), 0)
        self.assertEqual(tau_c(dist, 3.0), 3.0 * threshold_ratio(dist))
