# Licensed under the MIT license

from unittest import TestCase

import numpy as np

from cpsis.linalg import balance, eigenvalues, hessenberg, leading_eigenvalue
from cpsis.stability import _stable_quadratic, dfe_jacobian
from cpsis.types import EpidemicParams, InvalidParameter, NoConvergence

from .base import TRIMODAL_TAU_C, trimodal


def assert_same_spectrum(test: TestCase, found, expected, tol):
    found = list(found)
    test.assertEqual(len(found), len(expected))
    for value in expected:
        nearest = min(range(len(found)), key=lambda i: abs(found[i] - value))
        test.assertLess(abs(found[nearest] - value), tol, f"{value} not in {found}")
        found.pop(nearest)


class LinalgTest(TestCase):
    def test_diagonal(self):
        self.assertEqual(leading_eigenvalue(np.diag([-1.0, -2.0, 3.0])), 3.0)
        assert_same_spectrum(
            self, eigenvalues(np.diag([-1.0, -2.0, 3.0])), [-1, -2, 3], 1e-15
        )

    def test_companion_matrix(self):
        for p, q in ((3.0, 2.0), (2.8409, 0.6818), (1.0, -6.0), (2.7586, 0.0)):
            with self.subTest(p=p, q=q):
                companion = np.array([[0.0, -q], [1.0, -p]])
                larger, smaller = _stable_quadratic(p, q)
                assert_same_spectrum(
                    self, eigenvalues(companion), [larger, smaller], 1e-12
                )
                self.assertAlmostEqual(
                    leading_eigenvalue(companion).real, larger, delta=1e-12
                )

    def test_complex_pair(self):
        rotation = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -2.0]])
        assert_same_spectrum(self, eigenvalues(rotation), [1j, -1j, -2], 1e-12)

    def test_random_matrices(self):
        rng = np.random.default_rng(7)
        for size in range(1, 9):
            a = rng.normal(size=(size, size))
            with self.subTest(size=size):
                tol = 1e-9 * max(1.0, np.linalg.norm(a))
                assert_same_spectrum(
                    self, eigenvalues(a), np.linalg.eigvals(a), tol
                )
                lead = leading_eigenvalue(a)
                self.assertAlmostEqual(
                    lead.real, np.max(np.linalg.eigvals(a).real), delta=tol
                )

    def test_similarity_transforms(self):
        rng = np.random.default_rng(11)
        a = rng.normal(size=(6, 6)) * np.logspace(-3, 3, 6)
        h = hessenberg(a)
        np.testing.assert_array_equal(np.tril(h, -2), 0.0)
        self.assertAlmostEqual(np.trace(h), np.trace(a), delta=1e-9)

        b = balance(a)
        np.testing.assert_array_equal(np.diag(b), np.diag(a))
        assert_same_spectrum(
            self, np.linalg.eigvals(b), np.linalg.eigvals(a), 1e-9 * np.linalg.norm(a)
        )

    def test_no_convergence(self):
        with self.assertRaises(NoConvergence):
            eigenvalues(np.array([[1.0, 2.0], [3.0, 4.0]]), max_iter=0)
        np.testing.assert_array_equal(
            eigenvalues(np.array([[1.0, 2.0], [0.0, 4.0]]), max_iter=0), [1.0, 4.0]
        )

    def test_invalid_input(self):
        for bad in (np.zeros((2, 3)), np.zeros(3), np.array([[np.nan]])):
            with self.subTest(shape=bad.shape), self.assertRaises(InvalidParameter):
                eigenvalues(bad)
        with self.assertRaises(InvalidParameter):
            leading_eigenvalue(np.zeros((0, 0)))

    def test_threshold_jacobian(self):
        J = dfe_jacobian(EpidemicParams(TRIMODAL_TAU_C, 1.0), trimodal())
        self.assertLess(abs(leading_eigenvalue(J).real), 1e-8)

        eigs = eigenvalues(J)
        at_gamma = np.count_nonzero(np.abs(eigs + 1.0) < 1e-6)
        self.assertEqual(at_gamma, 3)
