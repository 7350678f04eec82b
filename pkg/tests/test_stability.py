# -*- coding: utf-8 -*-

import unittest

import numpy as np
from numpy.testing import assert_allclose
from scipy import linalg

from systraj.activation import Activation
from systraj.errors import NotStabilizable, UnstableSystem
from systraj.stability import (covarianceBounds, dareGain, darePolicy, estimateStability,
                               gramians, gramianSequence, meanStateCovariance,
                               nonlinearOperatorNorm, pairedRatios,
                               randomInputMatrix, randomUnstableMatrix, solveDare,
                               spectralNorm, spectralRadius, stateCovariance,
                               table1Trial)
from systraj.system import LinearSystem, NoiseSpec, NonlinearSystem, Policy, zeroPolicy


class TestSpectra(unittest.TestCase):

    def testSpectralRadius(self):
        self.assertAlmostEqual(spectralRadius([[0.0, 1.0], [-1.0, 0.0]]), 1.0)
        self.assertAlmostEqual(spectralRadius([[0.5, 10.0], [0.0, 0.2]]), 0.5)
        self.assertAlmostEqual(spectralNorm([[3.0, 0.0], [0.0, -4.0]]), 4.0)
        with self.assertRaises(ValueError):
            spectralRadius(np.ones((2, 3)))

    def testRandomUnstableMatrix(self):
        rng = np.random.default_rng(0)
        A = randomUnstableMatrix(20, rng, unstable=3, margin=0.02)
        moduli = np.sort(np.abs(linalg.eigvals(A)))[::-1]
        self.assertGreater(moduli[2], 1.0)
        self.assertLessEqual(moduli[2], 1.02 + 1e-9)
        self.assertEqual(int(np.sum(moduli > 1.0)), 3)
        B = randomInputMatrix(20, 5, rng)
        self.assertEqual(B.shape, (20, 5))
        with self.assertRaises(ValueError):
            randomUnstableMatrix(4, rng, unstable=5)

    def testRandomUnstableMatrixCountsExactly(self):
        rng = np.random.default_rng(17)
        for n, unstable in [(40, 10)] * 30 + [(80, 10)] * 5 + [(6, 6)]:
            A = randomUnstableMatrix(n, rng, unstable)
            moduli = np.abs(linalg.eigvals(A))
            self.assertEqual(int(np.sum(moduli > 1.0)), unstable)

    def testNonlinearOperatorNorm(self):
        rng = np.random.default_rng(4)
        A = rng.standard_normal((5, 5))
        value = nonlinearOperatorNorm(A, Activation.identity(), samples=5, seed=1)
        self.assertLessEqual(value, spectralNorm(A) * (1.0 + 1e-12))
        self.assertGreater(value, spectralNorm(A) * (1.0 - 1e-6))
        relu = Activation.leakyRelu(0.0)
        self.assertAlmostEqual(nonlinearOperatorNorm(np.eye(3), relu), 1.0)
        value = nonlinearOperatorNorm(A, relu, samples=5, seed=1)
        self.assertLessEqual(value, spectralNorm(A) * (1.0 + 1e-12))
        self.assertGreater(value, 0.0)


class TestGramians(unittest.TestCase):

    def testScalarGramian(self):
        GG, FF, gamma = gramians([[0.5]], [[1.0]], 1.0, 4)
        self.assertAlmostEqual(GG[0, 0], 1.328125)
        self.assertAlmostEqual(FF[0, 0], 1.328125)
        self.assertAlmostEqual(gamma[0, 0], 2.65625)

    def testGramianSequence(self):
        rng = np.random.default_rng(2)
        A = 0.4 * rng.standard_normal((3, 3))
        B = rng.standard_normal((3, 2))
        sequence = gramianSequence(A, B, 0.3, 5)
        for t in range(1, 6):
            assert_allclose(sequence[t - 1], gramians(A, B, 0.3, t)[2])

    def testCovarianceBounds(self):
        bundle = covarianceBounds([[0.5]], [[1.0]], 0.0, 2, 60)
        self.assertAlmostEqual(bundle.gammaMinus, 1.0)
        self.assertAlmostEqual(bundle.gammaPlus, 1.0)
        self.assertAlmostEqual(bundle.betaPlus, 4.0 / 3.0)
        gammaMinus, gammaPlus, betaPlus, kappa = bundle
        self.assertAlmostEqual(kappa, 1.0)
        bundle = covarianceBounds([[0.5]], [[2.0]], 0.0, 4, 60)
        self.assertAlmostEqual(bundle.gammaPlus, 4.0 * 1.3125)
        with self.assertRaises(ValueError):
            covarianceBounds([[0.5]], [[1.0]], 0.0, 1, 10)

    def testGramianMatchesExplicitSum(self):
        rng = np.random.default_rng(6)
        A = 0.5 * rng.standard_normal((4, 4)) / np.sqrt(4)
        B = rng.standard_normal((4, 2))
        drive = B @ B.T + 0.25 * np.eye(4)
        powers = [np.linalg.matrix_power(A, i) for i in range(12)]
        expected = sum(P @ drive @ P.T for P in powers)
        assert_allclose(gramians(A, B, 0.5, 12)[2], expected, atol=1e-10)

    def testMeanStateCovariance(self):
        rng = np.random.default_rng(8)
        A = 0.4 * rng.standard_normal((3, 3))
        B = rng.standard_normal((3, 2))
        K = 0.1 * rng.standard_normal((2, 3))
        times = [2, 3, 3, 7, 0]
        expected = np.mean([stateCovariance(A, B, K, 0.2, t) for t in times], axis=0)
        assert_allclose(meanStateCovariance(A, B, K, 0.2, times), expected,
                        atol=1e-12)
        with self.assertRaises(ValueError):
            meanStateCovariance(A, B, K, 0.2, [])

    def testStateCovariance(self):
        rng = np.random.default_rng(8)
        A = 0.4 * rng.standard_normal((3, 3))
        B = rng.standard_normal((3, 2))
        K = 0.1 * rng.standard_normal((2, 3))
        cov = stateCovariance(A, B, K, 0.2, 1)
        gamma = B @ B.T + 0.04 * np.eye(3)
        assert_allclose(cov[:3, :3], gamma)
        assert_allclose(cov[:3, 3:], -gamma @ K.T)
        assert_allclose(cov[3:, 3:], K @ gamma @ K.T + np.eye(2))
        cov = stateCovariance(A, B, np.zeros((2, 3)), 0.2, 0)
        assert_allclose(cov, np.block([[np.zeros((3, 3)), np.zeros((3, 2))],
                                       [np.zeros((2, 3)), np.eye(2)]]))


class TestRiccati(unittest.TestCase):

    def setUp(self):
        self.A = np.array([[1.2, 0.3], [0.0, 0.9]])
        self.B = np.array([[1.0], [0.5]])

    def testSolveDare(self):
        P = solveDare(self.A, self.B)
        expected = linalg.solve_discrete_are(self.A, self.B, np.eye(2), np.eye(1))
        assert_allclose(P, expected, rtol=1e-8)

    def testScalarDare(self):
        P = solveDare([[2.0]], [[1.0]])
        expected = linalg.solve_discrete_are(np.array([[2.0]]), np.array([[1.0]]),
                                             np.eye(1), np.eye(1))
        self.assertAlmostEqual(P[0, 0], expected[0, 0], places=8)

    def testDarePolicyStabilizes(self):
        for perturb in ('gain', 'riccati'):
            K = darePolicy(self.A, self.B, noiseVar=0.001, seed=3, perturb=perturb)
            self.assertEqual(K.shape, (1, 2))
            self.assertLess(spectralRadius(self.A - self.B @ K), 1.0)
        exact = darePolicy(self.A, self.B, noiseVar=0.0)
        P = linalg.solve_discrete_are(self.A, self.B, np.eye(2), np.eye(1))
        assert_allclose(exact, linalg.solve(np.eye(1) + self.B.T @ P @ self.B,
                                            self.B.T @ P @ self.A), rtol=1e-7)

    def testDarePolicyIsSeeded(self):
        first = darePolicy(self.A, self.B, seed=5)
        second = darePolicy(self.A, self.B, seed=5)
        assert_allclose(first, second)

    def testScalarDareOracle(self):
        P = solveDare([[1.0]], [[1.0]])
        self.assertAlmostEqual(P[0, 0], (1.0 + np.sqrt(5.0)) / 2.0, places=8)
        gain = dareGain(np.array([[1.0]]), np.array([[1.0]]), P)
        self.assertAlmostEqual(gain[0, 0], 0.6180340, places=7)

    def testDareWithoutDynamics(self):
        P = solveDare(np.zeros((3, 3)), np.eye(3))
        assert_allclose(P, np.eye(3), atol=1e-12)
        assert_allclose(darePolicy(np.zeros((3, 3)), np.eye(3), noiseVar=0.0),
                        np.zeros((3, 3)), atol=1e-12)

    def testDarePolicyStabilizesRandomSystems(self):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            A = randomUnstableMatrix(8, rng, unstable=2)
            B = randomInputMatrix(8, 4, rng)
            K = darePolicy(A, B, noiseVar=0.001, seed=seed)
            self.assertLess(spectralRadius(A - B @ K), 1.0)

    def testTable1WithoutLeakage(self):
        rows = [table1Trial(80, 50, [1.0], seed=seed, restarts=2) for seed in range(20)]
        self.assertTrue(1.0 <= np.mean([r['rho_A'] for r in rows]) <= 1.25)
        self.assertTrue(0.5 <= np.mean([r['rho_Aprime'] for r in rows]) <= 0.8)
        normA = np.mean([r['norm_A'] for r in rows])
        self.assertTrue(1.8 <= normA <= 2.3)
        nlNormA = np.mean([r['nl_norm_A'][0] for r in rows])
        self.assertAlmostEqual(nlNormA / normA, 1.0, places=3)

    def testNotStabilizable(self):
        with self.assertRaises(NotStabilizable):
            solveDare([[2.0]], [[0.0]])

        with self.assertRaises(ValueError):
            darePolicy(self.A, self.B, perturb='both')

    def testTable1Trial(self):
        row = table1Trial(8, 4, [0.0, 1.0], seed=2, unstable=2, restarts=3)
        self.assertGreater(row['rho_A'], 1.0)
        self.assertLess(row['rho_Aprime'], 1.0)
        self.assertEqual(len(row['nl_norm_A']), 2)
        self.assertLessEqual(row['nl_norm_A'][1], row['norm_A'] * (1.0 + 1e-9))
        self.assertGreater(row['nl_norm_A'][1], row['norm_A'] * 0.99)
        self.assertLessEqual(row['nl_norm_A'][0], row['norm_A'] * (1.0 + 1e-9))


class TestStabilityEstimate(unittest.TestCase):

    def testScalarLinear(self):
        system = LinearSystem([[0.6]], [[1.0]])
        estimate = estimateStability(system, zeroPolicy(system), NoiseSpec(0.1, seed=1),
                                     trials=5, horizon=40)
        self.assertAlmostEqual(estimate.rho, 0.6, places=6)
        self.assertAlmostEqual(estimate.cRho, 1.0, places=6)
        assert_allclose(estimate.envelope([0, 2]), [1.0, 0.36], rtol=1e-6)

    def testClosedLoopIsUsed(self):
        system = LinearSystem([[1.5]], [[1.0]])
        estimate = estimateStability(system, Policy([[1.0]]), NoiseSpec(0.0), trials=3,
                                     horizon=30)
        self.assertAlmostEqual(estimate.rho, 0.5, places=6)

    def testNonlinearEnvelopeHolds(self):
        rng = np.random.default_rng(12)
        A = 0.5 * rng.standard_normal((4, 4)) / 2.0
        B = rng.standard_normal((4, 2))
        system = NonlinearSystem(A, B, Activation.leakyRelu(0.5))
        noise = NoiseSpec(0.1, seed=3)
        estimate = estimateStability(system, zeroPolicy(system), noise, trials=10,
                                     horizon=30)
        self.assertLess(estimate.rho, 1.0)
        self.assertGreaterEqual(estimate.cRho, 1.0)
        ratios = pairedRatios(system, zeroPolicy(system), noise, 10, 30)
        bound = estimate.envelope(np.arange(31))
        envelope = ratios.max(axis=0)
        fitted = envelope > 1e-10
        self.assertTrue(np.all(envelope[fitted] <= bound[fitted] * (1.0 + 1e-9)))

    def testRateIsNotUnderestimated(self):
        rng = np.random.default_rng(10)
        for radius in (0.7, 0.9):
            A = rng.standard_normal((10, 10))
            A *= radius / spectralRadius(A)
            system = LinearSystem(A, np.eye(10))
            estimate = estimateStability(system, zeroPolicy(system),
                                         NoiseSpec(0.1, seed=2), trials=20, horizon=60)
            self.assertGreaterEqual(estimate.rho, radius - 0.05)

    def testUnstable(self):
        system = LinearSystem([[1.1]], [[1.0]])
        with self.assertRaises(UnstableSystem):
            estimateStability(system, zeroPolicy(system), NoiseSpec(0.0), trials=2,
                              horizon=10)

        with self.assertRaises(ValueError):
            estimateStability(system, zeroPolicy(system), NoiseSpec(0.0), horizon=1)
