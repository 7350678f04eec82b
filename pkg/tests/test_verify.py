# -*- coding: utf-8 -*-

import os
import unittest

import numpy as np
from numpy.testing import assert_allclose

from systraj.activation import Activation
from systraj.losses import auxiliaryEstimate, auxiliarySamples, empiricalGradient
from systraj.stability import covarianceBounds, estimateStability
from systraj.system import LinearSystem, NoiseSpec, NonlinearSystem, zeroPolicy
from systraj.trajectory import rollout, simulate
from systraj.utils import readCsv
from systraj.verify import (HEADER, AssumptionReport, checkBoundedStates,
                            checkCovarianceSandwich, checkGradientConcentration,
                            checkLipschitzGradient, checkOpc, checkStability,
                            checkSubtrajectoryIndependence, checkTruncationGap,
                            expectedEmpiricalGradients,
                            finiteDiffGradient, populationGradient, verifyAll,
                            writeReports)


class TestAssumptionReport(unittest.TestCase):

    def testRows(self):
        report = AssumptionReport('OPC')
        report.upper('a', 1.0, 2.0)
        report.lower('b', 1.0, 2.0, slack=0.5)
        report.diagnostic('c', 3.0)
        self.assertFalse(report.passed)
        self.assertEqual([r['passed'] for r in report.rows], [True, False, None])
        self.assertEqual(report.rows[0]['ratio'], 0.5)
        self.assertTrue(np.isnan(report.rows[2]['ratio']))

    def testWriteReports(self):
        report = AssumptionReport('Stability')
        report.upper('t=0', 1.0, 1.0, samples=3)
        filePath = 'tests/data/verify_test.csv'
        try:
            writeReports(filePath, [report], 11)
            header, rows = readCsv(filePath)
            self.assertEqual(header, HEADER)
            self.assertEqual(rows[0][:2], ['Stability', 't=0'])
            self.assertEqual(rows[0][5], '1')
            self.assertEqual(header[-1], 'seed')
            self.assertEqual(rows[0][-1], '11')
        finally:
            if os.path.exists(filePath):
                os.remove(filePath)


class TestGradients(unittest.TestCase):

    def testFiniteDiffGradient(self):
        theta = np.array([[1.0, -2.0], [0.5, 0.0]])
        numeric = finiteDiffGradient(lambda th: float(np.sum(th ** 2)), theta)
        assert_allclose(numeric, 2.0 * theta, atol=1e-8)
        with self.assertRaises(ValueError):
            finiteDiffGradient(np.sum, theta, eps=0.0)

    def testPopulationGradient(self):
        rng = np.random.default_rng(1)
        system = LinearSystem(0.4 * rng.standard_normal((3, 3)) / np.sqrt(3),
                              rng.standard_normal((3, 2)))
        policy = zeroPolicy(system)
        noise = NoiseSpec(0.3, seed=2)
        theta = system.theta + 0.5 * rng.standard_normal(system.theta.shape)
        exact = populationGradient(theta, system, policy, noise, 3)
        estimate = auxiliaryEstimate(theta, system, policy, noise, 3, 50000)
        self.assertTrue(np.all(np.abs(estimate.gradient - exact) <=
                               4.0 * estimate.gradientStdError + 1e-3))
        assert_allclose(populationGradient(system.theta, system, policy, noise, 3),
                        np.zeros_like(theta))

    def testPopulationGradientOverTrajectory(self):
        rng = np.random.default_rng(4)
        system = LinearSystem(0.5 * rng.standard_normal((2, 2)) / np.sqrt(2), np.eye(2))
        policy = zeroPolicy(system)
        noise = NoiseSpec(0.3, seed=5)
        theta = system.theta + 0.5 * rng.standard_normal(system.theta.shape)
        exact = populationGradient(theta, system, policy, noise, 2, 40)
        mean = np.mean([empiricalGradient(theta, simulate(system, policy,
                                                          noise.withSeed(r), 40), 2)
                        for r in range(400)], axis=0)
        assert_allclose(mean, exact, atol=0.08)
        assert_allclose(expectedEmpiricalGradients([theta], system, policy, noise, 2,
                                                   40)[0], exact)
        with self.assertRaises(ValueError):
            populationGradient(theta, system, policy, noise, 2, 2)



class TestChecks(unittest.TestCase):

    def setUp(self):
        self.scalar = LinearSystem([[0.6]], [[1.0]])
        self.noise = NoiseSpec(0.1, seed=3)

    def testStability(self):
        policy = zeroPolicy(self.scalar)
        estimate = estimateStability(self.scalar, policy, self.noise, trials=4,
                                     horizon=30)
        report = checkStability(estimate, self.scalar, policy, self.noise, trials=10)
        self.assertTrue(report.passed)
        self.assertEqual(len(report.rows), 31)

    def testBoundedStates(self):
        policy = zeroPolicy(self.scalar)
        states, zs, ws = rollout(self.scalar, policy, self.noise, 200, 50)
        report = checkBoundedStates(states, zs, ws, self.scalar, policy, 1.0, 0.6,
                                    sigma=0.1)
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.constants['betaPlusMean'],
                               (0.1 + np.sqrt(np.mean(zs ** 2))) / 0.4)
        with self.assertRaises(ValueError):
            checkBoundedStates(states, zs, ws, self.scalar, policy, 1.0, 1.0)

    def testOpcLinear(self):
        system = LinearSystem(np.zeros((2, 2)), np.eye(2))
        noise = NoiseSpec(1.0, seed=4)
        alpha, beta, opc, smooth = checkOpc(system, zeroPolicy(system), noise, 2, 1.0,
                                            2, 20000)
        self.assertGreater(alpha, 0.9)
        self.assertLess(beta, 2.1)
        self.assertLessEqual(alpha, beta)
        self.assertEqual(len(opc.rows), 6)
        self.assertEqual(opc.constants['alpha'], alpha)

    def testOpcWithinCovarianceBounds(self):
        rng = np.random.default_rng(9)
        system = LinearSystem(0.25 * rng.standard_normal((4, 4)),
                              0.5 * rng.standard_normal((4, 4)))
        noise = NoiseSpec(0.5, seed=10)
        alpha, beta, _, _ = checkOpc(system, zeroPolicy(system), noise, 13, 1.0, 2,
                                     50000)
        bundle = covarianceBounds(system.A, system.B, 0.5, 13, 13)
        self.assertGreaterEqual(alpha, 0.9 * bundle.gammaMinus)
        self.assertLessEqual(beta, 1.1 * bundle.gammaPlus)

    def testOpcLeakyRelu(self):
        rng = np.random.default_rng(5)
        system = NonlinearSystem(0.3 * rng.standard_normal((2, 2)), np.eye(2),
                                 Activation.leakyRelu(0.5))
        noise = NoiseSpec(0.0, seed=6)
        alpha, _, opc, smooth = checkOpc(system, zeroPolicy(system), noise, 3, 1.0, 2,
                                         5000)
        X = auxiliarySamples(system, zeroPolicy(system), noise, 3, 5000)[0]
        floor = 0.25 * np.linalg.eigvalsh(X.T @ X / X.shape[0])[0]
        self.assertGreaterEqual(alpha, floor * (1.0 - 1e-9))
        self.assertTrue(opc.passed)
        self.assertTrue(smooth.passed)

    def testLipschitzGradient(self):
        system = LinearSystem(np.zeros((2, 2)), np.eye(2))
        report = checkLipschitzGradient(system, zeroPolicy(system), NoiseSpec(1.0), 2,
                                        1.0, 3, 5000)
        self.assertEqual(len(report.rows), 3)
        self.assertTrue(report.passed)
        # the auxiliary gradient of a linear system is linear in theta
        self.assertLess(report.constants['lipschitz'], 2.2)

    def testGradientConcentration(self):
        system = LinearSystem([[0.5, 0.1], [0.0, 0.3]], np.eye(2))
        report = checkGradientConcentration(system, zeroPolicy(system), self.noise, 10,
                                            [200, 800, 3200], reps=4)
        deviations = report.constants['deviations']
        self.assertEqual(deviations.shape, (2, 3))
        self.assertTrue(np.all(deviations[:, -1] < deviations[:, 0]))

    def testGradientConcentrationExponentAtShortPeriod(self):
        system = LinearSystem(0.8 * np.eye(4), np.eye(4))
        L = 2
        Tgrid = [L * (N + 1) for N in (125, 500, 2000, 8000)]
        report = checkGradientConcentration(system, zeroPolicy(system),
                                            NoiseSpec(0.1, seed=6), L, Tgrid)
        exponents = [r for r in report.rows if r['point'].endswith('exponent')]
        self.assertEqual(len(exponents), 2)
        for row in exponents:
            self.assertTrue(row['passed'])
            self.assertTrue(-0.65 <= row['measured'] <= -0.35)

        with self.assertRaises(ValueError):
            checkGradientConcentration(system, zeroPolicy(system), self.noise, L,
                                       [L, 100])

    def testTruncationGap(self):
        rng = np.random.default_rng(7)
        system = LinearSystem(0.5 * rng.standard_normal((3, 3)) / np.sqrt(3),
                              rng.standard_normal((3, 2)))
        policy = zeroPolicy(system)
        estimate = estimateStability(system, policy, self.noise)
        traj = simulate(system, policy, self.noise, 300)
        thetas = [system.theta, system.theta + 0.3]
        report = checkTruncationGap(traj, thetas, range(2, 8), estimate.cRho,
                                    estimate.rho)
        bounded = [r for r in report.rows if r['point'].endswith(('loss', 'gradient'))]
        self.assertEqual(len(bounded), 2 * 2 * 6)
        self.assertTrue(all(r['passed'] for r in bounded))

    def testTruncationGapDecaysWithPeriod(self):
        system = LinearSystem(0.95 * np.eye(2), np.eye(2))
        policy = zeroPolicy(system)
        noise = NoiseSpec(0.01, seed=12)
        estimate = estimateStability(system, policy, noise)
        traj = simulate(system, policy, noise, 2000)
        report = checkTruncationGap(traj, [system.theta], range(2, 13), estimate.cRho,
                                    estimate.rho)
        slopes = [r for r in report.rows if r['point'].endswith('slope')]
        self.assertEqual(len(slopes), 1)
        self.assertTrue(slopes[0]['passed'])
        self.assertLess(slopes[0]['measured'], 0.0)

    def testCovarianceSandwich(self):
        system = LinearSystem([[0.5, 0.2], [0.0, 0.4]], [[1.0], [0.5]])
        report = checkCovarianceSandwich(system, zeroPolicy(system), self.noise, 5,
                                         20000)
        self.assertTrue(report.passed)
        with self.assertRaises(ValueError):
            checkCovarianceSandwich(NonlinearSystem(np.eye(1), np.eye(1),
                                                    Activation.softplus()),
                                    zeroPolicy(system), self.noise, 5, 10)

    def testSubtrajectoryIndependence(self):
        system = LinearSystem([[0.5]], [[1.0]])
        report = checkSubtrajectoryIndependence(system, zeroPolicy(system), self.noise,
                                                40, 4, reps=300)
        self.assertEqual(len(report.rows), 2)
        for row in report.rows:
            self.assertTrue(0.0 <= row['measured'] <= 1.0)
        report = checkSubtrajectoryIndependence(system, zeroPolicy(system), self.noise,
                                                10, 1, reps=20)
        self.assertTrue(report.passed)

    def testVerifyAll(self):
        system = LinearSystem([[0.5, 0.1], [0.0, 0.3]], [[1.0], [0.2]])
        policy = zeroPolicy(system)
        estimate = estimateStability(system, policy, self.noise)
        reports = verifyAll(system, policy, self.noise, estimate, 2, 60, M=2000,
                            Tgrid=[100, 400], reps=2, ensemble=20)
        self.assertEqual([r.assumption for r in reports],
                         ['Stability', 'Boundedness', 'OPC', 'Smoothness',
                          'LipschitzGrad', 'GradConcentration', 'TruncationGap',
                          'CovarianceSandwich', 'Independence'])
