# -*- coding: utf-8 -*-

import math
import os
import unittest

import numpy as np

from systraj.activation import Activation
from systraj.errors import Diverged, TrajectoryTooShort
from systraj.identify import (GDConfig, GDReport, experimentLearningRate,
                              gradientDescent, identify, isPlateau, mixingPeriod,
                              mixingTime, normalizedErrors, theoryLearningRate)
from systraj.losses import empiricalSamples
from systraj.system import LinearSystem, NoiseSpec, NonlinearSystem, zeroPolicy
from systraj.trajectory import simulate
from systraj.utils import readCsv


def quadratic(thetaStar):
    def objective(theta):
        diff = theta - thetaStar
        return 0.5 * float(np.sum(diff ** 2)), diff
    return objective


class TestGradientDescent(unittest.TestCase):

    def setUp(self):
        self.thetaStar = np.array([[1.0, -2.0], [0.5, 3.0]])

    def testErrorHalves(self):
        cfg = GDConfig(0.5, iterations=20, thetaStar=self.thetaStar, tol=0.0)
        report = gradientDescent(quadratic(self.thetaStar), cfg)
        self.assertEqual(report.iterations, 20)
        self.assertEqual(len(report.errors), 21)
        for k in range(20):
            self.assertAlmostEqual(report.errors[k + 1] / report.errors[k], 0.5)
        self.assertFalse(report.converged)

    def testDiverges(self):
        cfg = GDConfig(2.5, iterations=5000, thetaStar=self.thetaStar, tol=0.0)
        with self.assertRaises(Diverged) as context:
            gradientDescent(quadratic(self.thetaStar), cfg)
        self.assertTrue(np.all(np.isfinite(context.exception.lastIterate)))
        self.assertGreater(context.exception.iteration, 1)

    def testConverges(self):
        cfg = GDConfig(1.0, iterations=10, thetaStar=self.thetaStar)
        report = gradientDescent(quadratic(self.thetaStar), cfg)
        self.assertTrue(report.converged)
        self.assertEqual(report.iterations, 1)
        np.testing.assert_allclose(report.theta, self.thetaStar)

    def testStartingPoint(self):
        cfg = GDConfig(0.5, iterations=1, thetaStar=self.thetaStar, tol=0.0)
        report = gradientDescent(quadratic(self.thetaStar), cfg,
                                 theta0=self.thetaStar + 1.0)
        self.assertAlmostEqual(report.errors[0], 2.0)
        with self.assertRaises(ValueError):
            gradientDescent(quadratic(self.thetaStar), GDConfig(0.5))

    def testConfigErrors(self):
        with self.assertRaises(ValueError):
            GDConfig(0.0)

        with self.assertRaises(ValueError):
            GDConfig(0.1, iterations=0)

    def testPlateau(self):
        self.assertTrue(isPlateau(np.ones(40)))
        self.assertFalse(isPlateau(0.5 ** np.arange(40)))
        self.assertFalse(isPlateau(np.ones(10)))
        errors = np.concatenate([0.9 ** np.arange(100), np.full(200, 0.9 ** 100)])
        cfg = GDConfig(0.5, iterations=1000, stopOnPlateau=True, plateauEvery=50)

        def objective(theta):
            return 0.0, np.ones_like(theta)

        def errorFn(theta):
            return errors[min(len(errors) - 1, int(-theta[0, 0] / 0.5))], 0.0

        report = gradientDescent(objective, cfg, errorFn, theta0=np.zeros((1, 1)))
        self.assertLess(report.iterations, 1000)
        self.assertEqual(report.iterations % 50, 0)

    def testReport(self):
        report = GDReport(np.zeros((1, 1)), [4.0, 2.0, 1.0, 1.02, 1.0],
                          [1.0, 0.5, 0.2, 0.2, 0.2], [0.4, 0.2, 0.04, 0.03, 0.03],
                          [0.1] * 5, 4, False)
        self.assertEqual(report.finalError, 1.0)
        self.assertEqual(report.plateauIteration, 2)
        self.assertEqual(report.iterationsTo(0.05), 2)
        self.assertIsNone(report.iterationsTo(0.01))
        filePath = 'tests/data/report_test.csv'
        try:
            report.toFile(filePath, 7)
            header, rows = readCsv(filePath)
            self.assertEqual(header, ['iter', 'err_A', 'err_B', 'loss', 'seed'])
            self.assertEqual(rows[2][4], '7')
            self.assertEqual(len(rows), 5)
            self.assertEqual(rows[2][0], '2')
        finally:
            if os.path.exists(filePath):
                os.remove(filePath)


class TestMixingTime(unittest.TestCase):

    def setUp(self):
        self.linear = {'cRho': 2.0, 'rho': 0.5, 'betaPlus': 3.0, 'gammaPlus': 2.0,
                       'n': 4, 'p': 2}

    def testPlugIn(self):
        constants = {'cRho': 1.0, 'rho': 0.5, 'kPhi': math.exp(1.9), 'n': 1, 'd': 4}
        self.assertEqual(mixingPeriod('generic', constants, 4), 5)
        constants = {'cRho': 1.0, 'rho': 1e-9, 'kPhi': math.e ** 0.5, 'n': 1, 'd': 4}
        self.assertEqual(mixingPeriod('generic', constants, 4), 2)

    def testLiteralLeadingConstant(self):
        constants = {'cRho': 3.0, 'rho': 0.5, 'kPhi': math.exp(1.9), 'n': 1, 'd': 4,
                     'leadingConstant': 'literal', 'C': 2.0}
        # C rho = 1 leaves the plug-in example unchanged
        self.assertEqual(mixingPeriod('generic', constants, 4), 5)

    def testFixedPoint(self):
        plan = mixingTime('linear', self.linear, 10000)
        self.assertEqual(plan.L, 20)
        self.assertEqual(plan.N, 499)
        self.assertEqual(mixingPeriod('linear', self.linear, plan.N), plan.L)
        self.assertEqual(plan.mode, 'linear')

    def testSelfConsistency(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            constants = {'cRho': rng.uniform(1.0, 5.0), 'rho': rng.uniform(0.1, 0.9),
                         'thetaStarNorm': rng.uniform(0.5, 10.0),
                         'sigma': rng.uniform(0.0, 1.0), 'n': int(rng.integers(2, 50))}
            plan = mixingTime('nonlinear', constants, 100000)
            self.assertEqual(plan.N, (100000 - plan.L) // plan.L)
            self.assertLessEqual(mixingPeriod('nonlinear', constants, plan.N), plan.L)

    def testMonotoneInMixing(self):
        periods = []
        for rho in (0.2, 0.5, 0.8, 0.95):
            constants = dict(self.linear, rho=rho)
            periods.append(mixingTime('linear', constants, 100000).L)
        self.assertEqual(periods, sorted(periods))

    def testTooShort(self):
        with self.assertRaises(TrajectoryTooShort) as context:
            mixingTime('linear', self.linear, 5)
        self.assertEqual(context.exception.minimalT, 14)

    def testErrors(self):
        with self.assertRaises(ValueError):
            mixingTime('linear', dict(self.linear, rho=1.0), 1000)

        with self.assertRaises(ValueError):
            mixingTime('linear', {'rho': 0.5}, 1000)

        with self.assertRaises(ValueError):
            mixingTime('quadratic', self.linear, 1000)


class TestLearningRates(unittest.TestCase):

    def testTheory(self):
        self.assertAlmostEqual(theoryLearningRate('generic', alpha=1.0, beta=1.0),
                               1.0 / 16.0)
        self.assertAlmostEqual(theoryLearningRate('linear', gammaMinus=1.0,
                                                  gammaPlus=2.0), 1.0 / 64.0)
        self.assertAlmostEqual(theoryLearningRate('nonlinear', gamma=1.0, rho=0.5,
                                                  cRho=1.0, sigma=0.0, n=2),
                               0.0625 / 128.0)
        with self.assertRaises(ValueError):
            theoryLearningRate('linear', gammaMinus=0.0, gammaPlus=2.0)

    def testExperiment(self):
        self.assertAlmostEqual(experimentLearningRate(2000), 0.1 * 1999 / 2000)
        self.assertAlmostEqual(experimentLearningRate(100, 10, 0.2), 0.18)
        with self.assertRaises(ValueError):
            experimentLearningRate(5, 5)


class TestIdentify(unittest.TestCase):

    def testNoiselessRecovery(self):
        A = np.array([[0.5, 0.2], [-0.1, 0.3]])
        system = LinearSystem(A, np.eye(2))
        traj = simulate(system, zeroPolicy(system), NoiseSpec(0.0, seed=2), 200)
        X, _, _ = empiricalSamples(traj, 1)
        eta = 1.0 / np.linalg.eigvalsh(X.T @ X / X.shape[0])[-1]
        cfg = GDConfig(eta, iterations=5000, thetaStar=system.theta, tol=1e-13)
        report = identify(traj, cfg)
        self.assertLessEqual(report.finalError, 1e-8)
        self.assertLessEqual(report.errA[-1], 1e-10)
        self.assertLessEqual(report.errB[-1], 1e-10)

    def testNonlinearErrorDecreases(self):
        rng = np.random.default_rng(6)
        A = 0.3 * rng.standard_normal((3, 3)) / np.sqrt(3)
        B = rng.standard_normal((3, 2)) / np.sqrt(3)
        system = NonlinearSystem(A, B, Activation.leakyRelu(0.5))
        traj = simulate(system, zeroPolicy(system), NoiseSpec(0.05, seed=4), 1000)
        cfg = GDConfig(0.5, iterations=300, thetaStar=system.theta)
        report = identify(traj, cfg)
        self.assertLess(report.errA[-1], 0.1 * report.errA[0])
        self.assertLess(report.errB[-1], 0.1 * report.errB[0])
        self.assertEqual(report.errA[0], 1.0)

    def testNormalizedErrors(self):
        system = NonlinearSystem(np.eye(2), 2.0 * np.ones((2, 1)), Activation.softplus(),
                                 'postadd')
        errorFn = normalizedErrors(system, system.theta)
        errA, errB = errorFn(np.zeros((2, 2)))
        self.assertEqual(errA, 1.0)
        self.assertTrue(np.isnan(errB))

    def testTooShort(self):
        system = LinearSystem(np.eye(1) * 0.5, np.eye(1))
        traj = simulate(system, zeroPolicy(system), NoiseSpec(0.1), 1)
        with self.assertRaises(ValueError):
            identify(traj, GDConfig(0.1, thetaStar=system.theta))
