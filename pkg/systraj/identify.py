# -*- coding: utf-8 -*-
""" This module defines the gradient descent driver, the selection of the
sampling period (mixing time) and the learning rates.

Reference
---------
"""

import logging
import math

import numpy as np

from .errors import Diverged, TrajectoryTooShort
from .losses import empiricalSamples, regressionLossAndGradient
from .utils import writeCsv

logger = logging.getLogger(__name__)

GENERIC = 'generic'
LINEAR = 'linear'
NONLINEAR = 'nonlinear'


class GDConfig(object):
    """
    Settings of :func:`systraj.identify.gradientDescent`.

    Constructor arguments:

    ``learningRate``

        The fixed step size, positive.

    ``iterations``

        The iteration cap, at least 1. Default is `1000`.

    ``theta0``

        The initial iterate. Default is `None` (zero).

    ``thetaStar``

        The ground truth, used to track the error. Default is `None`.

    ``tol``

        Stop once the gradient norm falls below it. Default is `1e-10`.

    ``stopOnPlateau``

        Stop once the tracked error plateaus. Default is `False`.

    ``plateauTol``

        Relative standard deviation of the last 10 % of the errors under which
        they form a plateau. Default is `1e-3`.

    ``plateauEvery``

        Check for a plateau every so many iterations. Default is `50`.

    ``blowup``

        Iterates with a larger norm count as diverged. Default is `1e100`.
    """

    def __init__(self, learningRate, iterations=1000, theta0=None, thetaStar=None,
                 tol=1e-10, stopOnPlateau=False, plateauTol=1e-3, plateauEvery=50,
                 blowup=1e100):
        if not learningRate > 0.0:
            raise ValueError('learningRate must be positive')
        if iterations < 1:
            raise ValueError('iterations must be at least 1')
        self.learningRate = float(learningRate)
        self.iterations = int(iterations)
        self.theta0 = theta0
        self.thetaStar = thetaStar
        self.tol = float(tol)
        self.stopOnPlateau = stopOnPlateau
        self.plateauTol = float(plateauTol)
        self.plateauEvery = int(plateauEvery)
        self.blowup = float(blowup)


class GDReport(object):
    """
    The trace of a gradient descent run. ``errors``, ``losses``, ``errA`` and
    ``errB`` hold one entry per visited iterate (``iterations + 1`` entries).
    """

    def __init__(self, theta, errors, losses, errA, errB, iterations, converged):
        self.theta = theta
        self.errors = np.asarray(errors, dtype=float)
        self.losses = np.asarray(losses, dtype=float)
        self.errA = np.asarray(errA, dtype=float)
        self.errB = np.asarray(errB, dtype=float)
        self.iterations = iterations
        self.converged = converged

    @property
    def finalError(self):
        return float(self.errors[-1]) if len(self.errors) else float('nan')

    @property
    def plateauIteration(self):
        """ First iteration whose error is within 5 % of the best one """
        if not len(self.errors) or np.all(np.isnan(self.errors)):
            return None
        best = np.nanmin(self.errors)
        return int(np.flatnonzero(self.errors <= 1.05 * best + 1e-300)[0])

    def iterationsTo(self, threshold):
        """ First iteration with ``errA`` at most ``threshold``, `None` if never """
        hits = np.flatnonzero(self.errA <= threshold)
        return int(hits[0]) if hits.size else None

    def rows(self, seed=None):
        for i in range(len(self.losses)):
            yield [i, self.errA[i], self.errB[i], self.losses[i], seed]

    def toFile(self, filePath, seed):
        """ Writes one row per iterate, tagged with the ``seed`` of the run """
        writeCsv(filePath, ['iter', 'err_A', 'err_B', 'loss', 'seed'], self.rows(seed))


def isPlateau(errors, fraction=0.1, tol=1e-3, minimum=20):
    errors = np.asarray(errors, dtype=float)
    if errors.size < minimum:
        return False
    tail = errors[-max(2, int(errors.size * fraction)):]
    mean = float(np.mean(tail))
    if mean == 0.0:
        return True
    return float(np.std(tail)) / abs(mean) <= tol


def gradientDescent(objective, cfg, errorFn=None, theta0=None):
    """
    Runs ``theta <- theta - eta * grad`` until the gradient norm drops below
    ``cfg.tol`` or the iteration cap is reached.

    Arguments:

    ``objective``

        A function returning ``(loss, gradient)`` for a parameter.

    ``cfg``

        A :class:`systraj.identify.GDConfig`.

    ``errorFn``

        Optional function returning the ``(errA, errB)`` pair tracked per
        iterate. Default is `None`.

    ``theta0``

        Overrides ``cfg.theta0``. Default is `None`.

    Raises :class:`systraj.errors.Diverged` on a non finite or exploding
    iterate.
    """
    theta = cfg.theta0 if theta0 is None else theta0
    if theta is None:
        if cfg.thetaStar is None:
            raise ValueError('theta0 or thetaStar is needed to size the parameter')
        theta = np.zeros_like(np.asarray(cfg.thetaStar, dtype=float))
    theta = np.array(theta, dtype=float)
    thetaStar = None if cfg.thetaStar is None else np.asarray(cfg.thetaStar, dtype=float)
    errors, losses, errA, errB = [], [], [], []
    converged = False
    iteration = 0
    while True:
        loss, grad = objective(theta)
        losses.append(loss)
        errors.append(np.nan if thetaStar is None else
                      float(np.linalg.norm(theta - thetaStar)))
        pair = errorFn(theta) if errorFn is not None else (errors[-1], np.nan)
        errA.append(pair[0])
        errB.append(pair[1])
        if np.linalg.norm(grad) <= cfg.tol:
            converged = True
            break
        if iteration == cfg.iterations:
            break
        if (cfg.stopOnPlateau and iteration and iteration % cfg.plateauEvery == 0 and
                isPlateau(errA, tol=cfg.plateauTol)):
            break
        update = theta - cfg.learningRate * grad
        iteration += 1
        if not np.all(np.isfinite(update)) or np.linalg.norm(update) > cfg.blowup:
            raise Diverged(theta, iteration)
        theta = update
    logger.info('Gradient descent stopped after %d iterations (converged=%s)',
                iteration, converged)
    return GDReport(theta, errors, losses, errA, errB, iteration, converged)


class MixingPlan(object):
    """
    A sampling period ``L`` and the sample count ``N = (T - L) // L`` it
    leaves, with the constants used to pick them.
    """

    def __init__(self, L, N, constants, mode):
        self.L = int(L)
        self.N = int(N)
        self.constants = constants
        self.mode = mode

    def __repr__(self):
        return 'MixingPlan(L=%d, N=%d, mode=%s)' % (self.L, self.N, self.mode)


_REQUIRED = {
    GENERIC: ('cRho', 'rho', 'kPhi', 'n', 'd'),
    LINEAR: ('cRho', 'rho', 'betaPlus', 'gammaPlus', 'n', 'p'),
    NONLINEAR: ('cRho', 'rho', 'thetaStarNorm', 'sigma', 'n'),
}


def mixingArgument(mode, constants, N):
    """ The argument of the logarithm in the sampling period formula """
    c = constants
    C = c.get('C', 1.0)
    prefactor = C * c['cRho']
    if mode == GENERIC:
        if c.get('leadingConstant', 'product') == 'literal':
            prefactor = C * c['rho']
        return prefactor * c['kPhi'] * c['n'] * math.sqrt(N / float(c['d']))
    if mode == LINEAR:
        return prefactor * c['betaPlus'] * N * (c['n'] + c['p']) / c['gammaPlus']
    stationary = c['thetaStarNorm'] * c['cRho'] * (1.0 + c['sigma']) / (1.0 - c['rho'])
    return prefactor * (1.0 + stationary) * N * c['n']


def mixingPeriod(mode, constants, N):
    argument = mixingArgument(mode, constants, N)
    return max(1, int(math.ceil(1.0 + math.log(argument) / (1.0 - constants['rho']))))


def mixingTime(mode, constants, T, maxSweeps=100):
    """
    Picks the sampling period ``L`` from the fixed point of
    ``L = ceil(1 + log(argument(N)) / (1 - rho))`` with ``N = (T - L) // L``,
    iterating from ``L = 1``.

    Arguments:

    ``mode``

        `generic` (``C cRho kPhi n sqrt(N / d)``), `linear`
        (``C cRho betaPlus N (n + p) / gammaPlus``) or `nonlinear`
        (``C cRho (1 + ||Theta*|| cRho (1 + sigma) / (1 - rho)) N n``).

    ``constants``

        Dictionary of the constants of the mode; ``C`` defaults to `1`.

    ``T``

        The trajectory length.

    Raises :class:`systraj.errors.TrajectoryTooShort` when no period leaves a
    sample.
    """
    if mode not in _REQUIRED:
        raise ValueError('Unknown mode %s' % mode)
    missing = [k for k in _REQUIRED[mode] if k not in constants]
    if missing:
        raise ValueError('Missing constants: %s' % ', '.join(missing))
    if not 0.0 < constants['rho'] < 1.0:
        raise ValueError('rho must lie in (0, 1)')
    minimalT = 2 * mixingPeriod(mode, constants, 1)

    def samples(L):
        N = (T - L) // L
        if N < 1:
            raise TrajectoryTooShort(minimalT, T)
        return N

    L = 1
    seen = [L]
    for sweep in range(maxSweeps):
        nextL = mixingPeriod(mode, constants, samples(L))
        if nextL == L:
            logger.info('Sampling period L=%d found after %d sweeps', L, sweep + 1)
            return MixingPlan(L, samples(L), dict(constants), mode)
        if nextL in seen:
            break
        seen.append(nextL)
        L = nextL
    # The map L -> period(N(L)) is non increasing; take the smallest L it
    # does not exceed.
    L = 1
    while mixingPeriod(mode, constants, samples(L)) > L:
        L += 1
    logger.info('Sampling period oscillates, using L=%d', L)
    return MixingPlan(L, samples(L), dict(constants), mode)


def _positive(**values):
    for name, value in values.items():
        if not value > 0.0:
            raise ValueError('%s must be positive' % name)


def theoryLearningRate(mode, **constants):
    """
    The learning rate of the convergence results:

    * `generic`: ``alpha / (16 beta^2)``
    * `linear`: ``gammaMinus / (16 gammaPlus^2)``
    * `nonlinear`: ``gamma^2 (1 - rho)^4 / (32 cRho^4 (1 + sigma)^2 n^2)``
    """
    c = constants
    if mode == GENERIC:
        _positive(alpha=c['alpha'], beta=c['beta'])
        return c['alpha'] / (16.0 * c['beta'] ** 2)
    if mode == LINEAR:
        _positive(gammaMinus=c['gammaMinus'], gammaPlus=c['gammaPlus'])
        return c['gammaMinus'] / (16.0 * c['gammaPlus'] ** 2)
    if mode == NONLINEAR:
        _positive(gamma=c['gamma'], rho=c['rho'], cRho=c['cRho'], n=c['n'])
        if c['sigma'] < 0.0:
            raise ValueError('sigma must be non negative')
        if c['rho'] >= 1.0:
            raise ValueError('rho must be smaller than 1')
        return (c['gamma'] ** 2 * (1.0 - c['rho']) ** 4 /
                (32.0 * c['cRho'] ** 4 * (1.0 + c['sigma']) ** 2 * c['n'] ** 2))
    raise ValueError('Unknown mode %s' % mode)


def experimentLearningRate(T, L=1, scale=0.1):
    """
    The step ``scale / T`` on the summed squared loss, expressed for the loss
    averaged over the ``T - L`` samples.
    """
    if T <= L:
        raise ValueError('T must exceed L')
    return scale * (T - L) / float(T)


def normalizedErrors(system, thetaStar):
    """
    Returns the function ``theta -> (||A - A^||^2 / ||A||^2,
    ||B - B^||^2 / ||B||^2)`` over the blocks of ``system`` (`nan` when the
    block is not learned).
    """
    blocks = system.thetaBlocks()
    thetaStar = np.asarray(thetaStar, dtype=float)

    def ratio(theta, cols):
        scale = float(np.sum(thetaStar[:, cols] ** 2))
        error = float(np.sum((theta[:, cols] - thetaStar[:, cols]) ** 2))
        return error / scale if scale > 0.0 else error

    def errorFn(theta):
        errA = ratio(theta, blocks['A'])
        errB = ratio(theta, blocks['B']) if 'B' in blocks else float('nan')
        return errA, errB

    return errorFn


def identify(traj, cfg, plan=None, system=None):
    """
    Learns the parameter of ``traj.system`` by gradient descent on the
    empirical loss with churn period ``plan.L`` (default 1).

    Arguments:

    ``traj``

        A :class:`systraj.trajectory.Trajectory`.

    ``cfg``

        A :class:`systraj.identify.GDConfig`. When ``cfg.thetaStar`` is set the
        report tracks the normalized errors of ``A`` and ``B``.

    ``plan``

        A :class:`systraj.identify.MixingPlan`. Default is `None`.

    ``system``

        The model structure to fit. Default is `None` (``traj.system``).
    """
    system = traj.system if system is None else system
    L = 1 if plan is None else plan.L
    if traj.T <= L:
        raise ValueError('The trajectory must be longer than L = %d' % L)
    X, Y, offset = empiricalSamples(traj, L)
    theta0 = np.zeros_like(system.theta) if cfg.theta0 is None else cfg.theta0

    def objective(theta):
        return regressionLossAndGradient(system, theta, X, Y, offset)

    errorFn = None if cfg.thetaStar is None else normalizedErrors(system, cfg.thetaStar)
    return gradientDescent(objective, cfg, errorFn, theta0)
