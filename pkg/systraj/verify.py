# -*- coding: utf-8 -*-
""" This module checks the assumptions of the learning guarantees on data:
stability envelopes, bounded states, one-point convexity and smoothness of
the auxiliary loss, gradient concentration, truncation gaps, covariance
sandwiches and the independence of sub-sampled states.

Every check returns a :class:`systraj.verify.AssumptionReport` whose rows
are written to the verify CSV.

Reference
---------
"""

import logging

import numpy as np
from scipy import linalg, stats

from .losses import (auxiliaryEstimate, auxiliarySamples, empiricalGradient,
                     empiricalLoss, jacobianConstants, truncatedGradient,
                     truncatedLoss)
from .stability import gramians, meanStateCovariance, pairedRatios, stateCovariance
from .trajectory import Trajectory, rollout, simulate, subsample
from .utils import (PROBE_STREAM, deriveSeed, fitLogSlope, randomUnitVectors,
                    streamRng, writeCsv)

logger = logging.getLogger(__name__)

STABILITY = 'Stability'
BOUNDEDNESS = 'Boundedness'
OPC = 'OPC'
SMOOTHNESS = 'Smoothness'
LIPSCHITZ_GRAD = 'LipschitzGrad'
GRAD_CONCENTRATION = 'GradConcentration'
TRUNCATION_GAP = 'TruncationGap'
COVARIANCE_SANDWICH = 'CovarianceSandwich'
INDEPENDENCE = 'Independence'

# Accepted range of the fitted decay exponent of the gradient deviation
EXPONENT_RANGE = (-0.65, -0.35)

HEADER = ['assumption', 'point', 'measured', 'bound', 'ratio', 'passed', 'std_error',
          'samples', 'seed']


class AssumptionReport(object):
    """
    The rows of one assumption check. A row either passes, fails, or is a
    diagnostic (``passed`` is `None`).

    ``assumption``

        The assumption identifier, e.g. `OPC`.

    ``constants``

        The constants estimated along the way. Default is `{}`.
    """

    def __init__(self, assumption, constants=None):
        self.assumption = assumption
        self.constants = {} if constants is None else dict(constants)
        self.rows = []

    def __repr__(self):
        return 'AssumptionReport(%s, passed=%s, rows=%d)' % (
            self.assumption, self.passed, len(self.rows))

    def add(self, point, measured, bound, passed, stdError=float('nan'), samples=0):
        measured = float(measured)
        bound = float(bound)
        if bound != 0.0 and np.isfinite(bound):
            ratio = measured / bound
        else:
            ratio = float('nan')
        self.rows.append({
            'point': point, 'measured': measured, 'bound': bound, 'ratio': ratio,
            'passed': passed, 'stdError': float(stdError), 'samples': int(samples)
        })

    def upper(self, point, measured, bound, slack=0.0, stdError=float('nan'),
              samples=0):
        """ Adds a row passing when ``measured <= bound + slack`` """
        self.add(point, measured, bound, bool(measured <= bound + slack), stdError,
                 samples)

    def lower(self, point, measured, bound, slack=0.0, stdError=float('nan'),
              samples=0):
        """ Adds a row passing when ``measured >= bound - slack`` """
        self.add(point, measured, bound, bool(measured >= bound - slack), stdError,
                 samples)

    def diagnostic(self, point, measured, bound=float('nan'), samples=0):
        self.add(point, measured, bound, None, samples=samples)

    @property
    def passed(self):
        checked = [r['passed'] for r in self.rows if r['passed'] is not None]
        return all(checked)

    def csvRows(self, seed=None):
        for r in self.rows:
            yield [self.assumption, r['point'], r['measured'], r['bound'], r['ratio'],
                   '' if r['passed'] is None else r['passed'], r['stdError'],
                   r['samples'], seed]


def writeReports(filePath, reports, seed=None):
    """ Writes the rows of ``reports`` to one CSV, tagged with the run ``seed`` """
    rows = []
    for report in reports:
        rows.extend(report.csvRows(seed))
    writeCsv(filePath, HEADER, rows)


def finiteDiffGradient(lossFn, theta, eps=1e-5):
    """ Central differences ``(f(theta + eps e) - f(theta - eps e)) / (2 eps)`` """
    if not eps > 0.0:
        raise ValueError('eps must be positive')
    theta = np.array(theta, dtype=float)
    grad = np.zeros_like(theta)
    flat = theta.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + eps
        upper = lossFn(theta)
        flat[i] = saved - eps
        lower = lossFn(theta)
        flat[i] = saved
        out[i] = (upper - lower) / (2.0 * eps)
    return grad


def regressorCovariance(system, policy, noise, L, T=None):
    """
    Exact covariance of ``x[L-1]`` for a linear system, or the average
    covariance of ``x[L..T-1]`` when ``T`` is given.
    """
    if not system.isLinear:
        raise ValueError('The exact covariance needs a linear system')
    if T is None:
        return stateCovariance(system.A, system.B, policy.K, noise.sigma, L - 1,
                               noise.excitationStd)
    if T <= L:
        raise ValueError('T must exceed L')
    return meanStateCovariance(system.A, system.B, policy.K, noise.sigma,
                               np.arange(L, T), noise.excitationStd)


def populationGradient(theta, system, policy, noise, L, T=None):
    """
    Exact auxiliary gradient ``(theta - theta*) Sigma[x[L-1]]`` of a linear
    system. With ``T`` the covariance is the average over the regressors
    ``x[L..T-1]`` pooled by :func:`systraj.losses.empiricalGradient`, which
    gives the expected empirical gradient of a length ``T`` trajectory.
    """
    sigmaX = regressorCovariance(system, policy, noise, L, T)
    return (np.asarray(theta, dtype=float) - system.theta) @ sigmaX


def _probeThetas(system, radii, probes, seed):
    rng = streamRng(seed, PROBE_STREAM)
    directions = randomUnitVectors(rng, probes, system.theta.shape)
    for radius in radii:
        for i in range(probes):
            yield radius, i, system.theta + radius * directions[i]


def checkStability(estimate, system, policy, noise, trials=100, horizon=None,
                   slack=1e-9):
    """
    Checks the envelope of a :class:`systraj.stability.StabilityEstimate` on
    fresh paired rollouts.
    """
    horizon = estimate.horizon if horizon is None else horizon
    ratios = pairedRatios(system, policy, noise, trials, horizon,
                          seed=deriveSeed(noise.seed, PROBE_STREAM))
    report = AssumptionReport(STABILITY, {'cRho': estimate.cRho, 'rho': estimate.rho})
    envelope = estimate.envelope(np.arange(horizon + 1))
    worst = ratios.max(axis=0)
    for t in range(horizon + 1):
        report.upper('t=%d' % t, worst[t], envelope[t], slack, samples=trials)
    return report


def checkBoundedStates(states, excitations, noises, system, policy, cRho, rho, c=1.0,
                       sigma=None):
    """
    Checks ``max_t ||h[t]|| <= c betaPlus sqrt(n)`` with
    ``betaPlus = cRho (sigma + B) / (1 - rho)``, ``B`` the largest
    ``||phi(0, z[t]; theta*)|| / sqrt(n)`` and ``sigma`` the largest noise
    entry, and ``E ||h[t]||^2 <= betaPlus^2 n`` with the nominal ``sigma``
    and the root mean square ``B``.

    Arguments:

    ``states``, ``excitations``, ``noises``

        Ensemble arrays of shapes `(reps, T + 1, n)`, `(reps, T, p)` and
        `(reps, T, n)`.

    ``cRho``, ``rho``

        The stability constants.

    ``sigma``

        The nominal noise level. Default is `None` (root mean square of the
        noises).
    """
    if not 0.0 < rho < 1.0:
        raise ValueError('rho must lie in (0, 1)')
    n = system.stateDim
    zeros = np.zeros(excitations.shape[:-1] + (n,))
    drift = system.transition(zeros, policy.input(zeros, excitations))
    driftNorms = np.linalg.norm(drift, axis=-1) / np.sqrt(n)
    sigmaMax = float(np.max(np.abs(noises))) if noises.size else 0.0
    if sigma is None:
        sigma = float(np.sqrt(np.mean(noises ** 2))) if noises.size else 0.0
    betaMax = cRho * (sigmaMax + float(np.max(driftNorms))) / (1.0 - rho)
    betaMean = cRho * (sigma + float(np.sqrt(np.mean(driftNorms ** 2)))) / (1.0 - rho)
    norms = np.linalg.norm(states, axis=-1)
    report = AssumptionReport(BOUNDEDNESS, {'betaPlus': betaMax,
                                            'betaPlusMean': betaMean})
    reps = states.shape[0]
    report.upper('max_t ||h_t||', float(np.max(norms)), c * betaMax * np.sqrt(n),
                 samples=reps)
    report.upper('max_t E||h_t||^2', float(np.max(np.mean(norms ** 2, axis=0))),
                 betaMean ** 2 * n, samples=reps)
    return report


def _opcEnvelope(system, policy, noise, L, samples):
    if system.isLinear:
        eig = linalg.eigvalsh(regressorCovariance(system, policy, noise, L))
        return float(eig[0]), float(eig[-1])
    gamma = system.activation.gamma
    X = samples[0]
    eig = linalg.eigvalsh(X.T @ X / X.shape[0])
    return gamma ** 2 * float(eig[0]), float('inf')


def checkOpc(system, policy, noise, L, radius, probes, M, slack=3.0, envelope=None):
    """
    Estimates the one-point convexity and smoothness constants of the
    auxiliary loss around ``theta*``:
    ``alpha = min <theta - theta*, grad> / ||theta - theta*||^2`` and
    ``beta = max ||grad|| / ||theta - theta*||`` over ``probes`` random
    directions on the spheres of radii ``radius / 4``, ``radius / 2`` and
    ``radius``. The gradients are Monte Carlo estimates over ``M`` common
    trajectories.

    ``envelope``

        The ``(alpha, beta)`` bracket to check. Default is `None`: the
        extreme eigenvalues of the regressor covariance for linear systems,
        ``gamma^2 lambda_min(E[x x^T])`` and no upper bound otherwise.

    Returns ``(alpha, beta, opcReport, smoothnessReport)``.
    """
    if probes < 1:
        raise ValueError('probes must be at least 1')
    if not radius > 0.0:
        raise ValueError('radius must be positive')
    samples = auxiliarySamples(system, policy, noise, L, M)
    lowerBound, upperBound = (_opcEnvelope(system, policy, noise, L, samples)
                              if envelope is None else envelope)
    opc = AssumptionReport(OPC)
    smooth = AssumptionReport(SMOOTHNESS)
    alphas, betas = [], []
    radii = (radius / 4.0, radius / 2.0, radius)
    for r, i, theta in _probeThetas(system, radii, probes, noise.seed):
        estimate = auxiliaryEstimate(theta, system, policy, noise, L, M, samples)
        delta = theta - system.theta
        scale = float(np.sum(delta ** 2))
        alpha = float(np.sum(delta * estimate.gradient)) / scale
        alphaError = float(np.sqrt(np.sum((delta * estimate.gradientStdError) ** 2)))
        alphaError /= scale
        beta = float(np.linalg.norm(estimate.gradient)) / np.sqrt(scale)
        betaError = float(np.linalg.norm(estimate.gradientStdError)) / np.sqrt(scale)
        point = 'r=%.6g probe=%d' % (r, i)
        opc.lower(point, alpha, lowerBound, slack * alphaError, alphaError, M)
        smooth.upper(point, beta, upperBound, slack * betaError, betaError, M)
        alphas.append(alpha)
        betas.append(beta)
    opc.constants['alpha'] = min(alphas)
    smooth.constants['beta'] = max(betas)
    return min(alphas), max(betas), opc, smooth


def checkLipschitzGradient(system, policy, noise, L, radius, pairs, M):
    """
    Diagnostic estimate of the Lipschitz constant of the auxiliary gradient,
    ``max ||grad(theta) - grad(theta')|| / ||theta - theta'||`` over random
    pairs in the ball of radius ``radius``.
    """
    samples = auxiliarySamples(system, policy, noise, L, M)
    rng = streamRng(noise.seed, PROBE_STREAM, 1)
    shape = system.theta.shape
    report = AssumptionReport(LIPSCHITZ_GRAD)
    best = 0.0
    for i in range(pairs):
        first, second = randomUnitVectors(rng, 2, shape) * radius * rng.uniform(size=(
            2,) + (1,) * len(shape))
        a = auxiliaryEstimate(system.theta + first, system, policy, noise, L, M,
                              samples)
        b = auxiliaryEstimate(system.theta + second, system, policy, noise, L, M,
                              samples)
        ratio = float(np.linalg.norm(a.gradient - b.gradient) /
                      np.linalg.norm(first - second))
        best = max(best, ratio)
        report.diagnostic('pair=%d' % i, ratio, samples=M)
    report.constants['lipschitz'] = best
    return report


def _tailRatio(system, policy, theta, samples, rng):
    """
    Largest ratio between the empirical tail ``P(|g| > t)`` of a projected
    single sample gradient and the exponential tail with the same mean.
    """
    X, Y, offset = samples
    pre = X @ theta.T
    residuals = Y - system.activation.evaluate(pre) - offset
    weighted = residuals * system.activation.derivative(pre)
    direction = randomUnitVectors(rng, 1, theta.shape)[0]
    projected = np.abs(-np.sum(weighted * (X @ direction.T), axis=1))
    scale = float(np.mean(projected))
    if scale == 0.0:
        return 0.0
    ratios = []
    for q in (2.0, 4.0, 6.0):
        empirical = float(np.mean(projected > q * scale))
        ratios.append(empirical / np.exp(-q))
    return max(ratios)


def expectedEmpiricalGradients(thetas, system, policy, noise, L, T, ensemble=32):
    """
    The expectation of :func:`systraj.losses.empiricalGradient` over length
    ``T`` trajectories at every parameter of ``thetas``: exact for linear
    systems, the mean over ``ensemble`` independent trajectories otherwise.
    """
    if system.isLinear:
        return [populationGradient(theta, system, policy, noise, L, T)
                for theta in thetas]
    if ensemble < 1:
        raise ValueError('ensemble must be at least 1')
    totals = [np.zeros_like(system.theta) for _ in thetas]
    for r in range(ensemble):
        traj = simulate(system, policy, noise.withSeed(
            deriveSeed(noise.seed, PROBE_STREAM, 6, T, r)), T)
        for i, theta in enumerate(thetas):
            totals[i] += empiricalGradient(theta, traj, L)
    return [total / ensemble for total in totals]


def checkGradientConcentration(system, policy, noise, L, Tgrid, probes=None, reps=4,
                               M=20000, exponentRange=EXPONENT_RANGE, ensemble=32):
    """
    Measures ``||grad L^(theta) - E grad L^(theta)||`` across the trajectory
    lengths of ``Tgrid`` and fits its decay exponent in
    ``N = (T - L) // L``. A probe passes when the exponent lies in
    ``exponentRange``. The expected gradient pools the same time indices as
    the empirical one (see :func:`expectedEmpiricalGradients`), so the
    deviation carries no bias from the transient of the regressor
    covariance. A tail ratio of the single sample gradients at ``x[L-1]``
    over ``M`` trajectories is reported as a diagnostic.

    ``probes``

        List of parameters. Default is `None`: ``theta*`` and one point at
        distance 1.

    ``ensemble``

        Trajectories per length of the expected gradient of nonlinear
        systems. Default is `32`.
    """
    Tgrid = sorted(int(T) for T in Tgrid)
    if Tgrid[0] <= L:
        raise ValueError('Every trajectory length must exceed L')
    if probes is None:
        direction = randomUnitVectors(streamRng(noise.seed, PROBE_STREAM, 2), 1,
                                      system.theta.shape)[0]
        probes = [system.theta, system.theta + direction]
    probes = [np.asarray(theta, dtype=float) for theta in probes]
    deviations = np.zeros((len(probes), len(Tgrid)))
    for j, T in enumerate(Tgrid):
        expected = expectedEmpiricalGradients(probes, system, policy, noise, L, T,
                                              ensemble)
        for r in range(reps):
            traj = simulate(system, policy, noise.withSeed(deriveSeed(noise.seed, j, r)),
                            T)
            for i, theta in enumerate(probes):
                deviations[i, j] += np.linalg.norm(
                    empiricalGradient(theta, traj, L) - expected[i]) / reps
    counts = [(T - L) // L for T in Tgrid]
    report = AssumptionReport(GRAD_CONCENTRATION)
    for i, theta in enumerate(probes):
        distance = float(np.linalg.norm(theta - system.theta))
        for j, T in enumerate(Tgrid):
            report.diagnostic('probe=%d dist=%.6g N=%d' % (i, distance, counts[j]),
                              deviations[i, j], samples=reps)
        exponent = fitLogSlope(counts, deviations[i])
        passed = bool(exponentRange[0] <= exponent <= exponentRange[1])
        report.add('probe=%d dist=%.6g exponent' % (i, distance), exponent, -0.5,
                   passed, samples=reps * len(Tgrid))
    samples = auxiliarySamples(system, policy, noise.withSeed(
        deriveSeed(noise.seed, PROBE_STREAM, 3)), L, M)
    rng = streamRng(noise.seed, PROBE_STREAM, 4)
    for i, theta in enumerate(probes):
        report.diagnostic('probe=%d tail ratio' % i,
                          _tailRatio(system, policy, theta, samples, rng),
                          samples=samples[0].shape[0])
    report.constants['deviations'] = deviations
    return report


def truncationBounds(traj, theta, L, cRho, rho, constants=None):
    """
    The bounds ``2 n betaPlus cRho rho^(L-1) B (sigma + C ||theta - theta*||)``
    on the loss gap and ``2 n betaPlus cRho rho^(L-1) D (sigma + C ||...||)``
    on the gradient gap, with ``betaPlus`` and ``sigma`` measured on the
    trajectory.
    """
    system = traj.system
    if constants is None:
        constants = jacobianConstants(traj, [theta, system.theta], L)
    n = system.stateDim
    betaPlus = float(np.max(np.linalg.norm(traj.states, axis=1))) / np.sqrt(n)
    sigma = float(np.max(np.abs(traj.noises))) if traj.noises.size else 0.0
    distance = float(np.linalg.norm(np.asarray(theta) - system.theta))
    common = 2.0 * n * betaPlus * cRho * rho ** (L - 1) * (
        sigma + constants.cPhi * distance)
    return common * constants.bPhi, common * constants.dPhi


def checkTruncationGap(traj, thetas, Lgrid, cRho, rho, slack=1e-9, slopeTol=0.1):
    """
    Checks the loss and gradient gaps between the empirical and the truncated
    losses against :func:`truncationBounds` at every ``(theta, L)``, and
    compares the slope of the log loss gap in ``L`` with ``log(rho)``
    (diagnostic).
    """
    report = AssumptionReport(TRUNCATION_GAP, {'cRho': cRho, 'rho': rho})
    thetas = [np.asarray(theta, dtype=float) for theta in thetas]
    for i, theta in enumerate(thetas):
        gaps = []
        Ls = []
        for L in Lgrid:
            point = 'probe=%d L=%d' % (i, L)
            if L >= traj.T:
                report.upper(point + ' loss', 0.0, 0.0, slack)
                continue
            constants = jacobianConstants(traj, [theta, traj.system.theta], L)
            lossBound, gradBound = truncationBounds(traj, theta, L, cRho, rho,
                                                    constants)
            lossGap = abs(empiricalLoss(theta, traj, L) - truncatedLoss(theta, traj, L))
            gradGap = float(np.linalg.norm(empiricalGradient(theta, traj, L) -
                                           truncatedGradient(theta, traj, L)))
            report.upper(point + ' loss', lossGap, lossBound, slack, samples=traj.T - L)
            report.upper(point + ' gradient', gradGap, gradBound, slack,
                         samples=traj.T - L)
            gaps.append(lossGap)
            Ls.append(L)
        gaps = np.asarray(gaps)
        keep = gaps > 1e-14
        if np.count_nonzero(keep) >= 2:
            slope = float(np.polyfit(np.asarray(Ls)[keep], np.log(gaps[keep]), 1)[0])
            report.add('probe=%d log-gap slope' % i, slope, np.log(rho),
                       bool(abs(slope - np.log(rho)) <= slopeTol))
    return report


def checkCovarianceSandwich(system, policy, noise, t, reps, tol=0.05):
    """
    Compares the sample covariance of ``h[t]`` over ``reps`` rollouts of a
    linear system with the Gramian ``Gamma[t]`` of its closed loop.
    """
    if not system.isLinear:
        raise ValueError('The covariance sandwich needs a linear system')
    states, _, _ = rollout(system, policy, noise, t, reps)
    sample = np.cov(states[:, t], rowvar=False, ddof=1).reshape(
        system.stateDim, system.stateDim)
    _, _, gamma = gramians(system.closedLoop(policy), noise.excitationStd * system.B,
                           noise.sigma, t)
    eig = linalg.eigvalsh(gamma)
    sampleEig = linalg.eigvalsh(sample)
    report = AssumptionReport(COVARIANCE_SANDWICH)
    error = float(linalg.norm(sample - gamma, 2) / linalg.norm(gamma, 2))
    report.upper('t=%d relative error' % t, error, tol, samples=reps)
    report.lower('t=%d lambda_min' % t, sampleEig[0], eig[0] * (1.0 - tol),
                 samples=reps)
    report.upper('t=%d lambda_max' % t, sampleEig[-1], eig[-1] * (1.0 + tol),
                 samples=reps)
    return report


def checkSubtrajectoryIndependence(system, policy, noise, T, L, reps=2000,
                                   level=0.01):
    """
    Two-sample Kolmogorov-Smirnov tests on the first coordinate of truncated
    sub-sampled states across ``reps`` trajectories: first against last
    sample of offset 0, and offset 0 against offset ``L - 1``.
    """
    states, zs, ws = rollout(system, policy, noise, T, reps)
    first, last, shifted = [], [], []
    for r in range(reps):
        traj = Trajectory(states[r], zs[r], ws[r], system, policy, noise)
        # one warning for the whole ensemble
        traj._warnedTruncation = r > 0
        head = subsample(traj, L, 0)
        tail = subsample(traj, L, L - 1)
        first.append(head.states[0, 0])
        last.append(head.states[-1, 0])
        shifted.append(tail.states[0, 0])
    report = AssumptionReport(INDEPENDENCE)
    for point, a, b in (('offset=0 first vs last', first, last),
                        ('offset 0 vs offset L-1', first, shifted)):
        pvalue = float(stats.ks_2samp(a, b).pvalue)
        report.lower(point + ' p-value', pvalue, level, samples=reps)
    return report


def verifyAll(system, policy, noise, estimate, L, T, radius=1.0, probes=4, M=20000,
              Tgrid=None, reps=4, ensemble=100):
    """
    Runs every check for one system and returns the list of reports, in a
    fixed order.
    """
    reports = [checkStability(estimate, system, policy, noise)]
    states, zs, ws = rollout(system, policy, noise.withSeed(deriveSeed(noise.seed, 1)),
                             T, ensemble)
    reports.append(checkBoundedStates(states, zs, ws, system, policy, estimate.cRho,
                                      estimate.rho, sigma=noise.sigma))
    _, _, opc, smooth = checkOpc(system, policy, noise, L, radius, probes, M)
    reports.extend([opc, smooth])
    reports.append(checkLipschitzGradient(system, policy, noise, L, radius, probes, M))
    if Tgrid is None:
        Tgrid = [L * (k + 1) for k in (125, 500, 2000)]
    reports.append(checkGradientConcentration(system, policy, noise, L, Tgrid,
                                              reps=reps, M=M))
    traj = simulate(system, policy, noise, T)
    direction = randomUnitVectors(streamRng(noise.seed, PROBE_STREAM, 5), 1,
                                  system.theta.shape)[0]
    thetas = [system.theta, system.theta + radius * direction]
    reports.append(checkTruncationGap(traj, thetas, range(2, 13), estimate.cRho,
                                      estimate.rho))
    if system.isLinear:
        reports.append(checkCovarianceSandwich(system, policy, noise, max(1, L - 1),
                                               M))
    if T > 2 * L:
        reports.append(checkSubtrajectoryIndependence(system, policy, noise, T, L,
                                                      reps=min(ensemble * 10, 2000)))
    logger.info('Verification finished: %s', ', '.join(
        '%s=%s' % (r.assumption, r.passed) for r in reports))
    return reports
