# -*- coding: utf-8 -*-
""" This module estimates stability constants and the spectral quantities of
linear systems: controllability Gramians, covariance bounds and the noisy
Riccati feedback used by the experiments.

Reference
---------
"""

import logging

import numpy as np
from scipy import linalg

from .activation import Activation
from .errors import NotStabilizable, UnstableSystem
from .utils import (EXCITATION_STREAM, INITIAL_STREAM, NOISE_STREAM, asMatrix,
                    randomUnitVectors, streamRng)

logger = logging.getLogger(__name__)

# Differences below this floor are dominated by rounding and not fitted
RATIO_FLOOR = 1e-10

# Smallest relative gap between the moduli on both sides of the instability cut
CUT_GAP = 1e-6


class StabilityEstimate(object):
    """
    Fitted constants of the envelope
    ``||h[t](alpha) - h[t](0)|| <= cRho * rho ** t * ||alpha||``.
    """

    def __init__(self, cRho, rho, fitResidual, horizon, trials):
        self.cRho = float(cRho)
        self.rho = float(rho)
        self.fitResidual = float(fitResidual)
        self.horizon = int(horizon)
        self.trials = int(trials)

    def __repr__(self):
        return 'StabilityEstimate(cRho=%.6g, rho=%.6g)' % (self.cRho, self.rho)

    def envelope(self, t):
        return self.cRho * self.rho ** np.asarray(t, dtype=float)


class GramianBundle(object):
    """
    Covariance bounds of a linear system:
    ``gammaMinus = min(1, lambda_min(Gamma[L-1]))``,
    ``gammaPlus = max(1, lambda_max(Gamma[L-1]))``,
    ``betaPlus = max(1, max_t lambda_max(Gamma[t]))`` and
    ``kappa = gammaPlus / gammaMinus``.
    """

    def __init__(self, gammaMinus, gammaPlus, betaPlus, gramian):
        self.gammaMinus = float(gammaMinus)
        self.gammaPlus = float(gammaPlus)
        self.betaPlus = float(betaPlus)
        self.gramian = gramian

    @property
    def kappa(self):
        return self.gammaPlus / self.gammaMinus

    def __iter__(self):
        return iter((self.gammaMinus, self.gammaPlus, self.betaPlus, self.kappa))


def spectralRadius(M):
    M = asMatrix(M, 'M')
    if M.shape[0] != M.shape[1]:
        raise ValueError('M must be square')
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(linalg.eigvals(M))))


def spectralNorm(M):
    M = asMatrix(M, 'M')
    if M.size == 0:
        return 0.0
    return float(linalg.norm(M, 2))


def _isLinearClosedLoop(system):
    return (system.activation.isIdentity and
            getattr(system, 'form', 'premix') == 'premix')


def _fitEnvelope(envelope):
    horizon = len(envelope) - 1
    t = np.arange(horizon + 1)
    keep = envelope > RATIO_FLOOR
    keep[0] = True
    logEnv = np.full(horizon + 1, -np.inf)
    logEnv[keep] = np.log(envelope[keep])
    window = max(1, horizon // 2)
    rates = []
    for s in range(horizon - window + 1):
        if keep[s] and keep[s + window]:
            rates.append((logEnv[s + window] - logEnv[s]) / window)
    if not rates:
        used = np.flatnonzero(keep[1:]) + 1
        rates = list(logEnv[used] / used) if used.size else [np.log(RATIO_FLOOR)]
    logRho = max(rates)
    rho = float(np.exp(logRho))
    if rho >= 1.0:
        raise UnstableSystem(rho)
    logC = max(0.0, float(np.max(logEnv[keep] - logRho * t[keep])))
    residual = float(np.max(logC + logRho * t[keep] - logEnv[keep]))
    return float(np.exp(logC)), rho, residual


def pairedRatios(system, policy, noise, trials, horizon, alphaScale=1.0, seed=None):
    """
    Ratios ``||h[t](alpha) - h[t](0)|| / ||alpha||`` of paired rollouts sharing
    their excitation and noise streams, shape `(trials, horizon + 1)`.
    """
    seed = noise.seed if seed is None else seed
    alphas = alphaScale * randomUnitVectors(streamRng(seed, INITIAL_STREAM), trials,
                                            (system.stateDim,))
    ratios = np.zeros((trials, horizon + 1))
    ratios[:, 0] = 1.0
    if _isLinearClosedLoop(system):
        # The difference of paired linear rollouts does not depend on the draws
        M = system.stateJacobian(np.zeros(system.stateDim),
                                 np.zeros(system.inputDim), policy)
        diff = alphas.copy()
        for t in range(1, horizon + 1):
            diff = diff @ M.T
            ratios[:, t] = np.linalg.norm(diff, axis=1) / alphaScale
        return ratios
    zRng = streamRng(seed, EXCITATION_STREAM)
    wRng = streamRng(seed, NOISE_STREAM)
    hAlpha = alphas.copy()
    hZero = np.zeros_like(alphas)
    for t in range(1, horizon + 1):
        z = zRng.standard_normal((trials, system.inputDim)) * noise.excitationStd
        w = wRng.standard_normal((trials, system.noiseDim)) * noise.sigma
        hAlpha = system.addNoise(system.transition(hAlpha, policy.input(hAlpha, z)), w)
        hZero = system.addNoise(system.transition(hZero, policy.input(hZero, z)), w)
        ratios[:, t] = np.linalg.norm(hAlpha - hZero, axis=1) / alphaScale
    return ratios


def estimateStability(system, policy, noise, trials=20, horizon=60, alphaScale=1.0):
    """
    Fits the tightest ``(cRho, rho)`` envelope of paired rollouts started at
    ``alpha`` and at zero with shared draws.

    Arguments:

    ``system``, ``policy``, ``noise``

        The closed loop to analyse; the draws come from ``noise.seed``.

    ``trials``

        The number of random initial states. Default is `20`.

    ``horizon``

        The number of steps of each paired rollout, at least 2. Default is `60`.

    ``alphaScale``

        The norm of the initial states. Default is `1.0`.

    Raises :class:`systraj.errors.UnstableSystem` when the ratios do not decay.
    """
    if trials < 1:
        raise ValueError('trials must be at least 1')
    if horizon < 2:
        raise ValueError('horizon must be at least 2')
    if alphaScale <= 0.0:
        raise ValueError('alphaScale must be positive')
    ratios = pairedRatios(system, policy, noise, trials, horizon, alphaScale)
    if not np.all(np.isfinite(ratios)):
        raise UnstableSystem(float('inf'))
    cRho, rho, residual = _fitEnvelope(ratios.max(axis=0))
    logger.info('Fitted stability constants cRho=%.6g rho=%.6g', cRho, rho)
    return StabilityEstimate(cRho, rho, residual, horizon, trials)


def gramians(A, B, sigma, t):
    """
    The finite time Gramians ``G G^T = sum_i A^i B B^T A^i^T``,
    ``F F^T = sum_i A^i A^i^T`` (``i < t``) and
    ``Gamma = G G^T + sigma^2 F F^T``, built by the recursion
    ``Gamma[k + 1] = A Gamma[k] A^T + B B^T + sigma^2 I``.
    """
    A = asMatrix(A, 'A')
    n = A.shape[0]
    if A.shape[1] != n:
        raise ValueError('A must be square')
    B = asMatrix(B, 'B', rows=n)
    if t < 1:
        raise ValueError('t must be at least 1')
    BB = B @ B.T
    GG = BB.copy()
    FF = np.eye(n)
    for _ in range(t - 1):
        GG = A @ GG @ A.T + BB
        FF = A @ FF @ A.T + np.eye(n)
    return GG, FF, GG + sigma ** 2 * FF


def gramianSequence(A, B, sigma, T):
    """ ``[Gamma[1], ..., Gamma[T]]`` """
    A = asMatrix(A, 'A')
    B = asMatrix(B, 'B', rows=A.shape[0])
    drive = B @ B.T + sigma ** 2 * np.eye(A.shape[0])
    out = [drive]
    for _ in range(T - 1):
        out.append(A @ out[-1] @ A.T + drive)
    return out


def covarianceBounds(A, B, sigma, L, T):
    """
    Returns the :class:`systraj.stability.GramianBundle` of ``(A, B, sigma)``
    for the sampling period ``L`` and the horizon ``T``
    (``1 <= L - 1 <= T``).
    """
    if L < 2:
        raise ValueError('L must be at least 2')
    if L - 1 > T:
        raise ValueError('L - 1 must not exceed T')
    sequence = gramianSequence(A, B, sigma, T)
    gramian = sequence[L - 2]
    eig = linalg.eigvalsh(gramian)
    betaPlus = max(1.0, max(float(linalg.eigvalsh(g)[-1]) for g in sequence))
    return GramianBundle(min(1.0, eig[0]), max(1.0, eig[-1]), betaPlus, gramian)


def _regressorCovariance(gamma, K, excitationStd):
    cross = -gamma @ K.T
    lower = K @ gamma @ K.T + excitationStd ** 2 * np.eye(K.shape[0])
    return np.block([[gamma, cross], [cross.T, lower]])


def stateCovariance(A, B, K, sigma, t, excitationStd=1.0):
    """
    The exact covariance of the regressor ``x[t] = [h[t]; u[t]]`` of a linear
    system driven by ``u = -K h + z`` from ``h[0] = 0``.
    """
    A = asMatrix(A, 'A')
    n = A.shape[0]
    B = asMatrix(B, 'B', rows=n)
    K = asMatrix(K, 'K', rows=B.shape[1], cols=n)
    if t < 0:
        raise ValueError('t must be non negative')
    if t == 0:
        gamma = np.zeros((n, n))
    else:
        _, _, gamma = gramians(A - B @ K, excitationStd * B, sigma, t)
    return _regressorCovariance(gamma, K, excitationStd)


def meanStateCovariance(A, B, K, sigma, times, excitationStd=1.0):
    """
    The average of :func:`stateCovariance` over the timestamps ``times``,
    i.e. the covariance of the regressors pooled by an empirical loss.
    """
    A = asMatrix(A, 'A')
    n = A.shape[0]
    B = asMatrix(B, 'B', rows=n)
    K = asMatrix(K, 'K', rows=B.shape[1], cols=n)
    times = np.asarray(times, dtype=int).reshape(-1)
    if not times.size:
        raise ValueError('times must not be empty')
    if times.min() < 0:
        raise ValueError('times must be non negative')
    closed = A - B @ K
    drive = excitationStd ** 2 * B @ B.T + sigma ** 2 * np.eye(n)
    counts = np.bincount(times)
    gamma = np.zeros((n, n))
    total = np.zeros((n, n))
    for t in range(counts.size):
        if counts[t]:
            total += counts[t] * gamma
        gamma = closed @ gamma @ closed.T + drive
    return _regressorCovariance(total / times.size, K, excitationStd)


def nonlinearOperatorNorm(A, activation, samples=10, seed=0, maxIter=2000, tol=1e-13):
    """
    Lower bound of ``sup_{||x|| = 1} ||phi(A x)||`` by a multi-start ascent on
    the unit sphere: ``x <- grad / ||grad||`` with
    ``grad = A^T (phi(A x) * phi'(A x))``. The squared objective is convex for
    the supported activations, so every step increases it.

    Arguments:

    ``A``

        The matrix.

    ``activation``

        A :class:`systraj.activation.Activation`.

    ``samples``

        The number of random restarts, at least 1. Default is `10`.

    ``seed``

        Seed of the restarts (an integer or a numpy `Generator`). Default is `0`.
    """
    A = asMatrix(A, 'A')
    if samples < 1:
        raise ValueError('samples must be at least 1')
    rng = seed if isinstance(seed, np.random.Generator) else streamRng(seed)
    X = randomUnitVectors(rng, samples, (A.shape[1],))
    values = np.linalg.norm(activation.evaluate(X @ A.T), axis=1)
    active = np.ones(samples, dtype=bool)
    for _ in range(maxIter):
        pre = X[active] @ A.T
        grad = (activation.evaluate(pre) * activation.derivative(pre)) @ A
        norms = np.linalg.norm(grad, axis=1)
        moving = norms > 0.0
        update = X[active]
        update[moving] = grad[moving] / norms[moving, None]
        newValues = np.linalg.norm(activation.evaluate(update @ A.T), axis=1)
        improved = newValues >= values[active]
        rows = np.flatnonzero(active)
        X[rows[improved]] = update[improved]
        gain = np.where(improved, newValues - values[active], 0.0)
        values[rows[improved]] = newValues[improved]
        done = (gain <= tol * np.maximum(values[rows], 1.0)) | ~moving
        active[rows[done]] = False
        if not active.any():
            break
    return float(values.max())


def solveDare(A, B, Q=None, R=None, tol=1e-10, maxIter=100000):
    """
    Solves ``P = A^T P A - A^T P B (R + B^T P B)^-1 B^T P A + Q`` by the fixed
    point iteration started at ``P = Q``.
    Raises :class:`systraj.errors.NotStabilizable` when it does not converge.
    """
    A = asMatrix(A, 'A')
    n = A.shape[0]
    B = asMatrix(B, 'B', rows=n)
    Q = np.eye(n) if Q is None else asMatrix(Q, 'Q', rows=n, cols=n)
    R = np.eye(B.shape[1]) if R is None else asMatrix(R, 'R', rows=B.shape[1],
                                                        cols=B.shape[1])
    P = Q.copy()
    for iteration in range(1, maxIter + 1):
        BtPA = B.T @ P @ A
        nextP = A.T @ P @ A - BtPA.T @ linalg.solve(R + B.T @ P @ B, BtPA) + Q
        nextP = 0.5 * (nextP + nextP.T)
        if not np.all(np.isfinite(nextP)):
            raise NotStabilizable('Riccati iteration diverged at step %d' % iteration)
        delta = linalg.norm(nextP - P, 'fro')
        P = nextP
        if delta <= tol:
            logger.debug('Riccati iteration converged after %d steps', iteration)
            return P
    raise NotStabilizable('Riccati iteration did not converge in %d steps' % maxIter)


def dareGain(A, B, P, R=None):
    """ ``K = (R + B^T P B)^-1 B^T P A`` """
    R = np.eye(B.shape[1]) if R is None else R
    return linalg.solve(R + B.T @ P @ B, B.T @ P @ A)


def darePolicy(A, B, noiseVar=0.001, seed=0, perturb='gain', attempts=20):
    """
    The stabilizing Riccati gain of ``(A, B)`` with ``Q = R = I`` plus
    i.i.d. Gaussian noise of variance ``noiseVar``, redrawn until the closed
    loop ``A - B K`` is stable.

    Arguments:

    ``noiseVar``

        Variance of the perturbation of each entry. Default is `0.001`.

    ``seed``

        Seed of the perturbation. Default is `0`.

    ``perturb``

        `gain` perturbs ``K``; `riccati` perturbs ``P`` before computing the
        gain. Default is `gain`.

    ``attempts``

        The number of draws before giving up. Default is `20`.
    """
    if perturb not in ('gain', 'riccati'):
        raise ValueError('perturb must be gain or riccati')
    if noiseVar < 0.0:
        raise ValueError('noiseVar must be non negative')
    A = asMatrix(A, 'A')
    B = asMatrix(B, 'B', rows=A.shape[0])
    P = solveDare(A, B)
    gain = dareGain(A, B, P)
    rng = seed if isinstance(seed, np.random.Generator) else streamRng(seed)
    std = np.sqrt(noiseVar)
    for attempt in range(1, attempts + 1):
        if perturb == 'gain':
            K = gain + std * rng.standard_normal(gain.shape)
        else:
            K = dareGain(A, B, P + std * rng.standard_normal(P.shape))
        radius = spectralRadius(A - B @ K)
        if radius < 1.0:
            logger.debug('Stabilizing gain found at attempt %d (rho=%.4g)',
                         attempt, radius)
            return K
    raise NotStabilizable('No stabilizing perturbation found in %d attempts' % attempts)


def randomUnstableMatrix(n, rng, unstable=10, margin=0.02, attempts=100):
    """
    A Gaussian matrix scaled so that exactly ``unstable`` eigenvalue moduli
    exceed 1. The ``unstable``-th largest modulus is scaled to ``1 + margin``,
    or to the midpoint with the next modulus when ``1 + margin`` would lift
    that one above 1 as well. Draws whose moduli coincide at the cut (a
    complex pair) are redrawn.
    """
    if not 1 <= unstable <= n:
        raise ValueError('unstable must lie in [1, n]')
    for _ in range(attempts):
        A = rng.standard_normal((n, n))
        moduli = np.sort(np.abs(linalg.eigvals(A)))[::-1]
        outer = moduli[unstable - 1]
        if unstable == n:
            return A * (1.0 + margin) / outer
        inner = moduli[unstable]
        if outer - inner <= CUT_GAP * outer:
            continue
        scale = (1.0 + margin) / outer
        if scale * inner >= 1.0:
            scale = 2.0 / (outer + inner)
        return A * scale
    raise ValueError('No draw separates %d eigenvalues in %d attempts'
                     % (unstable, attempts))


def randomInputMatrix(n, p, rng):
    """ Entries drawn from ``N(0, 1 / n)`` """
    return rng.standard_normal((n, p)) / np.sqrt(n)


def table1Trial(n, p, leakages, seed, noiseVar=0.001, restarts=10, unstable=10,
                margin=0.02, perturb='gain'):
    """
    One draw of the spectral statistics of a random unstable system ``A`` and
    its stabilized closed loop ``A' = A - B K``.
    """
    rng = streamRng(seed)
    A = randomUnstableMatrix(n, rng, unstable, margin)
    B = randomInputMatrix(n, p, rng)
    K = darePolicy(A, B, noiseVar, rng, perturb)
    closed = A - B @ K
    row = {
        'norm_A': spectralNorm(A),
        'norm_Aprime': spectralNorm(closed),
        'rho_A': spectralRadius(A),
        'rho_Aprime': spectralRadius(closed),
        'nl_norm_A': [],
        'nl_norm_Aprime': []
    }
    for leakage in leakages:
        phi = Activation.leakyRelu(leakage)
        row['nl_norm_A'].append(nonlinearOperatorNorm(A, phi, restarts, rng))
        row['nl_norm_Aprime'].append(nonlinearOperatorNorm(closed, phi, restarts, rng))
    return row
