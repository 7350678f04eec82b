# -*- coding: utf-8 -*-
""" This module implements the empirical, truncated, sub-trajectory and
auxiliary losses with their analytic gradients.

The loss of a parameter ``theta`` (rows ``theta_k``) over regressors ``x``
and targets ``y`` is ``1 / (2 m) sum ||y - phi(theta x) - offset||^2``. The
gradient of row ``k`` only depends on ``theta_k``, so the full gradient is the
stack of the row gradients.

Reference
---------
"""

import numpy as np

from .system import step
from .trajectory import iterateRollout, truncatedStates


def _regressors(system, policy, states, excitations):
    u = policy.input(states, excitations)
    return system.features(states, u), system.offset(states, u)


def _residuals(system, theta, X, Y, offset):
    pre = X @ theta.T
    return Y - system.activation.evaluate(pre) - offset, pre


def regressionLoss(system, theta, X, Y, offset=0.0):
    residuals, _ = _residuals(system, theta, X, Y, offset)
    return 0.5 * float(np.sum(residuals ** 2)) / X.shape[0]


def regressionGradient(system, theta, X, Y, offset=0.0):
    residuals, pre = _residuals(system, theta, X, Y, offset)
    weighted = residuals * system.activation.derivative(pre)
    return -(weighted.T @ X) / X.shape[0]


def regressionLossAndGradient(system, theta, X, Y, offset=0.0):
    residuals, pre = _residuals(system, theta, X, Y, offset)
    weighted = residuals * system.activation.derivative(pre)
    loss = 0.5 * float(np.sum(residuals ** 2)) / X.shape[0]
    return loss, -(weighted.T @ X) / X.shape[0]


def _checkTheta(system, theta):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != system.theta.shape:
        raise ValueError('theta must have shape %s' % (system.theta.shape,))
    return theta


def _checkChurn(traj, L):
    if L < 1:
        raise ValueError('L must be at least 1')
    if traj.T <= L:
        raise ValueError('The trajectory length %d must exceed L = %d' % (traj.T, L))


def empiricalSamples(traj, L):
    """ Regressors, targets and offsets of ``t = L..T-1`` """
    _checkChurn(traj, L)
    system = traj.system
    X, offset = _regressors(system, traj.policy, traj.states[L:-1],
                            traj.excitations[L:])
    return X, system.target(traj.states[L + 1:]), offset


def truncatedSamples(traj, L, stop=None):
    """
    Regressors of ``h[t, L - 1]`` and targets ``h[t + 1, L]`` for
    ``t = L..stop-1`` (``stop`` defaults to ``T``).
    """
    _checkChurn(traj, L)
    stop = traj.T if stop is None else int(stop)
    if not L < stop <= traj.T:
        raise ValueError('stop must lie in (L, T]')
    system, policy = traj.system, traj.policy
    times = np.arange(L, stop)
    states = truncatedStates(traj, L - 1, times)
    z = traj.excitations[times]
    targets = step(system, policy, states, z, traj.noises[times])
    X, offset = _regressors(system, policy, states, z)
    return X, system.target(targets), offset


def subtrajectorySamples(sub):
    if sub.count < 1:
        raise ValueError('The sub-trajectory holds no sample')
    X, offset = _regressors(sub.system, sub.policy, sub.states, sub.excitations)
    return X, sub.system.target(sub.targets), offset


def empiricalLoss(theta, traj, L):
    """
    ``1 / (2 (T - L)) sum_{t=L}^{T-1} ||h[t+1] - phi(h[t], z[t]; theta)||^2``.
    The first ``L`` samples (the churn period) are left out.
    """
    theta = _checkTheta(traj.system, theta)
    return regressionLoss(traj.system, theta, *empiricalSamples(traj, L))


def empiricalGradient(theta, traj, L):
    theta = _checkTheta(traj.system, theta)
    return regressionGradient(traj.system, theta, *empiricalSamples(traj, L))


def empiricalLossAndGradient(theta, traj, L):
    theta = _checkTheta(traj.system, theta)
    return regressionLossAndGradient(traj.system, theta, *empiricalSamples(traj, L))


def empiricalRowLoss(thetaRow, k, traj, L):
    """ The loss of state coordinate ``k`` alone """
    X, Y, offset = empiricalSamples(traj, L)
    offset = offset[:, k] if np.ndim(offset) else offset
    pre = X @ np.asarray(thetaRow, dtype=float)
    residual = Y[:, k] - traj.system.activation.evaluate(pre) - offset
    return 0.5 * float(np.sum(residual ** 2)) / X.shape[0]


def empiricalRowGradient(thetaRow, k, traj, L):
    X, Y, offset = empiricalSamples(traj, L)
    offset = offset[:, k] if np.ndim(offset) else offset
    pre = X @ np.asarray(thetaRow, dtype=float)
    activation = traj.system.activation
    residual = Y[:, k] - activation.evaluate(pre) - offset
    return -(residual * activation.derivative(pre)) @ X / X.shape[0]


def truncatedLoss(theta, traj, L, stop=None):
    """
    The loss over truncated triplets ``(h[t+1, L], h[t, L-1], z[t])``; it is
    the average of the ``L`` sub-trajectory losses when ``L`` divides the
    summed range.
    """
    theta = _checkTheta(traj.system, theta)
    return regressionLoss(traj.system, theta, *truncatedSamples(traj, L, stop))


def truncatedGradient(theta, traj, L, stop=None):
    theta = _checkTheta(traj.system, theta)
    return regressionGradient(traj.system, theta, *truncatedSamples(traj, L, stop))


def subtrajectoryLoss(theta, sub):
    theta = _checkTheta(sub.system, theta)
    return regressionLoss(sub.system, theta, *subtrajectorySamples(sub))


def subtrajectoryGradient(theta, sub):
    theta = _checkTheta(sub.system, theta)
    return regressionGradient(sub.system, theta, *subtrajectorySamples(sub))


class AuxiliaryEstimate(object):
    """
    Monte Carlo estimate of the expected single sample loss at time ``L - 1``
    and of its gradient, with standard errors. Unpacks as
    ``(loss, gradient)``.
    """

    def __init__(self, loss, gradient, lossStdError, gradientStdError, samples):
        self.loss = loss
        self.gradient = gradient
        self.lossStdError = lossStdError
        self.gradientStdError = gradientStdError
        self.samples = samples

    def __iter__(self):
        return iter((self.loss, self.gradient))


def auxiliarySamples(system, policy, noise, L, M):
    """ ``(x[L-1], h[L], offset)`` of ``M`` fresh trajectories """
    if L < 1:
        raise ValueError('L must be at least 1')
    if M < 1:
        raise ValueError('M must be at least 1')
    for t, h, z, w in iterateRollout(system, policy, noise, L, M):
        if t == L - 1:
            X, offset = _regressors(system, policy, h, z)
            target = system.target(system.addNoise(
                system.transition(h, policy.input(h, z)), w))
            return X, target, offset


def auxiliaryEstimate(theta, system, policy, noise, L, M, samples=None):
    """
    Estimates the auxiliary loss
    ``E[1/2 ||h[L] - phi(h[L-1], z[L-1]; theta)||^2]`` over ``M`` independent
    trajectories drawn from ``noise.seed``.

    ``samples``

        Optional output of :func:`auxiliarySamples`, to evaluate several
        parameters on common draws. Default is `None`.
    """
    theta = _checkTheta(system, theta)
    X, Y, offset = auxiliarySamples(system, policy, noise, L, M) \
        if samples is None else samples
    M = X.shape[0]
    residuals, pre = _residuals(system, theta, X, Y, offset)
    losses = 0.5 * np.sum(residuals ** 2, axis=1)
    weighted = residuals * system.activation.derivative(pre)
    gradient = -(weighted.T @ X) / M
    secondMoment = ((weighted ** 2).T @ (X ** 2)) / M
    scale = 1.0 / np.sqrt(M - 1) if M > 1 else 0.0
    gradientStdError = np.sqrt(np.maximum(secondMoment - gradient ** 2, 0.0)) * scale
    lossStdError = float(losses.std()) * scale
    return AuxiliaryEstimate(float(losses.mean()), gradient, lossStdError,
                             gradientStdError, M)


class JacobianConstants(object):
    """
    Empirical maxima over a trajectory of the state Jacobian norm
    (``bPhi``), of the parameter gradient norm (``cPhi``) and of the mixed
    second derivative norm (``dPhi``, an upper bound).
    """

    def __init__(self, bPhi, cPhi, dPhi):
        self.bPhi = bPhi
        self.cPhi = cPhi
        self.dPhi = dPhi

    def __repr__(self):
        return 'JacobianConstants(bPhi=%.6g, cPhi=%.6g, dPhi=%.6g)' % (
            self.bPhi, self.cPhi, self.dPhi)


def jacobianConstants(traj, thetas, L=None):
    """
    Measures the constants of :class:`systraj.losses.JacobianConstants` on the
    states of ``traj`` (and on its depth ``L - 1`` truncations when ``L`` is
    given), maximised over the parameters ``thetas``.
    """
    system, policy = traj.system, traj.policy
    states = traj.states[:-1]
    z = traj.excitations
    if L is not None and L > 1 and traj.T > L:
        times = np.arange(L, traj.T)
        states = np.vstack([states, truncatedStates(traj, L - 1, times)])
        z = np.vstack([z, traj.excitations[times]])
    u = policy.input(states, z)
    X = system.features(states, u)
    xNorms = np.linalg.norm(X, axis=1)
    featureJacobian = system.featureJacobian(policy)
    jacobianNorm = np.linalg.norm(featureJacobian, 2)
    activation = system.activation
    bPhi = cPhi = dPhi = 0.0
    for theta in thetas:
        theta = _checkTheta(system, theta)
        model = system.withTheta(theta)
        J = model.stateJacobian(states, u, policy)
        bPhi = max(bPhi, float(np.max(np.linalg.norm(J, 2, axis=(-2, -1)))))
        pre = X @ theta.T
        slope = np.abs(activation.derivative(pre))
        curvature = np.abs(activation.secondDerivative(pre))
        cPhi = max(cPhi, float(np.max(slope * xNorms[:, None])))
        rowNorms = np.linalg.norm(theta @ featureJacobian, axis=1)
        bound = curvature * xNorms[:, None] * rowNorms[None, :] + slope * jacobianNorm
        dPhi = max(dPhi, float(np.max(bound)))
    return JacobianConstants(bPhi, cPhi, dPhi)
