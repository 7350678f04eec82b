# -*- coding: utf-8 -*-
""" This module defines the state equations, feedback policies and noise models.

Every system exposes the closed-loop transition
``h[t+1] = phi(h[t], u[t]; theta) + w[t]`` with ``u[t] = -K h[t] + z[t]``,
and the split of its learnable parameter into per-state rows used by the
losses of :mod:`systraj.losses`.

All state functions accept leading batch axes: a state of shape `(..., n)`.

Reference
---------
"""

import numpy as np

from .activation import Activation
from .utils import asMatrix

PREMIX = 'premix'
POSTADD = 'postadd'


class Policy(object):
    """
    A linear state feedback ``u = -K h + z``.

    Constructor arguments:

    ``K``

        The feedback gain, a `p x n` matrix.
    """

    def __init__(self, K):
        self.K = asMatrix(K, 'K')

    @classmethod
    def zero(cls, inputDim, stateDim):
        return cls(np.zeros((inputDim, stateDim)))

    @property
    def isZero(self):
        return not np.any(self.K)

    @property
    def inputDim(self):
        return self.K.shape[0]

    @property
    def stateDim(self):
        return self.K.shape[1]

    def input(self, h, z):
        if self.isZero:
            return np.array(z, dtype=float)
        return z - h @ self.K.T


class NoiseSpec(object):
    """
    Gaussian excitation ``z ~ N(0, excitationStd^2 I)`` and process noise
    ``w ~ N(0, sigma^2 I)`` drawn from streams derived from ``seed``.

    ``sigma``

        The process noise standard deviation. Default is `0.0`.

    ``seed``

        The master seed. Default is `0`.

    ``excitationStd``

        The excitation standard deviation. Default is `1.0`.
    """

    def __init__(self, sigma=0.0, seed=0, excitationStd=1.0):
        if sigma < 0.0:
            raise ValueError('sigma must be non negative')
        if excitationStd < 0.0:
            raise ValueError('excitationStd must be non negative')
        self.sigma = float(sigma)
        self.seed = int(seed)
        self.excitationStd = float(excitationStd)

    @classmethod
    def fromVariance(cls, sigma2, seed=0):
        return cls(np.sqrt(sigma2), seed)

    def withSeed(self, seed):
        return NoiseSpec(self.sigma, seed, self.excitationStd)


class StateEquation(object):
    """
    Base class of the state equations. Subclasses define the regressor
    ``features``, the known ``offset`` added to the prediction and the
    transition itself.
    """
    activation = None

    @property
    def stateDim(self):
        raise NotImplementedError

    @property
    def inputDim(self):
        raise NotImplementedError

    @property
    def outputDim(self):
        """ Dimension of the noisy block of the state, one row of theta each """
        return self.stateDim

    @property
    def noiseDim(self):
        return self.outputDim

    @property
    def theta(self):
        raise NotImplementedError

    @property
    def isLinear(self):
        return False

    def thetaBlocks(self):
        """ Column slices of theta labelled `A` and (when learned) `B` """
        raise NotImplementedError

    def withTheta(self, theta):
        raise NotImplementedError

    def features(self, h, u):
        raise NotImplementedError

    def offset(self, h, u):
        return 0.0

    def featureJacobian(self, policy):
        """ Derivative of the regressor with respect to the state, closed loop """
        raise NotImplementedError

    def transition(self, h, u):
        raise NotImplementedError

    def predict(self, theta, x, offset=0.0):
        return self.activation.evaluate(x @ theta.T) + offset

    def target(self, hNext):
        return hNext[..., :self.outputDim]

    def addNoise(self, hNext, w):
        if self.outputDim == self.stateDim:
            return hNext + w
        hNext = np.array(hNext, copy=True)
        hNext[..., :self.outputDim] += w
        return hNext

    def stateJacobian(self, h, u, policy):
        raise NotImplementedError

    def zeroResponse(self, theta=None):
        """ phi(0, 0; theta), zero for the systems truncation assumes """
        system = self if theta is None else self.withTheta(theta)
        return system.transition(np.zeros(self.stateDim), np.zeros(self.inputDim))

    def hasZeroFixedPoint(self, theta=None):
        return not np.any(self.zeroResponse(theta))

    def checkDimensions(self, policy=None, h=None, z=None, w=None):
        n, p = self.stateDim, self.inputDim
        if policy is not None and policy.K.shape != (p, n):
            raise ValueError('K must be a %d x %d matrix' % (p, n))
        for name, value, dim in (('h', h, n), ('z', z, p), ('w', w, self.noiseDim)):
            if value is not None and np.shape(value)[-1:] != (dim,):
                raise ValueError('%s must have trailing dimension %d' % (name, dim))


class NonlinearSystem(StateEquation):
    """
    An entrywise nonlinear state equation.

    Constructor arguments:

    ``A``

        The state matrix, `n x n`.

    ``B``

        The input matrix, `n x p`.

    ``activation``

        An instance of :class:`systraj.activation.Activation`.

    ``form``

        `premix` for ``phi(A h + B u)`` (learned parameter ``[A B]``) or
        `postadd` for ``phi(A h) + B u`` (learned parameter ``A``, ``B`` known).
        Default is `premix`.
    """

    def __init__(self, A, B, activation, form=PREMIX):
        self.A = asMatrix(A, 'A')
        n = self.A.shape[0]
        if self.A.shape[1] != n:
            raise ValueError('A must be square')
        self.B = asMatrix(B, 'B', rows=n)
        if form not in (PREMIX, POSTADD):
            raise ValueError('Unknown form %s' % form)
        if not isinstance(activation, Activation):
            raise ValueError('activation must be an Activation')
        self.activation = activation
        self.form = form

    @property
    def stateDim(self):
        return self.A.shape[0]

    @property
    def inputDim(self):
        return self.B.shape[1]

    @property
    def theta(self):
        if self.form == PREMIX:
            return np.hstack([self.A, self.B])
        return self.A.copy()

    def thetaBlocks(self):
        n = self.stateDim
        if self.form == PREMIX:
            return {'A': slice(0, n), 'B': slice(n, n + self.inputDim)}
        return {'A': slice(0, n)}

    def withTheta(self, theta):
        theta = np.asarray(theta, dtype=float)
        n = self.stateDim
        if self.form == PREMIX:
            return self._rebuild(theta[:, :n], theta[:, n:])
        return self._rebuild(theta, self.B)

    def _rebuild(self, A, B):
        return NonlinearSystem(A, B, self.activation, self.form)

    def features(self, h, u):
        if self.form == PREMIX:
            return np.concatenate([h, u], axis=-1)
        return np.array(h, dtype=float)

    def offset(self, h, u):
        if self.form == PREMIX:
            return 0.0
        return u @ self.B.T

    def featureJacobian(self, policy):
        n = self.stateDim
        if self.form == PREMIX:
            return np.vstack([np.eye(n), -policy.K])
        return np.eye(n)

    def transition(self, h, u):
        if self.form == PREMIX:
            return self.activation.evaluate(h @ self.A.T + u @ self.B.T)
        return self.activation.evaluate(h @ self.A.T) + u @ self.B.T

    def stateJacobian(self, h, u, policy):
        if self.form == PREMIX:
            slope = self.activation.derivative(h @ self.A.T + u @ self.B.T)
            return slope[..., :, None] * (self.A - self.B @ policy.K)
        slope = self.activation.derivative(h @ self.A.T)
        return slope[..., :, None] * self.A - self.B @ policy.K


class LinearSystem(NonlinearSystem):
    """
    A linear state equation ``A h + B u``; the learned parameter is ``[A B]``.
    """

    def __init__(self, A, B):
        super(LinearSystem, self).__init__(A, B, Activation.identity(), PREMIX)

    @property
    def isLinear(self):
        return True

    def _rebuild(self, A, B):
        return LinearSystem(A, B)

    def transition(self, h, u):
        return h @ self.A.T + u @ self.B.T

    def closedLoop(self, policy):
        return self.A - self.B @ policy.K


class NonlinearArx(StateEquation):
    """
    A nonlinear autoregressive system
    ``h[t+1] = phi(A_1 h[t] + ... + A_m h[t-m+1] + B u[t]) + w[t]``
    lifted to the stacked state ``[h[t]; ...; h[t-m+1]]``. The noise enters
    the newest block only.

    Constructor arguments:

    ``matrices``

        The list ``[A_1, ..., A_m]`` of `n x n` matrices.

    ``activation``

        An instance of :class:`systraj.activation.Activation`.

    ``B``

        Optional `n x p` input matrix, learned together with the ``A_i``.
        Default is `None` (no input).
    """

    def __init__(self, matrices, activation, B=None):
        if len(matrices) < 1:
            raise ValueError('At least one autoregressive matrix is required')
        first = asMatrix(matrices[0], 'A_1')
        n = first.shape[0]
        self.matrices = [asMatrix(m, 'A_%d' % (i + 1), rows=n, cols=n)
                         for i, m in enumerate(matrices)]
        if B is None:
            B = np.zeros((n, 0))
        self.B = asMatrix(B, 'B', rows=n)
        if not isinstance(activation, Activation):
            raise ValueError('activation must be an Activation')
        self.activation = activation

    @property
    def order(self):
        return len(self.matrices)

    @property
    def blockDim(self):
        return self.matrices[0].shape[0]

    @property
    def stateDim(self):
        return self.order * self.blockDim

    @property
    def inputDim(self):
        return self.B.shape[1]

    @property
    def outputDim(self):
        return self.blockDim

    @property
    def stacked(self):
        return np.hstack(self.matrices)

    @property
    def theta(self):
        return np.hstack([self.stacked, self.B])

    def thetaBlocks(self):
        blocks = {'A': slice(0, self.stateDim)}
        if self.inputDim:
            blocks['B'] = slice(self.stateDim, self.stateDim + self.inputDim)
        return blocks

    def withTheta(self, theta):
        theta = np.asarray(theta, dtype=float)
        n = self.blockDim
        matrices = [theta[:, i * n:(i + 1) * n] for i in range(self.order)]
        return NonlinearArx(matrices, self.activation, theta[:, self.stateDim:])

    def features(self, h, u):
        return np.concatenate([h, u], axis=-1)

    def featureJacobian(self, policy):
        return np.vstack([np.eye(self.stateDim), -policy.K])

    def _shift(self, h, top):
        return np.concatenate([top, h[..., :self.stateDim - self.blockDim]], axis=-1)

    def transition(self, h, u):
        top = self.activation.evaluate(h @ self.stacked.T + u @ self.B.T)
        return self._shift(h, top)

    def stateJacobian(self, h, u, policy):
        n, N = self.blockDim, self.stateDim
        slope = self.activation.derivative(h @ self.stacked.T + u @ self.B.T)
        top = slope[..., :, None] * (self.stacked - self.B @ policy.K)
        shift = np.zeros((N - n, N))
        shift[:, :N - n] = np.eye(N - n)
        shift = np.broadcast_to(shift, top.shape[:-2] + shift.shape)
        return np.concatenate([top, shift], axis=-2)


def step(system, policy, h, z, w):
    """
    One closed-loop transition ``phi(h, -K h + z; theta) + w``.

    Arguments:

    ``system``

        A :class:`systraj.system.StateEquation`.

    ``policy``

        A :class:`systraj.system.Policy`.

    ``h``, ``z``, ``w``

        The state, the excitation and the process noise (arrays with
        optional leading batch axes).
    """
    system.checkDimensions(policy, h, z, w)
    h = np.asarray(h, dtype=float)
    z = np.asarray(z, dtype=float)
    return system.addNoise(system.transition(h, policy.input(h, z)), w)


def zeroPolicy(system):
    return Policy.zero(system.inputDim, system.stateDim)
