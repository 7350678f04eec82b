# -*- coding: utf-8 -*-
""" This module defines the :class:`systraj.trajectory.Trajectory` and the
:class:`systraj.trajectory.SubTrajectory`.

A trajectory stores the states, the excitations and the process noises of one
seeded rollout, so truncated states can be re-rolled from the recorded draws.

Reference
---------
"""

import logging
import os

import numpy as np

from .system import step
from .utils import (EXCITATION_STREAM, NOISE_STREAM, formatFloat, readCsv,
                    streamRng, writeCsv)

logger = logging.getLogger(__name__)


class Trajectory(object):
    """
    The recorded rollout ``h[0..T]``, ``z[0..T-1]``, ``w[0..T-1]``.

    Constructor arguments:

    ``states``

        Array of shape `(T + 1, n)`.

    ``excitations``

        Array of shape `(T, p)`.

    ``noises``

        Array of shape `(T, n)` (for autoregressive systems `n` is the block
        dimension).

    ``system``, ``policy``, ``noise``

        The :class:`systraj.system.StateEquation`,
        :class:`systraj.system.Policy` and :class:`systraj.system.NoiseSpec`
        that generated the data.

    Usage example::

        from systraj.system import LinearSystem, NoiseSpec, zeroPolicy
        from systraj.trajectory import simulate

        system = LinearSystem(0.5 * np.eye(2), np.eye(2))
        traj = simulate(system, zeroPolicy(system), NoiseSpec(0.1, seed=7), 100)
        traj.toFile('trajectory.csv')
    """

    def __init__(self, states, excitations, noises, system, policy, noise):
        self.states = np.asarray(states, dtype=float)
        self.excitations = np.asarray(excitations, dtype=float)
        self.noises = np.asarray(noises, dtype=float)
        T = self.excitations.shape[0]
        if self.states.shape != (T + 1, system.stateDim):
            raise ValueError('states must have shape (%d, %d)' % (T + 1, system.stateDim))
        if self.excitations.shape != (T, system.inputDim):
            raise ValueError('excitations must have shape (%d, %d)'
                             % (T, system.inputDim))
        if self.noises.shape != (T, system.noiseDim):
            raise ValueError('noises must have shape (%d, %d)' % (T, system.noiseDim))
        self.system = system
        self.policy = policy
        self.noise = noise
        self._warnedTruncation = False

    @property
    def T(self):
        return self.excitations.shape[0]

    @property
    def inputs(self):
        """ The applied inputs ``u[t] = -K h[t] + z[t]`` for ``t < T`` """
        return self.policy.input(self.states[:-1], self.excitations)

    def replay(self):
        return _roll(self.system, self.policy, self.states[0], self.excitations,
                     self.noises)

    def header(self):
        n, p, q = self.system.stateDim, self.system.inputDim, self.system.noiseDim
        return (['t'] + ['h%d' % i for i in range(n)] + ['z%d' % i for i in range(p)] +
                ['w%d' % i for i in range(q)] + ['seed'])

    def rows(self, seed=None):
        p, q = self.system.inputDim, self.system.noiseDim
        seed = self.noise.seed if seed is None else seed
        for t in range(self.T + 1):
            row = [t] + list(self.states[t])
            if t < self.T:
                row += list(self.excitations[t]) + list(self.noises[t])
            else:
                row += [None] * (p + q)
            yield row + [seed]

    def toFile(self, filePath, overwrite=False, seed=None):
        """
        Writes the trajectory as CSV with 17 significant digits.

        Arguments:

        ``filePath``

            The path of the output file.

        ``overwrite``

            Replace an existing file. Default is `False`.

        ``seed``

            The seed recorded on every row. Default is `None` (the seed of
            the noise model).
        """
        if not overwrite and os.path.isfile(filePath):
            raise IOError('File %s already exists' % filePath)
        writeCsv(filePath, self.header(), self.rows(seed))

    @classmethod
    def fromFile(cls, filePath, system, policy, noise):
        header, rows = readCsv(filePath)
        n, p, q = system.stateDim, system.inputDim, system.noiseDim
        if len(header) != 2 + n + p + q or header[-1] != 'seed':
            raise ValueError('File %s does not match the system dimensions' % filePath)
        T = len(rows) - 1
        if T < 1:
            raise ValueError('File %s holds no transition' % filePath)
        states = np.array([[float(v) for v in r[1:1 + n]] for r in rows])
        excitations = np.array([[float(v) for v in r[1 + n:1 + n + p]]
                                for r in rows[:-1]]).reshape(T, p)
        noises = np.array([[float(v) for v in r[1 + n + p:1 + n + p + q]]
                           for r in rows[:-1]]).reshape(T, q)
        return cls(states, excitations, noises, system, policy, noise)

    def warnIfTruncationInexact(self):
        if self._warnedTruncation:
            return
        self._warnedTruncation = True
        if not self.system.hasZeroFixedPoint():
            logger.warning('phi(0, 0; theta) = %s is not zero, truncated states are '
                           'not distributed like fresh states',
                           formatFloat(np.max(np.abs(self.system.zeroResponse()))))


class SubTrajectory(object):
    """
    The truncated samples of a trajectory at times ``offset + i * period``,
    ``i = 1..N`` with ``N = (T - period) // period``.

    ``states`` holds the depth ``period - 1`` truncations and ``targets`` the
    depth ``period`` truncations one step later.
    """

    def __init__(self, offset, period, times, targets, states, excitations, system,
                 policy):
        self.offset = offset
        self.period = period
        self.times = times
        self.targets = targets
        self.states = states
        self.excitations = excitations
        self.system = system
        self.policy = policy

    @property
    def count(self):
        return len(self.times)

    @property
    def inputs(self):
        return self.policy.input(self.states, self.excitations)


def _roll(system, policy, h0, excitations, noises):
    T = excitations.shape[0]
    states = np.zeros((T + 1,) + np.shape(h0))
    states[0] = h0
    for t in range(T):
        states[t + 1] = step(system, policy, states[t], excitations[t], noises[t])
    return states


def drawNoise(system, noise, T):
    zs = streamRng(noise.seed, EXCITATION_STREAM).standard_normal(
        (T, system.inputDim)) * noise.excitationStd
    ws = streamRng(noise.seed, NOISE_STREAM).standard_normal(
        (T, system.noiseDim)) * noise.sigma
    return zs, ws


def simulate(system, policy, noise, T, excitations=None, noises=None, h0=None):
    """
    Simulates the closed loop for ``T`` steps from ``h[0] = 0``.

    Arguments:

    ``system``, ``policy``, ``noise``

        The state equation, the feedback policy and the noise model.

    ``T``

        The number of transitions, at least 1.

    ``excitations``, ``noises``

        Optional arrays replacing the seeded draws (impulse responses).
        Default is `None`.

    ``h0``

        Optional initial state. Default is `None` (zero state).
    """
    T = int(T)
    if T < 1:
        raise ValueError('T must be at least 1')
    system.checkDimensions(policy)
    zs, ws = drawNoise(system, noise, T)
    if excitations is not None:
        zs = np.asarray(excitations, dtype=float).reshape(T, system.inputDim)
    if noises is not None:
        ws = np.asarray(noises, dtype=float).reshape(T, system.noiseDim)
    if h0 is None:
        h0 = np.zeros(system.stateDim)
    states = _roll(system, policy, np.asarray(h0, dtype=float), zs, ws)
    return Trajectory(states, zs, ws, system, policy, noise)


def iterateRollout(system, policy, noise, T, reps, h0=None, excitations=None):
    """
    Yields ``(t, h[t], z[t], w[t])`` for ``reps`` independent trajectories
    simulated together (``h`` has shape `(reps, n)`; ``z`` and ``w`` are
    `None` at ``t = T``). ``excitations`` of shape `(T, p)` replaces the
    excitation draws of every repetition.
    """
    if reps < 1:
        raise ValueError('reps must be at least 1')
    zRng = streamRng(noise.seed, EXCITATION_STREAM)
    wRng = streamRng(noise.seed, NOISE_STREAM)
    h = np.zeros((reps, system.stateDim))
    if h0 is not None:
        h = h + np.asarray(h0, dtype=float)
    for t in range(T):
        if excitations is None:
            z = zRng.standard_normal((reps, system.inputDim)) * noise.excitationStd
        else:
            z = np.broadcast_to(excitations[t], (reps, system.inputDim))
        w = wRng.standard_normal((reps, system.noiseDim)) * noise.sigma
        yield t, h, z, w
        h = step(system, policy, h, z, w)
    yield T, h, None, None


def rollout(system, policy, noise, T, reps, h0=None):
    """
    Simulates ``reps`` trajectories at once and returns the arrays
    ``states`` `(reps, T + 1, n)`, ``excitations`` `(reps, T, p)` and
    ``noises`` `(reps, T, n)`.
    """
    states = np.zeros((reps, T + 1, system.stateDim))
    zs = np.zeros((reps, T, system.inputDim))
    ws = np.zeros((reps, T, system.noiseDim))
    for t, h, z, w in iterateRollout(system, policy, noise, T, reps, h0):
        states[:, t] = h
        if z is not None:
            zs[:, t] = z
            ws[:, t] = w
    return states, zs, ws


def truncatedStates(traj, L, times):
    """
    The depth ``L`` truncations ``h[t, L]`` at several timestamps: the state
    re-rolled from zero at time ``t - L`` with the recorded draws. Depth 0
    gives the zero state.
    """
    times = np.asarray(times, dtype=int)
    L = int(L)
    if L < 0:
        raise ValueError('The truncation depth must be non negative')
    if times.size and (times.min() < L or times.max() > traj.T):
        raise ValueError('Timestamps must lie in [L, T]')
    traj.warnIfTruncationInexact()
    system, policy = traj.system, traj.policy
    h = np.zeros((times.size, system.stateDim))
    for j in range(L):
        idx = times - L + j
        h = step(system, policy, h, traj.excitations[idx], traj.noises[idx])
    return h


def truncatedState(traj, t, L):
    """ The truncation ``h[t, L]`` for ``0 < L <= t <= T`` """
    if L < 1:
        raise ValueError('L must be at least 1')
    if L > t:
        raise ValueError('L must not exceed t')
    if t > traj.T:
        raise ValueError('t must not exceed T')
    return truncatedStates(traj, L, [t])[0]


def subsample(traj, L, offset):
    """
    Sub-samples the trajectory at ``offset + i * L``, ``i = 1..N`` with
    ``N = (T - L) // L``. States are truncated at depth ``L - 1`` and the
    targets at depth ``L``.
    """
    L, offset = int(L), int(offset)
    if L < 1:
        raise ValueError('L must be at least 1')
    if not 0 <= offset <= L - 1:
        raise ValueError('offset must lie in [0, L - 1]')
    count = (traj.T - L) // L
    if count < 1:
        raise ValueError('Trajectory of length %d holds no sample of period %d'
                         % (traj.T, L))
    times = offset + L * np.arange(1, count + 1)
    states = truncatedStates(traj, L - 1, times)
    z = traj.excitations[times]
    targets = step(traj.system, traj.policy, states, z, traj.noises[times])
    return SubTrajectory(offset, L, times, targets, states, z, traj.system,
                         traj.policy)


def stateNormProfile(system, policy, noise, T, reps, excitations=None):
    """
    Mean and sample standard deviation of ``||h[t]||`` across ``reps``
    rollouts, for ``t = 0..T``.
    """
    mean = np.zeros(T + 1)
    std = np.zeros(T + 1)
    for t, h, _, _ in iterateRollout(system, policy, noise, T, reps,
                                     excitations=excitations):
        norms = np.linalg.norm(h, axis=1)
        mean[t] = norms.mean()
        std[t] = norms.std(ddof=1) if reps > 1 else 0.0
    return mean, std
