# -*- coding: utf-8 -*-
""" This module defines the exceptions raised by :mod:`systraj`.

Rejected inputs (wrong shapes, out of range integers) raise a plain
`ValueError`. The classes below report numerical or configuration failures.

Reference
---------
"""


class SysTrajError(Exception):
    """Base class of every error raised on purpose by the library."""


class UnstableSystem(SysTrajError):
    """
    The closed loop does not contract on the observed rollouts.

    ``growth``

        The fitted per-step growth factor (greater or equal to 1).
    """

    def __init__(self, growth, message=None):
        self.growth = growth
        if message is None:
            message = 'Closed loop is empirically unstable (growth %.6g)' % growth
        super(UnstableSystem, self).__init__(message)


class NotStabilizable(SysTrajError):
    """No stabilizing feedback gain could be produced."""


class Diverged(SysTrajError):
    """
    Gradient descent produced a non-finite (or exploding) iterate.

    ``lastIterate``

        The last finite iterate.

    ``iteration``

        The iteration at which divergence was detected.
    """

    def __init__(self, lastIterate, iteration):
        self.lastIterate = lastIterate
        self.iteration = iteration
        super(Diverged, self).__init__(
            'Gradient descent diverged at iteration %d' % iteration)


class TrajectoryTooShort(SysTrajError):
    """
    No sampling period with at least one sub-sample fits in the trajectory.

    ``minimalT``

        The shortest trajectory length for which a plan exists.
    """

    def __init__(self, minimalT, T=None):
        self.minimalT = minimalT
        self.T = T
        super(TrajectoryTooShort, self).__init__(
            'Trajectory length %s is too short, at least %d is needed' % (T, minimalT))


class ConfigError(SysTrajError):
    """
    Invalid configuration.

    ``field``

        The offending key (may be `None` for syntax errors).

    ``line``

        The 1-based line number in the configuration file, when known.
    """

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        prefix = ''
        if line is not None:
            prefix = 'line %d: ' % line
        super(ConfigError, self).__init__(prefix + message)
