# -*- coding: utf-8 -*-
""" This module defines the :class:`systraj.activation.Activation`.

Activations are scalar and applied entrywise.

Reference
---------
"""

import numpy as np
from scipy.special import expit

IDENTITY = 'identity'
LEAKY_RELU = 'leaky_relu'
SOFTPLUS = 'softplus'

KINDS = (IDENTITY, LEAKY_RELU, SOFTPLUS)


class Activation(object):
    """
    An entrywise activation function together with its derivatives.

    Constructor arguments:

    ``kind``

        One of `identity`, `leaky_relu` or `softplus`.

    ``leakage``

        The slope of the negative branch of the leaky ReLU, in [0, 1].
        Ignored by the other kinds. Default is `0.0`.

    Usage example::

        from systraj.activation import Activation

        phi = Activation.leakyRelu(0.5)
        phi(-2.0)  # -1.0
        phi.derivative(0.0)  # 1.0
    """

    def __init__(self, kind=IDENTITY, leakage=0.0):
        if kind not in KINDS:
            raise ValueError('Unknown activation kind %s' % kind)
        leakage = float(leakage)
        if kind == LEAKY_RELU and not 0.0 <= leakage <= 1.0:
            raise ValueError('leakage must lie in [0, 1]')
        self.kind = kind
        self.leakage = leakage if kind == LEAKY_RELU else 0.0

    @classmethod
    def identity(cls):
        return cls(IDENTITY)

    @classmethod
    def leakyRelu(cls, leakage):
        return cls(LEAKY_RELU, leakage)

    @classmethod
    def softplus(cls):
        return cls(SOFTPLUS)

    @classmethod
    def fromName(cls, name, leakage=0.0):
        return cls(name, leakage)

    def __repr__(self):
        if self.kind == LEAKY_RELU:
            return 'Activation(%s, %g)' % (self.kind, self.leakage)
        return 'Activation(%s)' % self.kind

    def __eq__(self, other):
        return (isinstance(other, Activation) and self.kind == other.kind and
                self.leakage == other.leakage)

    def __hash__(self):
        return hash((self.kind, self.leakage))

    def __call__(self, x):
        return self.evaluate(x)

    @property
    def isIdentity(self):
        return self.kind == IDENTITY or (self.kind == LEAKY_RELU and self.leakage == 1.0)

    @property
    def gamma(self):
        """
        The lower bound of the derivative. A kind is gamma-increasing when
        this is positive.
        """
        if self.kind == IDENTITY:
            return 1.0
        if self.kind == LEAKY_RELU:
            return self.leakage
        return 0.0

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == IDENTITY:
            return x.copy() if x.ndim else float(x)
        if self.kind == LEAKY_RELU:
            out = np.where(x >= 0.0, x, self.leakage * x)
        else:
            # max(x, 0) + log(1 + exp(-|x|)) does not overflow
            out = np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))
        return out if out.ndim else float(out)

    def derivative(self, x):
        """ First derivative. The leaky ReLU uses the right derivative at 0. """
        x = np.asarray(x, dtype=float)
        if self.kind == IDENTITY:
            out = np.ones_like(x)
        elif self.kind == LEAKY_RELU:
            out = np.where(x >= 0.0, 1.0, self.leakage)
        else:
            out = expit(x)
        return out if out.ndim else float(out)

    def secondDerivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == SOFTPLUS:
            s = expit(x)
            out = s * (1.0 - s)
        else:
            out = np.zeros_like(x)
        return out if out.ndim else float(out)
