# -*- coding: utf-8 -*-
""" This module defines the :class:`systraj.config.ExperimentConfig` and its
flat ``key = value`` file format.

Lines starting with ``#`` and blank lines are ignored, list values are comma
separated. Unknown keys are rejected.

Reference
---------
"""

from collections import OrderedDict

from .activation import KINDS
from .errors import ConfigError

EXPERIMENTS = ('fig1a', 'fig1b', 'fig1c', 'fig2', 'table1', 'identify', 'verify',
               'simulate')

# key -> (type, default, description)
SCHEMA = OrderedDict([
    ['experiment', ('str', '', 'Experiment or subcommand to run')],
    ['n', ('int', 80, 'State dimension')],
    ['p', ('int', 50, 'Input dimension')],
    ['T', ('int', 2000, 'Trajectory length')],
    ['sigma2', ('float', 0.01, 'Process noise variance')],
    ['activation', ('str', 'softplus', 'identity, leaky_relu or softplus')],
    ['leakage', ('float', 0.0, 'Leaky ReLU slope of single runs')],
    ['form', ('str', 'premix', 'premix (phi(Ah + Bu)) or postadd (phi(Ah) + Bu)')],
    ['policy', ('str', 'dare', 'dare (noisy Riccati gain) or zero')],
    ['leakages', ('floatlist', [0.0, 0.5, 0.8, 1.0], 'Leakage sweep')],
    ['sigma2_grid', ('floatlist', [0.01, 0.1, 1.0], 'Noise variance sweep')],
    ['T_grid', ('intlist', [500, 1000, 2000, 4000], 'Trajectory length sweep')],
    ['reps', ('int', 20, 'Repetitions per sweep point')],
    ['trials', ('int', 1000, 'Random trials of the spectral table')],
    ['fig2_reps', ('int', 500, 'Rollouts per leakage of the state norm profile')],
    ['fig2_horizon', ('int', 100, 'Horizon of the state norm profile')],
    ['seed', ('int', 0, 'Master seed')],
    ['lr_rule', ('str', 'scaled', 'scaled (0.1 / T), theory or fixed')],
    ['lr', ('float', 0.0, 'Learning rate of the fixed rule')],
    ['lr_scale', ('float', 0.1, 'Numerator of the scaled rule')],
    ['iterations', ('int', 1000, 'Gradient descent iteration cap')],
    ['stop_on_plateau', ('bool', True, 'Stop gradient descent on error plateaus')],
    ['plateau_tol', ('float', 1e-3, 'Relative spread of a plateau')],
    ['grad_tol', ('float', 1e-10, 'Gradient norm stopping tolerance')],
    ['churn', ('int', 1, 'Churn period L of the empirical loss')],
    ['threshold', ('float', 0.05, 'Error threshold of the iteration counts')],
    ['dare_noise_var', ('float', 0.001, 'Variance of the gain perturbation')],
    ['dare_perturb', ('str', 'gain', 'gain or riccati')],
    ['unstable_count', ('int', 10, 'Eigenvalues of A outside the unit circle')],
    ['unstable_margin', ('float', 0.02, 'Modulus margin of the unstable eigenvalues')],
    ['restarts', ('int', 10, 'Restarts of the nonlinear operator norm ascent')],
    ['constant_c', ('float', 1.0, 'Absolute constant C of the sampling period')],
    ['leading_constant', ('str', 'product', 'product (C cRho) or literal (C rho)')],
    ['stability_trials', ('int', 20, 'Paired rollouts of the stability fit')],
    ['stability_horizon', ('int', 60, 'Horizon of the stability fit')],
    ['verify_probes', ('int', 4, 'Probe directions per radius')],
    ['verify_radius', ('float', 1.0, 'Radius of the probed ball')],
    ['verify_samples', ('int', 20000, 'Monte Carlo trajectories of the checks')],
    ['verify_reps', ('int', 4, 'Trajectories per length of the concentration check')],
    ['workers', ('int', 1, 'Parallel workers')],
    ['output', ('str', 'out', 'Output directory')],
])

CHOICES = {
    'experiment': ('',) + EXPERIMENTS,
    'activation': KINDS,
    'form': ('premix', 'postadd'),
    'policy': ('dare', 'zero'),
    'lr_rule': ('scaled', 'theory', 'fixed'),
    'dare_perturb': ('gain', 'riccati'),
    'leading_constant': ('product', 'literal'),
}

POSITIVE = ('n', 'p', 'T', 'reps', 'trials', 'fig2_reps', 'fig2_horizon', 'iterations',
            'churn', 'restarts', 'stability_trials', 'verify_probes', 'verify_samples',
            'verify_reps', 'workers')

_TRUE = ('1', 'true', 'yes', 'on')
_FALSE = ('0', 'false', 'no', 'off')


def _parseValue(kind, text):
    text = text.strip()
    if kind == 'int':
        return int(text)
    if kind == 'float':
        return float(text)
    if kind == 'bool':
        if text.lower() in _TRUE:
            return True
        if text.lower() in _FALSE:
            return False
        raise ValueError('not a boolean: %s' % text)
    if kind == 'floatlist':
        return [float(v) for v in text.split(',') if v.strip()]
    if kind == 'intlist':
        return [int(v) for v in text.split(',') if v.strip()]
    return text


def _formatValue(kind, value):
    if kind == 'float':
        return repr(float(value))
    if kind == 'bool':
        return 'true' if value else 'false'
    if kind == 'floatlist':
        return ', '.join(repr(float(v)) for v in value)
    if kind == 'intlist':
        return ', '.join(str(int(v)) for v in value)
    return str(value)


class ExperimentConfig(object):
    """
    The settings of a run. Every key of :data:`SCHEMA` is an attribute;
    keyword arguments override the defaults.

    Usage example::

        from systraj.config import ExperimentConfig, loadConfig

        config = loadConfig('fig1b.cfg')
        config = config.update(reps=5, seed=3)
    """

    def __init__(self, **values):
        for key, (kind, default, _) in SCHEMA.items():
            setattr(self, key, list(default) if isinstance(default, list) else default)
        for key, value in values.items():
            if key not in SCHEMA:
                raise ConfigError('unknown key %s' % key, field=key)
            setattr(self, key, value)

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.asDict() == other.asDict()

    def asDict(self):
        return OrderedDict((key, getattr(self, key)) for key in SCHEMA)

    def update(self, **values):
        merged = self.asDict()
        for key, value in values.items():
            if value is not None:
                merged[key] = value
        return ExperimentConfig(**merged)

    @property
    def sigma(self):
        return self.sigma2 ** 0.5

    def validate(self):
        for key, choices in CHOICES.items():
            if getattr(self, key) not in choices:
                raise ConfigError('%s must be one of %s' % (key, ', '.join(
                    c for c in choices if c)), field=key)
        for key in POSITIVE:
            if getattr(self, key) < 1:
                raise ConfigError('%s must be at least 1' % key, field=key)
        for key in ('sigma2', 'dare_noise_var', 'lr', 'unstable_margin'):
            if getattr(self, key) < 0.0:
                raise ConfigError('%s must be non negative' % key, field=key)
        if not 0.0 <= self.leakage <= 1.0:
            raise ConfigError('leakage must lie in [0, 1]', field='leakage')
        for key in ('leakages', 'sigma2_grid', 'T_grid'):
            if not getattr(self, key):
                raise ConfigError('%s must not be empty' % key, field=key)
        if any(not 0.0 <= v <= 1.0 for v in self.leakages):
            raise ConfigError('leakages must lie in [0, 1]', field='leakages')
        if any(v < 0.0 for v in self.sigma2_grid):
            raise ConfigError('sigma2_grid must be non negative', field='sigma2_grid')
        if any(v <= self.churn for v in self.T_grid + [self.T]):
            raise ConfigError('trajectory lengths must exceed churn', field='T_grid')
        if self.unstable_count > self.n:
            raise ConfigError('unstable_count must not exceed n', field='unstable_count')
        if self.lr_rule == 'fixed' and not self.lr > 0.0:
            raise ConfigError('lr must be positive with the fixed rule', field='lr')
        for key in ('lr_scale', 'constant_c'):
            if not getattr(self, key) > 0.0:
                raise ConfigError('%s must be positive' % key, field=key)
        if self.stability_horizon < 2:
            raise ConfigError('stability_horizon must be at least 2',
                              field='stability_horizon')
        return self

    def serialize(self):
        lines = []
        for key, (kind, _, description) in SCHEMA.items():
            lines.append('# %s' % description)
            lines.append('%s = %s' % (key, _formatValue(kind, getattr(self, key))))
        return '\n'.join(lines) + '\n'

    def toFile(self, filePath):
        with open(filePath, 'w', encoding='utf-8') as f:
            f.write(self.serialize())


def parseConfig(text):
    """ Parses the text of a configuration file into an :class:`ExperimentConfig` """
    values = {}
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError('expected "key = value"', line=number)
        key, value = [part.strip() for part in line.split('=', 1)]
        if key not in SCHEMA:
            raise ConfigError('unknown key %s' % key, field=key, line=number)
        if key in values:
            raise ConfigError('duplicate key %s' % key, field=key, line=number)
        try:
            values[key] = _parseValue(SCHEMA[key][0], value)
        except ValueError:
            raise ConfigError('invalid %s value for %s: %s' % (
                SCHEMA[key][0], key, value), field=key, line=number)
    return ExperimentConfig(**values)


def loadConfig(filePath):
    with open(filePath, 'r', encoding='utf-8') as f:
        return parseConfig(f.read())
