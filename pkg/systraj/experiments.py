# -*- coding: utf-8 -*-
""" This module runs the experiments: the error curves over nonlinearity,
noise level and trajectory length, the state norm profiles of unstable
systems, and the spectral statistics table.

Sweep points and repetitions run on a thread pool; results are assembled in
task order, so the CSV files do not depend on the number of workers.

Reference
---------
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .activation import Activation
from .errors import ConfigError, Diverged, NotStabilizable
from .identify import (LINEAR, NONLINEAR, GDConfig, MixingPlan, experimentLearningRate,
                       identify, mixingTime, theoryLearningRate)
from .stability import (covarianceBounds, darePolicy, estimateStability,
                        randomInputMatrix, randomUnstableMatrix, table1Trial)
from .system import LinearSystem, NoiseSpec, NonlinearSystem, Policy, zeroPolicy
from .trajectory import simulate, stateNormProfile
from .utils import deriveSeed, streamRng, writeCsv

logger = logging.getLogger(__name__)

SYSTEM_STREAM = 0
DRAW_STREAM = 1


def parallelMap(fn, tasks, workers=1):
    """ ``[fn(task) for task in tasks]`` on up to ``workers`` threads """
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, tasks))


def makeActivation(name, leakage=0.0):
    if name == 'leaky_relu':
        return Activation.leakyRelu(leakage)
    return Activation.fromName(name)


def makeSystem(cfg, seed, activation, sigma2=None, stabilize=True):
    """
    Draws the random unstable pair ``(A, B)`` of a repetition and returns the
    system, the feedback policy and the noise model.
    """
    rng = streamRng(seed, SYSTEM_STREAM)
    A = randomUnstableMatrix(cfg.n, rng, cfg.unstable_count, cfg.unstable_margin)
    B = randomInputMatrix(cfg.n, cfg.p, rng)
    if activation.kind == 'identity':
        system = LinearSystem(A, B)
    else:
        system = NonlinearSystem(A, B, activation, cfg.form)
    if stabilize and cfg.policy == 'dare':
        policy = Policy(darePolicy(A, B, cfg.dare_noise_var, rng, cfg.dare_perturb))
    else:
        policy = zeroPolicy(system)
    sigma2 = cfg.sigma2 if sigma2 is None else sigma2
    noise = NoiseSpec(np.sqrt(sigma2), deriveSeed(seed, DRAW_STREAM))
    return system, policy, noise


def _requireGamma(system):
    if not system.isLinear and not system.activation.gamma > 0.0:
        raise ConfigError('the theory rule needs a gamma-increasing activation',
                          field='lr_rule')


def mixingPlan(cfg, system, policy, noise, T):
    """
    The churn period of a run: ``cfg.churn`` for the scaled and fixed rules,
    the sampling period of :func:`systraj.identify.mixingTime` (linear or
    nonlinear constants measured on the closed loop) for the theory rule.
    """
    if cfg.lr_rule != 'theory':
        return MixingPlan(cfg.churn, (T - cfg.churn) // cfg.churn, {}, 'fixed')
    _requireGamma(system)
    estimate = estimateStability(system, policy, noise, cfg.stability_trials,
                                 cfg.stability_horizon)
    constants = {'C': cfg.constant_c, 'cRho': estimate.cRho, 'rho': estimate.rho,
                 'n': system.stateDim, 'leadingConstant': cfg.leading_constant}
    if not system.isLinear:
        constants.update(thetaStarNorm=float(np.linalg.norm(system.theta)),
                         sigma=noise.sigma)
        return mixingTime(NONLINEAR, constants, T)
    closed = system.closedLoop(policy)
    L = 2
    for _ in range(2):
        bundle = covarianceBounds(closed, system.B, noise.sigma, L, T)
        constants.update(betaPlus=bundle.betaPlus, gammaPlus=bundle.gammaPlus,
                         p=system.inputDim)
        plan = mixingTime(LINEAR, constants, T)
        L = max(2, plan.L)
    return plan


def learningRate(cfg, system, policy, noise, T, plan=None):
    """ The step size of the configured rule for a length ``T`` trajectory """
    if cfg.lr_rule == 'fixed':
        return cfg.lr
    if cfg.lr_rule == 'scaled':
        return experimentLearningRate(T, cfg.churn if plan is None else plan.L,
                                      cfg.lr_scale)
    _requireGamma(system)
    plan = mixingPlan(cfg, system, policy, noise, T) if plan is None else plan
    if system.isLinear:
        bundle = covarianceBounds(system.closedLoop(policy), system.B, noise.sigma,
                                  max(2, plan.L), T)
        return theoryLearningRate(LINEAR, gammaMinus=bundle.gammaMinus,
                                  gammaPlus=bundle.gammaPlus)
    return theoryLearningRate(NONLINEAR, gamma=system.activation.gamma,
                              rho=plan.constants['rho'], cRho=plan.constants['cRho'],
                              sigma=noise.sigma, n=system.stateDim)


def learnSystem(cfg, system, policy, noise, T, plan=None):
    """ Simulates a length `T` trajectory and learns it; raises on divergence """
    plan = mixingPlan(cfg, system, policy, noise, T) if plan is None else plan
    traj = simulate(system, policy, noise, T)
    gd = GDConfig(learningRate(cfg, system, policy, noise, T, plan), cfg.iterations,
                  thetaStar=system.theta, tol=cfg.grad_tol,
                  stopOnPlateau=cfg.stop_on_plateau, plateauTol=cfg.plateau_tol)
    return identify(traj, gd, plan)


def learnOnce(cfg, seed, activation, sigma2, T):
    """
    One repetition: draw the system, simulate, learn and return the report,
    `None` when the system cannot be stabilized or the descent diverges.
    """
    try:
        system, policy, noise = makeSystem(cfg, seed, activation, sigma2)
        return learnSystem(cfg, system, policy, noise, T)
    except NotStabilizable as e:
        logger.warning('Repetition with seed %d is not stabilizable: %s', seed, e)
    except Diverged as e:
        logger.warning('Repetition with seed %d diverged at iteration %d', seed,
                       e.iteration)
    return None


def _padded(series, length):
    out = np.full(length, series[-1] if len(series) else np.nan)
    out[:len(series)] = series
    return out


def runSweep(cfg, name, label, values, settings, outDir):
    """
    Runs ``cfg.reps`` repetitions at every sweep value. ``settings`` maps a
    value to ``(activation, sigma2, T)``. Repetition ``r`` uses the same
    system at every value.
    """
    seeds = [deriveSeed(cfg.seed, r) for r in range(cfg.reps)]
    tasks = [(i, r) for i in range(len(values)) for r in range(cfg.reps)]

    def task(key):
        i, r = key
        activation, sigma2, T = settings(values[i])
        return learnOnce(cfg, seeds[r], activation, sigma2, T)

    reports = parallelMap(task, tasks, cfg.workers)
    raw, summary = [], []
    for i, value in enumerate(values):
        chunk = reports[i * cfg.reps:(i + 1) * cfg.reps]
        for r, report in enumerate(chunk):
            if report is None:
                raw.append([value, r, seeds[r], None, None, None, None, True])
                continue
            report.toFile(os.path.join(outDir, 'reports', '%s=%s' % (label, value),
                                       'seed_%d.csv' % r), seeds[r])
            raw.append([value, r, seeds[r], report.errA[-1], report.errB[-1],
                        report.iterations, report.iterationsTo(cfg.threshold), False])
        valid = [rep for rep in chunk if rep is not None]
        if not valid:
            continue
        length = max(len(rep.errA) for rep in valid)
        errA = np.array([_padded(rep.errA, length) for rep in valid])
        errB = np.array([_padded(rep.errB, length) for rep in valid])
        for it in range(length):
            summary.append([value, cfg.seed, it, len(valid), errA[:, it].mean(),
                            errA[:, it].std(), errB[:, it].mean(), errB[:, it].std()])
    writeCsv(os.path.join(outDir, '%s_raw.csv' % name),
             [label, 'rep', 'seed', 'err_A', 'err_B', 'iterations',
              'iterations_to_threshold', 'failed'], raw)
    writeCsv(os.path.join(outDir, '%s_summary.csv' % name),
             [label, 'seed', 'iter', 'reps', 'err_A_mean', 'err_A_std',
              'err_B_mean', 'err_B_std'], summary)
    logger.info('%s: %d repetitions at %d sweep points', name, cfg.reps, len(values))
    return raw


def runFig1a(cfg, outDir):
    """ Leaky ReLU systems over the leakage grid """
    return runSweep(cfg, 'fig1a', 'leakage', cfg.leakages,
                    lambda v: (Activation.leakyRelu(v), cfg.sigma2, cfg.T), outDir)


def runFig1b(cfg, outDir):
    """ Noise variance sweep """
    activation = makeActivation(cfg.activation, cfg.leakage)
    return runSweep(cfg, 'fig1b', 'sigma2', cfg.sigma2_grid,
                    lambda v: (activation, v, cfg.T), outDir)


def runFig1c(cfg, outDir):
    """ Trajectory length sweep """
    activation = makeActivation(cfg.activation, cfg.leakage)
    return runSweep(cfg, 'fig1c', 'T', cfg.T_grid,
                    lambda v: (activation, cfg.sigma2, v), outDir)


def runFig2(cfg, outDir):
    """
    State norm profiles of open loop leaky ReLU systems with unstable ``A``,
    one random system per repetition.
    """
    horizon = cfg.fig2_horizon
    tasks = [(i, r) for i in range(len(cfg.leakages)) for r in range(cfg.fig2_reps)]
    seeds = [deriveSeed(cfg.seed, r) for r in range(cfg.fig2_reps)]

    def task(key):
        i, r = key
        activation = Activation.leakyRelu(cfg.leakages[i])
        system, policy, noise = makeSystem(cfg, seeds[r], activation, stabilize=False)
        mean, _ = stateNormProfile(system, policy, noise, horizon, 1)
        return mean

    profiles = parallelMap(task, tasks, cfg.workers)
    raw, summary = [], []
    marks = sorted(set([min(20, horizon), horizon]))
    for i, leakage in enumerate(cfg.leakages):
        block = np.array(profiles[i * cfg.fig2_reps:(i + 1) * cfg.fig2_reps])
        for r in range(cfg.fig2_reps):
            raw.append([leakage, r, seeds[r]] + [block[r, t] for t in marks])
        std = block.std(axis=0, ddof=1) if cfg.fig2_reps > 1 else np.zeros(horizon + 1)
        for t in range(horizon + 1):
            summary.append([leakage, cfg.seed, t, block[:, t].mean(), std[t]])
    writeCsv(os.path.join(outDir, 'fig2_raw.csv'),
             ['leakage', 'rep', 'seed'] + ['norm_t%d' % t for t in marks], raw)
    writeCsv(os.path.join(outDir, 'fig2_summary.csv'),
             ['leakage', 'seed', 't', 'norm_mean', 'norm_std'], summary)
    return summary


TABLE1_COLUMNS = ('norm_A', 'norm_Aprime', 'rho_A', 'rho_Aprime', 'nl_norm_A',
                  'nl_norm_Aprime')


def runTable1(cfg, outDir):
    """ Spectral statistics of random unstable systems and their closed loops """
    seeds = [deriveSeed(cfg.seed, i) for i in range(cfg.trials)]

    def task(i):
        try:
            return table1Trial(cfg.n, cfg.p, cfg.leakages, seeds[i], cfg.dare_noise_var,
                               cfg.restarts, cfg.unstable_count, cfg.unstable_margin,
                               cfg.dare_perturb)
        except NotStabilizable:
            logger.warning('Trial %d is not stabilizable', i)
            return None

    rows = parallelMap(task, range(cfg.trials), cfg.workers)
    raw, summary = [], []
    for i, row in enumerate(rows):
        for j, leakage in enumerate(cfg.leakages):
            if row is None:
                raw.append([i, seeds[i], leakage] + [None] * 6 + [True])
                continue
            raw.append([i, seeds[i], leakage, row['norm_A'], row['norm_Aprime'],
                        row['rho_A'], row['rho_Aprime'], row['nl_norm_A'][j],
                        row['nl_norm_Aprime'][j], False])
    valid = [row for row in rows if row is not None]
    for j, leakage in enumerate(cfg.leakages):
        line = [leakage, cfg.seed, len(valid)]
        for column in TABLE1_COLUMNS:
            values = np.array([row[column][j] if column.startswith('nl_') else
                               row[column] for row in valid])
            line += [values.mean(), values.std()] if len(values) else [None, None]
        summary.append(line)
    header = ['leakage', 'seed', 'trials']
    for column in TABLE1_COLUMNS:
        header += [column + '_mean', column + '_std']
    writeCsv(os.path.join(outDir, 'table1_raw.csv'),
             ['trial', 'seed', 'leakage'] + list(TABLE1_COLUMNS) + ['failed'], raw)
    writeCsv(os.path.join(outDir, 'table1.csv'), header, summary)
    return summary


RUNNERS = {
    'fig1a': runFig1a,
    'fig1b': runFig1b,
    'fig1c': runFig1c,
    'fig2': runFig2,
    'table1': runTable1,
}


def runExperiment(cfg, name, outDir):
    if name not in RUNNERS:
        raise ConfigError('unknown experiment %s' % name, field='experiment')
    if not os.path.isdir(outDir):
        os.makedirs(outDir)
    return RUNNERS[name](cfg, outDir)
