# -*- coding: utf-8 -*-
""" Command line entry point ``systraj``.

::

    systraj <subcommand> --config <path> [--seed N] [--out DIR] [--workers K]

Subcommands are `simulate`, `identify`, `verify` and
`experiment --name {fig1a,fig1b,fig1c,fig2,table1}`. The exit status is 0 on
success, 2 on a configuration error and 3 on a numerical failure.

Reference
---------
"""

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone

from .config import ExperimentConfig, loadConfig
from .errors import ConfigError, SysTrajError
from .experiments import (RUNNERS, learnSystem, makeActivation, makeSystem, mixingPlan,
                          runExperiment)
from .stability import estimateStability
from .trajectory import simulate
from .utils import deriveSeed
from .verify import verifyAll, writeReports

logger = logging.getLogger('systraj')

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def buildParser():
    parser = argparse.ArgumentParser(
        prog='systraj',
        description='Learn dynamical systems from a single trajectory')
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='configuration file (key = value lines)')
    common.add_argument('--seed', type=int, help='master seed')
    common.add_argument('--out', help='output directory')
    common.add_argument('--workers', type=int, help='parallel workers')
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', action='store_true', help='debug logging')
    verbosity.add_argument('--quiet', action='store_true', help='warnings only')
    sub = parser.add_subparsers(dest='command')
    sub.required = True
    sub.add_parser('simulate', parents=[common], help='simulate one trajectory')
    sub.add_parser('identify', parents=[common], help='learn one system')
    sub.add_parser('verify', parents=[common], help='check the assumptions')
    experiment = sub.add_parser('experiment', parents=[common],
                                help='run one of the experiments')
    experiment.add_argument('--name', required=True, choices=sorted(RUNNERS))
    return parser


def configureLogging(args):
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def resolveConfig(args):
    cfg = loadConfig(args.config) if args.config else ExperimentConfig()
    experiment = args.name if args.command == 'experiment' else args.command
    cfg = cfg.update(seed=args.seed, output=args.out, workers=args.workers,
                     experiment=experiment)
    return cfg.validate()


def _system(cfg):
    activation = makeActivation(cfg.activation, cfg.leakage)
    return makeSystem(cfg, deriveSeed(cfg.seed, 0), activation)


def runSimulate(cfg, outDir):
    system, policy, noise = _system(cfg)
    traj = simulate(system, policy, noise, cfg.T)
    traj.toFile(os.path.join(outDir, 'trajectory.csv'), overwrite=True, seed=cfg.seed)
    return {}


def _planMetadata(plan):
    return {'sampling_period': plan.L, 'samples': plan.N, 'plan_mode': plan.mode}


def runIdentify(cfg, outDir):
    system, policy, noise = _system(cfg)
    plan = mixingPlan(cfg, system, policy, noise, cfg.T)
    report = learnSystem(cfg, system, policy, noise, cfg.T, plan)
    report.toFile(os.path.join(outDir, 'identify_report.csv'), cfg.seed)
    logger.info('Normalized errors: A %.6g, B %.6g after %d iterations (L=%d)',
                report.errA[-1], report.errB[-1], report.iterations, plan.L)
    return _planMetadata(plan)


def runVerify(cfg, outDir):
    system, policy, noise = _system(cfg)
    plan = mixingPlan(cfg, system, policy, noise, cfg.T)
    estimate = estimateStability(system, policy, noise, cfg.stability_trials,
                                 cfg.stability_horizon)
    reports = verifyAll(system, policy, noise, estimate, max(2, plan.L), cfg.T,
                        cfg.verify_radius, cfg.verify_probes, cfg.verify_samples,
                        reps=cfg.verify_reps)
    writeReports(os.path.join(outDir, 'verify.csv'), reports, cfg.seed)
    return _planMetadata(plan)


def writeMetadata(outDir, cfg, started, extra=None):
    metadata = {
        'experiment': cfg.experiment,
        'seed': cfg.seed,
        'workers': cfg.workers,
        'started': started.isoformat(),
        'finished': datetime.now(timezone.utc).isoformat(),
        'config': cfg.serialize(),
    }
    metadata.update(extra or {})
    with open(os.path.join(outDir, 'run.json'), 'w', encoding='utf-8') as f:
        json.dump(metadata, f, indent=2, sort_keys=True)


def main(argv=None):
    parser = buildParser()
    args = parser.parse_args(argv)
    configureLogging(args)
    started = datetime.now(timezone.utc)
    try:
        cfg = resolveConfig(args)
    except (ConfigError, ValueError, IOError) as e:
        sys.stderr.write('systraj: configuration error: %s\n' % e)
        return EXIT_CONFIG
    outDir = cfg.output
    if not os.path.isdir(outDir):
        os.makedirs(outDir)
    extra = {}
    try:
        if args.command == 'simulate':
            extra = runSimulate(cfg, outDir)
        elif args.command == 'identify':
            extra = runIdentify(cfg, outDir)
        elif args.command == 'verify':
            extra = runVerify(cfg, outDir)
        else:
            runExperiment(cfg, cfg.experiment, outDir)
    except ConfigError as e:
        sys.stderr.write('systraj: configuration error: %s\n' % e)
        return EXIT_CONFIG
    except SysTrajError as e:
        sys.stderr.write('systraj: numerical failure: %s\n' % e)
        return EXIT_NUMERICAL
    writeMetadata(outDir, cfg, started, extra)
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
