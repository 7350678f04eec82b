# -*- coding: utf-8 -*-

import csv
import os

import numpy as np

# Stream identifiers for the per-stream seed counters
EXCITATION_STREAM = 0
NOISE_STREAM = 1
INITIAL_STREAM = 2
PROBE_STREAM = 3


def deriveSeed(seed, *key):
    """
    Derives a 64-bit integer seed from a master seed and an integer key path.
    The derivation only depends on ``key``, never on how many siblings exist.
    """
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def streamRng(seed, *key):
    return np.random.default_rng(
        np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def formatFloat(value):
    """ Formats a float with 17 significant digits """
    value = float(value)
    if np.isnan(value):
        return 'nan'
    return '%.17g' % value


def formatCell(value):
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return '1' if value else '0'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return formatFloat(value)
    return str(value)


def writeCsv(filePath, header, rows, overwrite=True):
    if not overwrite and os.path.isfile(filePath):
        raise IOError('File %s already exists' % filePath)
    directory = os.path.dirname(filePath)
    if directory and not os.path.isdir(directory):
        os.makedirs(directory)
    with open(filePath, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([formatCell(v) for v in row])


def readCsv(filePath):
    with open(filePath, 'r', newline='', encoding='utf-8') as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [row for row in reader]
    return header, rows


def randomUnitVectors(rng, count, shape):
    """ Directions drawn uniformly on the unit sphere of the given array shape """
    draws = rng.standard_normal((count,) + tuple(shape))
    norms = np.sqrt(np.sum(draws.reshape(count, -1) ** 2, axis=1))
    norms[norms == 0.0] = 1.0
    return draws / norms.reshape((count,) + (1,) * len(shape))


def asMatrix(value, name, rows=None, cols=None):
    m = np.array(value, dtype=float, copy=True)
    if m.ndim == 1 and cols == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise ValueError('%s must be a 2 dimensional matrix' % name)
    if rows is not None and m.shape[0] != rows:
        raise ValueError('%s must have %d rows, got %d' % (name, rows, m.shape[0]))
    if cols is not None and m.shape[1] != cols:
        raise ValueError('%s must have %d columns, got %d' % (name, cols, m.shape[1]))
    if not np.all(np.isfinite(m)):
        raise ValueError('%s must only contain finite entries' % name)
    return m


def fitLogSlope(x, y):
    """ Least squares slope of log(y) against log(x), ignoring non positive values """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    if np.count_nonzero(keep) < 2:
        return float('nan')
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])
