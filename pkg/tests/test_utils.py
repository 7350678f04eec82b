# -*- coding: utf-8 -*-

import os
import unittest

import numpy as np

from systraj.utils import (asMatrix, deriveSeed, fitLogSlope, formatCell, formatFloat,
                           randomUnitVectors, readCsv, streamRng, writeCsv)


class TestUtils(unittest.TestCase):

    def testDeriveSeed(self):
        self.assertEqual(deriveSeed(0, 1, 2), deriveSeed(0, 1, 2))
        self.assertNotEqual(deriveSeed(0, 1, 2), deriveSeed(0, 2, 1))
        self.assertNotEqual(deriveSeed(0, 1), deriveSeed(1, 1))
        self.assertTrue(0 <= deriveSeed(5, 3) < 2 ** 64)

    def testStreamRng(self):
        a = streamRng(4, 1).standard_normal(5)
        b = streamRng(4, 1).standard_normal(5)
        c = streamRng(4, 2).standard_normal(5)
        np.testing.assert_array_equal(a, b)
        self.assertFalse(np.allclose(a, c))

    def testFormatFloat(self):
        self.assertEqual(formatFloat(0.1), '0.10000000000000001')
        self.assertEqual(float(formatFloat(1.0 / 3.0)), 1.0 / 3.0)
        self.assertEqual(formatFloat(float('nan')), 'nan')

    def testFormatCell(self):
        self.assertEqual(formatCell(None), '')
        self.assertEqual(formatCell(True), '1')
        self.assertEqual(formatCell(np.bool_(False)), '0')
        self.assertEqual(formatCell(np.int64(7)), '7')
        self.assertEqual(formatCell('fig1b'), 'fig1b')

    def testCsv(self):
        filePath = 'tests/data/utils_test.csv'
        try:
            writeCsv(filePath, ['a', 'b'], [[1, 0.5], [2, None]])
            header, rows = readCsv(filePath)
            self.assertEqual(header, ['a', 'b'])
            self.assertEqual(rows, [['1', '0.5'], ['2', '']])
            with self.assertRaises(IOError):
                writeCsv(filePath, ['a'], [], overwrite=False)
        finally:
            if os.path.exists(filePath):
                os.remove(filePath)

    def testRandomUnitVectors(self):
        vectors = randomUnitVectors(np.random.default_rng(0), 5, (3, 4))
        self.assertEqual(vectors.shape, (5, 3, 4))
        norms = np.sqrt(np.sum(vectors.reshape(5, -1) ** 2, axis=1))
        np.testing.assert_allclose(norms, np.ones(5))

    def testAsMatrix(self):
        self.assertEqual(asMatrix([1.0, 2.0], 'v', cols=1).shape, (2, 1))
        with self.assertRaises(ValueError):
            asMatrix([1.0, 2.0], 'v')

        with self.assertRaises(ValueError):
            asMatrix(np.eye(2), 'M', rows=3)

        with self.assertRaises(ValueError):
            asMatrix([[np.inf]], 'M')

    def testFitLogSlope(self):
        x = np.array([10.0, 100.0, 1000.0])
        self.assertAlmostEqual(fitLogSlope(x, 3.0 / np.sqrt(x)), -0.5)
        self.assertTrue(np.isnan(fitLogSlope([1.0], [1.0])))
