# -----------------------------------------------------------------------------
# Name:         test_lpp.py
# Purpose:      Tests for last-passage percolation
#
# Author:       the tasepfan developers
# Copyright:    (c) 2024 by the tasepfan developers
# License:      BSD, see license.txt
# -----------------------------------------------------------------------------
import math
import os
import unittest

import numpy as np

from tasepfan import lpp
from tasepfan.lpp import GridTooSmallError, PassageError

FULL = os.environ.get('TASEPFAN_FULL') == '1'

# -----------------------------------------------------------------------------


class Test(unittest.TestCase):

    def runTest(self):
        pass

    def test_recursionMatchesAllPaths(self):
        rng = np.random.default_rng(0)
        weights = rng.exponential(size=(4, 5))
        grid = lpp.PassageGrid(weights)
        brute = lpp.bruteForcePassageTimes(weights)
        self.assertTrue(np.allclose(grid.times, brute))
        self.assertAlmostEqual(grid.T(0, 0), weights[0, 0])

    def assertRecursionExact(self, draws):
        for draw in range(draws):
            rng = np.random.default_rng(draw)
            for I in range(1, 10):
                for J in range(1, 11 - I):
                    weights = rng.exponential(size=(I, J))
                    grid = lpp.PassageGrid(weights)
                    brute = lpp.bruteForcePassageTimes(weights)
                    self.assertTrue(np.array_equal(grid.times, brute),
                                    f'{I}x{J} grid of draw {draw}')

    def test_recursionMatchesAllPathsEveryShape(self):
        self.assertRecursionExact(5)

    @unittest.skipUnless(FULL, 'set TASEPFAN_FULL=1 for the full tier')
    def test_recursionMatchesAllPathsFullTier(self):
        self.assertRecursionExact(1000)

    def test_meanOfSmallestSquare(self):
        # T(1, 1) = tau(0, 0) + max(tau(1, 0), tau(0, 1)) + tau(1, 1)
        samples = np.array([lpp.sampleGrid(2, 2, seed).T(1, 1)
                            for seed in range(4000)])
        stderr = samples.std(ddof=1) / math.sqrt(len(samples))
        self.assertLess(abs(samples.mean() - 3.5), 4.0 * stderr)

    def test_optimalPath(self):
        grid = lpp.sampleGrid(6, 7, 3)
        path = grid.pathTo(5, 6)
        self.assertEqual(path[0], (0, 0))
        self.assertEqual(path[-1], (5, 6))
        self.assertEqual(len(path), 12)
        for (a, b), (c, d) in zip(path, path[1:]):
            self.assertEqual((c - a) + (d - b), 1)
        self.assertAlmostEqual(grid.pathWeight(path), grid.T(5, 6))

    def test_sampleGridIsAddressed(self):
        small = lpp.sampleGrid(5, 5, 9)
        large = lpp.sampleGrid(12, 8, 9)
        self.assertTrue(np.array_equal(small.weights, large.weights[:5, :5]))
        self.assertTrue(np.array_equal(small.times, large.times[:5, :5]))
        with self.assertRaises(PassageError):
            lpp.sampleGrid(0, 3, 1)

    def test_wedgeMap(self):
        p = lpp.WedgePoint(-2, 3)
        self.assertEqual(lpp.wedgeToUpright(p), (0, 2))
        self.assertEqual(lpp.uprightToWedge(0, 2), p)
        for i in range(4):
            for j in range(4):
                q = lpp.uprightToWedge(i, j)
                self.assertEqual(lpp.wedgeToUpright(q), (i, j))
        with self.assertRaises(PassageError):
            lpp.WedgePoint(-3, 3)
        with self.assertRaises(PassageError):
            lpp.WedgePoint(0, 0)
        with self.assertRaises(PassageError):
            lpp.uprightToWedge(-1, 0)

    def test_wedgeRecursion(self):
        grid = lpp.sampleGrid(6, 5, 4)
        theta = lpp.wedgePassageTimes(grid)
        self.assertEqual(len(theta), 30)
        for (x, y), value in theta.items():
            i, j = lpp.wedgeToUpright(lpp.WedgePoint(x, y))
            self.assertAlmostEqual(value, grid.T(i, j))

    def test_interfaceDuality(self):
        grid = lpp.sampleGrid(6, 6, 2)
        self.assertEqual(lpp.dualityCheck(grid), 0)
        self.assertEqual(lpp.dualityCheck(grid, times=[0.5, 2.0, 7.5]), 0)

    def test_interfaceFromGrid(self):
        grid = lpp.sampleGrid(10, 10, 1)
        self.assertEqual(lpp.interfaceFromGrid(grid, 0.0, 0), 0)
        # to the left of the origin the wedge starts at -i
        self.assertEqual(lpp.interfaceFromGrid(grid, 0.0, -3), 3)
        profile = lpp.interfaceProfile(grid, 2.0, (-3, 3))
        self.assertTrue(np.all(-np.diff(profile) >= 0))
        with self.assertRaises(GridTooSmallError):
            lpp.interfaceFromGrid(grid, 1e6, 0)
        with self.assertRaises(GridTooSmallError):
            lpp.interfaceFromGrid(grid, 1.0, 10)

    def test_shapeFunctions(self):
        self.assertAlmostEqual(lpp.fShape(0.5), 2.0)
        self.assertAlmostEqual(lpp.gamma(0.0, 1.0), 4.0)
        self.assertAlmostEqual(lpp.gamma(1.0, 0.0), 1.0)
        self.assertAlmostEqual(lpp.gShape(1.0), 0.0)
        self.assertAlmostEqual(lpp.gShape(-1.0), 1.0)
        self.assertAlmostEqual(lpp.flux(0.5), 0.25)
        self.assertAlmostEqual(lpp.fSecondDerivative(0.5), -4.0)
        self.assertAlmostEqual(lpp.fSecondDerivative(0.25), -6.158, places=3)
        with self.assertRaises(PassageError):
            lpp.gamma(-2.0, 1.0)

    def test_levelCurve(self):
        for x in np.linspace(-1.0, 1.0, 1001):
            self.assertLess(abs(lpp.gamma(x, lpp.gShape(x)) - 1.0), 1e-12)

    def test_legendreDuality(self):
        err = lpp.legendreCheck(np.linspace(0.0, 1.0, 11),
                                np.linspace(-1.0, 1.0, 20001))
        self.assertLess(err, 1e-6)
        err = lpp.legendreCheck(np.linspace(0.0, 1.0, 1001),
                                np.linspace(-1.0, 1.0, 2001))
        self.assertLess(err, 1e-5)

    def test_strongConcavity(self):
        report = lpp.fConcavityCheck(0.25, 0.05, 300, seed=1)
        self.assertTrue(report)
        self.assertTrue(report.curvaturePassed)
        self.assertEqual(report.checked + report.skipped, 300)
        self.assertGreater(report.checked, 0)
        with self.assertRaises(PassageError):
            lpp.fConcavityCheck(0.6, 0.05, 10)

    def test_limitShapeSmall(self):
        result = lpp.limitShapeExperiment(40, 0.5, 5, 3)
        self.assertEqual(len(result.samples), 5)
        self.assertTrue(1.3 < result.mean < 2.2)
        self.assertTrue(result.upperBoundHolds)
        self.assertEqual(len(result.row()), len(lpp.ShapeResult.header))
        with self.assertRaises(PassageError):
            lpp.limitShapeExperiment(40, 0.0, 5, 3)
        with self.assertRaises(PassageError):
            lpp.limitShapeExperiment(3, 0.1, 5, 3)

    def test_concentrationSmall(self):
        rows = lpp.concentrationExperiment([10, 20], 0.5, 4, 2)
        self.assertEqual([r[0] for r in rows], [10, 20])
        for n, std, envelope, mean in rows:
            self.assertAlmostEqual(envelope,
                                   3.0 * math.sqrt(n) * math.log(n ** 2))
            self.assertLess(std, envelope)
        with self.assertRaises(PassageError):
            lpp.concentrationExperiment([1], 0.5, 4, 2)

    def test_limitShapeGrowsWithN(self):
        small = lpp.limitShapeExperiment(40, 0.5, 20, 3)
        large = lpp.limitShapeExperiment(400, 0.5, 20, 3)
        self.assertGreater(large.mean, small.mean)
        self.assertTrue(large.upperBoundHolds)

    def test_stdGrowth(self):
        rows = [(10, 1.0, 0.0, 0.0), (40, 2.0, 0.0, 0.0),
                (40, 2.5, 0.0, 0.0), (160, 0.0, 0.0, 0.0),
                (640, 1.0, 0.0, 0.0)]
        growth = lpp.stdGrowth(rows)
        self.assertEqual([(a, b) for a, b, _, _ in growth],
                         [(10, 40), (40, 160), (160, 640)])
        self.assertEqual(growth[0][2:], (2.0, 4.0))
        self.assertEqual(growth[1][2], 0.0)
        self.assertTrue(math.isnan(growth[2][2]))

    def test_stdGrowsSublinearly(self):
        rows = lpp.concentrationExperiment([10, 40, 160], 0.5, 30, 4)
        for n0, n1, ratio, bound in lpp.stdGrowth(rows):
            self.assertLess(ratio, bound)

    def test_gridSizeFor(self):
        self.assertGreater(lpp.gridSizeFor(20.0), 20)
        self.assertEqual(lpp.gridSizeFor(0.0), 1)

    @unittest.skipUnless(FULL, 'set TASEPFAN_FULL=1 for the full tier')
    def test_limitShapeLowerEdge(self):
        result = lpp.limitShapeExperiment(400, 0.5, 50, 7)
        self.assertGreaterEqual(result.mean, 1.9)
        self.assertTrue(result.upperBoundHolds)
        quarter = lpp.limitShapeExperiment(400, 0.25, 50, 7)
        self.assertTrue(quarter.upperBoundHolds)

    @unittest.skipUnless(FULL, 'set TASEPFAN_FULL=1 for the full tier')
    def test_limitShapeLargeN(self):
        rows = lpp.concentrationExperiment([200, 500, 2000], 0.5, 50, 8)
        means = {n: mean for n, _, _, mean in rows}
        self.assertGreaterEqual(means[2000], means[200])
        self.assertLessEqual(means[2000], 2.0 + 0.05)
        growth = lpp.stdGrowth([r for r in rows if r[0] != 200])
        self.assertEqual(growth[0][:2], (500, 2000))
        self.assertLess(growth[0][2], 4.0)


# -----------------------------------------------------------------------------


if __name__ == '__main__':
    unittest.main()

# -----------------------------------------------------------------------------
# eof
