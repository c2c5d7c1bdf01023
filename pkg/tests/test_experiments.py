# -----------------------------------------------------------------------------
# Name:         test_experiments.py
# Purpose:      Tests for the replica experiments and their output
#
# Author:       the tasepfan developers
# Copyright:    (c) 2024 by the tasepfan developers
# License:      BSD, see license.txt
# -----------------------------------------------------------------------------
import json
import math
import os
import tempfile
import unittest

import numpy as np

from tasepfan import experiments
from tasepfan import harris
from tasepfan import hydro
from tasepfan import server
from tasepfan import tasep
from tasepfan.experiments import ExperimentError

FULL = os.environ.get('TASEPFAN_FULL') == '1'

# -----------------------------------------------------------------------------


class Test(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.stats = experiments.runSll(1.0, 0.0, 16, 3, 3, 5, nMin=2,
                                       workers=1)

    def runTest(self):
        pass

    def test_dyadicGrid(self):
        grid = experiments.DyadicGrid(16, 2, 4)
        self.assertEqual(len(grid.times), 3 * 17 - 2)
        self.assertEqual(grid.horizon, 32.0)
        self.assertEqual(grid.time(3, 8), 12.0)
        self.assertEqual(grid.column(2, 16), grid.column(3, 0))
        self.assertEqual(grid.times[grid.column(4, 16)], 32.0)
        with self.assertRaises(ExperimentError):
            experiments.DyadicGrid(12, 2, 4)
        with self.assertRaises(ExperimentError):
            experiments.DyadicGrid(16, 4, 2)

    def test_replicaSeeds(self):
        a = [experiments.replicaSeed(7, r) for r in range(5)]
        self.assertEqual(a, [experiments.replicaSeed(7, r) for r in range(5)])
        self.assertEqual(len(set(a)), 5)
        self.assertNotEqual(a[0], experiments.replicaSeed(8, 0))

    def test_runReplicasKeepsOrder(self):
        self.assertEqual(experiments.runReplicas(abs, [-3, 2, -1], workers=1),
                         [3, 2, 1])
        mapper = experiments.replicaMapper(1)
        self.assertEqual(mapper(abs, [-4]), [4])

    def test_runSll(self):
        stats = self.stats
        self.assertEqual(stats.X.shape, (3, 33))
        self.assertEqual(stats.replicas, 3)
        self.assertTrue(stats.speedBoundHolds())
        self.assertEqual(len(stats.trajectoryRows()), 3 * 2 * 17)
        again = experiments.runSll(1.0, 0.0, 16, 3, 3, 5, nMin=2, workers=1)
        self.assertTrue(np.array_equal(stats.X, again.X))
        self.assertEqual(len(stats.ratioAt(8.0)), 3)
        with self.assertRaises(ExperimentError):
            stats.ratioAt(8.3)
        with self.assertRaises(ExperimentError):
            experiments.runSll(1.0, 0.0, 8, 3, 3, 5, nMin=2, workers=1)

    def test_sllMatchesDirectSimulation(self):
        seed = self.stats.seeds[1]
        L = tasep.defaultWindow(16.0)
        state = tasep.initShock(tasep.ShockInitialCondition(1.0, 0.0), L, seed)
        clocks = harris.build(seed, tasep.harrisRange(L), 16.0)
        _, trajectory = tasep.evolve(state, clocks, 16.0)
        self.assertEqual(trajectory.positionAt(16.0), self.stats.X[1, -1])
        self.assertEqual(trajectory.positionAt(6.0),
                         self.stats.X[1, self.stats.grid.column(2, 8)])

    def test_dyadicOscillation(self):
        rows = experiments.dyadicOscillation(self.stats, beta=0.9)
        self.assertEqual([r[0] for r in rows], [2, 3])
        for n, budget, fraction, q50, q90, mx, mBudget in rows:
            self.assertAlmostEqual(budget, 2.0 ** (-n * 0.1))
            self.assertTrue(0.0 <= fraction <= 1.0)
            self.assertLessEqual(q50, q90)
            self.assertLessEqual(q90, mx)
            self.assertAlmostEqual(mBudget, 16 * budget)
        with self.assertRaises(ExperimentError):
            experiments.dyadicOscillation(self.stats, beta=1.0)

    def test_poissonStepBudget(self):
        fraction, oracle = experiments.poissonStepBudget(self.stats, nFrom=2)
        self.assertTrue(0.0 <= fraction <= 1.0)
        self.assertTrue(0.0 < oracle < 1.0)
        with self.assertRaises(ExperimentError):
            experiments.poissonStepBudget(self.stats, nFrom=8)

    def test_cauchyInScale(self):
        rows = experiments.cauchyInScale(self.stats, scales=(4, 8))
        self.assertEqual([T for T, _ in rows], [4, 8])
        for _, median in rows:
            self.assertGreaterEqual(median, 0.0)

    def test_uniformLawTest(self):
        uniform = np.linspace(-1.0, 1.0, 1001)
        result = experiments.uniformLawTest(uniform, 1.0, 0.0, 0.01)
        self.assertTrue(result)
        self.assertEqual(result.row('sll')[:2], ['sll', 'ks_distance'])
        skewed = np.full(100, 0.9)
        self.assertFalse(experiments.uniformLawTest(skewed, 1.0, 0.0, 0.1))
        narrow = np.linspace(-0.6, 0.6, 501)
        self.assertTrue(experiments.uniformLawTest(narrow, 0.8, 0.2, 0.01))
        with self.assertRaises(ExperimentError):
            experiments.uniformLawTest(uniform, 0.3, 0.3, 0.1)

    def test_controlMedian(self):
        stats = experiments.runSll(0.3, 0.3, 16, 3, 5, 9, nMin=2, workers=1)
        result = experiments.controlMedian(stats, tolerance=3.0)
        self.assertTrue(result)
        self.assertAlmostEqual(result.threshold, 0.4)
        self.assertEqual(result.value,
                         float(np.median(stats.terminalRatios())))
        self.assertEqual(result.row('sll')[1], 'control_median')
        shock = experiments.ReplicaStats(0.2, 0.7, stats.grid, stats.seeds,
                                         stats.X)
        self.assertAlmostEqual(
            experiments.controlMedian(shock).threshold, 0.1)
        with self.assertRaises(ExperimentError):
            experiments.controlMedian(self.stats)

    def test_pairSpeedLawMatchesParticles(self):
        result = experiments.pairSpeedLaw(1.0, 0.0, 16.0, 3, 5, 1.0,
                                          workers=1)
        expected = experiments.uniformLawTest(self.stats.terminalRatios(),
                                              1.0, 0.0, 1.0)
        self.assertEqual(result.value, expected.value)
        self.assertTrue(result)

    def test_heightDeviationAtTimeZero(self):
        state = tasep.initShock(tasep.ShockInitialCondition(1.0, 0.0), 20, 1)
        z = server.heightFromConfig(state, secondClassAs=1)
        sol = hydro.HydroSolution(hydro.RiemannData(1.0, 0.0))
        deviation, argmax = experiments.heightDeviation(z, sol, 0.0, (-10, 10))
        self.assertEqual(deviation, 0.0)
        self.assertEqual(argmax, -10)

    def test_hydroWindow(self):
        self.assertGreaterEqual(experiments.hydroWindow(10, 10.0),
                                40 + 10 + 10 * math.sqrt(10.0) + 10)
        self.assertGreaterEqual(experiments.hydroWindow(1, 100.0),
                                tasep.defaultWindow(100.0))

    def test_hydroCompare(self):
        result = experiments.hydroCompare(1.0, 0.0, 8, 1.0, seed=3)
        self.assertEqual(result.t, 8.0)
        self.assertGreaterEqual(result.deviation, 0.0)
        self.assertTrue(-32 <= result.argmax <= 32)
        self.assertAlmostEqual(result.normalized,
                               result.deviation / 8.0 ** 0.95)
        self.assertEqual(len(result.row()), len(result.header))
        with self.assertRaises(ExperimentError):
            experiments.hydroCompare(1.0, 0.0, 8, 3.0)
        results = experiments.hydroReplicas(1.0, 0.0, 8, 2, 3, workers=1)
        self.assertEqual(len(results), 2)
        self.assertEqual(results[0].seed, experiments.replicaSeed(3, 0))

    def test_truncationAgreement(self):
        agreements, frontsCover = experiments.truncationAgreement(
            0.7, 0.3, 6, 4, 2, workers=1)
        self.assertTrue(0 <= frontsCover <= agreements <= 4)

    def test_csvOutput(self):
        text = experiments.csvText(['a', 'b'], [[1, 2], [3, 4]], '# note')
        self.assertEqual(text, '# note\na,b\n1,2\n3,4\n')
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'out', 'x.csv')
            experiments.writeCsv(path, ['a'], [[1]], 'x_manifest.json', 7,
                                 comment='# extra')
            with open(path) as f:
                lines = f.read().splitlines()
            self.assertEqual(lines[0], '# manifest=x_manifest.json seed=7')
            self.assertEqual(lines[1:], ['# extra', 'a', '1'])
            manifest = os.path.join(tmp, 'm.json')
            experiments.writeManifest(manifest, 'sll', {'m': 16}, '1.0.0')
            with open(manifest) as f:
                data = json.load(f)
            self.assertEqual(data['parameters'], {'m': 16})
            self.assertEqual(data['subcommand'], 'sll')
            self.assertEqual(sorted(os.listdir(tmp)), ['m.json', 'out'])

    @unittest.skipUnless(FULL, 'set TASEPFAN_FULL=1 for the full tier')
    def test_uniformLawFullTier(self):
        stats = experiments.runSll(1.0, 0.0, 16, 8, 300, 11)
        self.assertTrue(experiments.uniformLawTest(stats.terminalRatios(),
                                                   1.0, 0.0, 0.1))
        self.assertTrue(stats.speedBoundHolds())
        stats = experiments.runSll(0.8, 0.2, 16, 8, 300, 12)
        self.assertTrue(experiments.uniformLawTest(stats.terminalRatios(),
                                                   0.8, 0.2, 0.1))

    @unittest.skipUnless(FULL, 'set TASEPFAN_FULL=1 for the full tier')
    def test_parallelMatchesSerial(self):
        serial = experiments.runSll(0.8, 0.2, 16, 5, 4, 3, workers=1)
        parallel = experiments.runSll(0.8, 0.2, 16, 5, 4, 3, workers=2)
        self.assertTrue(np.array_equal(serial.X, parallel.X))

    @unittest.skipUnless(FULL, 'set TASEPFAN_FULL=1 for the full tier')
    def test_dyadicScalesFullTier(self):
        stats = experiments.runSll(1.0, 0.0, 16, 10, 500, 13, nMin=6)
        medians = [m for _, m in experiments.cauchyInScale(stats)]
        self.assertEqual(len(medians), 3)
        self.assertTrue(all(b < a for a, b in zip(medians, medians[1:])))
        rows = experiments.dyadicOscillation(stats, beta=0.9)
        fraction = {n: frac for n, _, frac, _, _, _, _ in rows}
        q50 = {n: q for n, _, _, q, _, _, _ in rows}
        # at these scales both budgets are rarely reached
        self.assertLessEqual(fraction[10], fraction[6])
        self.assertLess(q50[10], q50[6])

    @unittest.skipUnless(FULL, 'set TASEPFAN_FULL=1 for the full tier')
    def test_controlMedianFullTier(self):
        stats = experiments.runSll(0.3, 0.3, 16, 8, 500, 14)
        self.assertEqual(stats.grid.horizon, 512.0)
        self.assertTrue(experiments.controlMedian(stats, tolerance=0.1))

    @unittest.skipUnless(FULL, 'set TASEPFAN_FULL=1 for the full tier')
    def test_pairSpeedLawFullTier(self):
        self.assertTrue(experiments.pairSpeedLaw(1.0, 0.0, 512.0, 500, 15,
                                                 0.08))

    @unittest.skipUnless(FULL, 'set TASEPFAN_FULL=1 for the full tier')
    def test_hydroCompareFullTier(self):
        results = experiments.hydroReplicas(1.0, 0.0, 256, 10, 4)
        self.assertTrue(all(r.normalized <= 1.0 for r in results))

    @unittest.skipUnless(FULL, 'set TASEPFAN_FULL=1 for the full tier')
    def test_hydroCompareLargeN(self):
        # each replica holds about 170M epochs; two workers bound the memory
        for lam, rho in ((1.0, 0.0), (0.8, 0.2)):
            results = experiments.hydroReplicas(lam, rho, 2 ** 12, 100, 16,
                                                workers=2)
            passed = sum(1 for r in results if r.normalized <= 1.0)
            self.assertGreaterEqual(passed, 99)

    @unittest.skipUnless(FULL, 'set TASEPFAN_FULL=1 for the full tier')
    def test_truncationFullTier(self):
        agreements, frontsCover = experiments.truncationAgreement(
            0.8, 0.2, 50, 20, 6)
        self.assertEqual(agreements, 20)


# -----------------------------------------------------------------------------


if __name__ == '__main__':
    unittest.main()

# -----------------------------------------------------------------------------
# eof
