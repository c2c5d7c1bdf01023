# -----------------------------------------------------------------------------
# Name:         test_server.py
# Purpose:      Tests for heights, interfaces and the variational formula
#
# Author:       the tasepfan developers
# Copyright:    (c) 2024 by the tasepfan developers
# License:      BSD, see license.txt
# -----------------------------------------------------------------------------
import os
import unittest

import numpy as np

from tasepfan import experiments
from tasepfan import harris
from tasepfan import server
from tasepfan import tasep
from tasepfan.server import CouplingError, ServerError

FULL = os.environ.get('TASEPFAN_FULL') == '1'

# -----------------------------------------------------------------------------


def shock(lam, rho, L, seed, horizon):
    state = tasep.initShock(tasep.ShockInitialCondition(lam, rho), L, seed)
    clocks = harris.build(seed, tasep.harrisRange(L), horizon)
    return state, clocks


class Test(unittest.TestCase):

    def runTest(self):
        pass

    def assertPairTracks(self, lam, rho, L, seed, t):
        state, clocks = shock(lam, rho, L, seed, t)
        pair = server.makeHeightPair(state.copy())
        pair.checkInvariant()
        times, sites = server.trackSecondClass(pair, clocks, t)
        pair.checkInvariant()
        _, trajectory = tasep.evolve(state, clocks, t)
        moveTimes, moveSites = trajectory.moves()
        self.assertTrue(np.array_equal(times, moveTimes))
        self.assertTrue(np.array_equal(sites, moveSites))
        self.assertEqual(pair.stepSite, state.secondClassSite)

    def test_heightEncoding(self):
        state, _ = shock(0.6, 0.4, 12, 5, 1.0)
        z = server.heightFromConfig(state, anchor=7)
        self.assertEqual((z.lo, z.hi), (-13, 12))
        self.assertEqual(z.value(0), 7)
        self.assertTrue(np.array_equal(np.diff(z.z),
                                       state.cells == tasep.FIRST))
        self.assertTrue(z.satisfiesExclusion())
        back = server.configFromHeight(z, state.secondClassSite)
        self.assertTrue(np.array_equal(back.cells, state.cells))
        with self.assertRaises(ServerError):
            server.heightFromConfig(state, secondClassAs=2)

    def test_heightEncodingAfterEvolution(self):
        for seed in range(100):
            state, clocks = shock(0.7, 0.3, 20, seed, 5.0)
            tasep.evolve(state, clocks, 5.0)
            z = server.heightFromConfig(state, anchor=seed)
            self.assertTrue(z.satisfiesExclusion())
            back = server.configFromHeight(z, state.secondClassSite)
            self.assertTrue(np.array_equal(back.cells, state.cells))

    def test_secondClassConventions(self):
        state, _ = shock(0.5, 0.5, 8, 2, 1.0)
        hole = server.heightFromConfig(state, secondClassAs=0)
        particle = server.heightFromConfig(state, secondClassAs=1)
        # both anchored at the origin, which holds the second-class particle
        expected = -(hole.sites < 0).astype(np.int64)
        self.assertTrue(np.array_equal(particle.z - hole.z, expected))

    def test_evolveHeightMatchesParticles(self):
        state, clocks = shock(0.7, 0.3, 20, 4, 6.0)
        z0 = server.heightFromConfig(state)
        z = server.evolveHeight(z0, clocks, 6.0)
        tasep.evolve(state, clocks, 6.0)
        eta = (state.cells == tasep.FIRST).astype(np.int64)
        expected = z0.z[0] + np.concatenate([[0], np.cumsum(eta)])
        self.assertTrue(np.array_equal(z.z, expected))
        self.assertEqual(z.t, 6.0)
        # the end servers never move
        self.assertEqual(z.z[0], z0.z[0])
        self.assertEqual(z.z[-1], z0.z[-1])
        # heights only go down
        self.assertTrue(np.all(z.z <= z0.z))

    def test_evolveHeightSmallSlabs(self):
        state, clocks = shock(0.8, 0.2, 20, 6, 5.0)
        z0 = server.heightFromConfig(state)
        whole = server.evolveHeight(z0, clocks, 5.0)
        saved = tasep.slabEvents
        try:
            tasep.slabEvents = 60
            sliced = server.evolveHeight(z0, clocks, 5.0)
        finally:
            tasep.slabEvents = saved
        self.assertTrue(np.array_equal(whole.z, sliced.z))

    def test_evolveHeightErrors(self):
        state, clocks = shock(1.0, 0.0, 5, 1, 2.0)
        z0 = server.heightFromConfig(state)
        with self.assertRaises(ServerError):
            server.evolveHeight(z0, clocks, 2.5)
        z = server.evolveHeight(z0, clocks, 1.0)
        with self.assertRaises(ServerError):
            server.evolveHeight(z, clocks, 0.5)

    def test_interfaceGrowth(self):
        clocks = harris.build(3, (-60, 60), 10.0)
        xi = server.evolveInterface(0, clocks, 10.0, indexRange=(-50, 50))
        self.assertTrue(xi.satisfiesExclusion())
        idx = np.arange(-50, 51)
        self.assertTrue(np.all(xi.xi >= np.maximum(-idx, 0)))
        self.assertEqual(xi.value(-50), 50)
        self.assertEqual(xi.value(50), 0)
        self.assertGreater(xi.value(0), 0)
        with self.assertRaises(ServerError):
            xi.value(51)

    def test_interfaceLabelsShiftClocks(self):
        clocks = harris.build(6, (-40, 40), 5.0)
        a = server.evolveInterface(3, clocks, 5.0, indexRange=(-20, 20))
        view = harris.shifted(clocks, 3)
        b = server.evolveInterface(0, view, 5.0, indexRange=(-20, 20))
        self.assertTrue(np.array_equal(a.xi, b.xi))

    def test_interfaceCache(self):
        state, clocks = shock(0.8, 0.2, 10, 9, 3.0)
        cache = server.InterfaceCache(clocks, (-11, 10))
        first = cache.interface(2, 3.0)
        self.assertIs(cache.interface(2, 3.0), first)
        self.assertEqual(len(cache), 1)
        self.assertEqual((first.lo, first.hi), (-13, 8))

    def test_variationalFormula(self):
        for seed in (1, 2):
            state, clocks = shock(0.8, 0.2, 12, seed, 4.0)
            z0 = server.heightFromConfig(state)
            report = server.couplingReport(z0, clocks, [0.5, 2.0, 4.0])
            self.assertTrue(report.passed)
            self.assertEqual(len(report.rows), 3 * 26)
            self.assertIsNone(report.firstMismatch())

    def test_variationalFormulaFromStep(self):
        state, clocks = shock(1.0, 0.0, 10, 7, 6.0)
        z0 = server.heightFromConfig(state)
        direct = server.evolveHeight(z0, clocks, 6.0)
        formula = server.variationalHeight(z0, clocks, 6.0)
        self.assertTrue(np.array_equal(direct.z, formula))

    def test_variationalWrongClocksMismatch(self):
        state, clocks = shock(1.0, 0.0, 12, 1, 4.0)
        z0 = server.heightFromConfig(state)
        other = harris.build(2, tasep.harrisRange(12), 4.0)
        report = server.couplingReport(z0, clocks, [2.0, 4.0],
                                       variationalClocks=other)
        self.assertFalse(report.passed)
        self.assertGreater(report.mismatches, 0)
        i, t = report.firstMismatch()
        self.assertIn(t, (2.0, 4.0))

    def test_variationalLabelRange(self):
        state, clocks = shock(0.8, 0.2, 40, 3, 2.0)
        z0 = server.heightFromConfig(state)
        with self.assertRaises(ServerError):
            server.variationalSup(z0, clocks, 0, 2.0, kRange=(0, 0))
        with self.assertRaises(ServerError):
            server.variationalSup(z0, clocks, 0, 2.0, kRange=(-50, 50))
        with self.assertRaises(ServerError):
            server.variationalSup(z0, clocks, 45, 2.0)
        later = server.evolveHeight(z0, clocks, 1.0)
        with self.assertRaises(ServerError):
            server.variationalSup(later, clocks, 0, 1.0)
        need = server.requiredLabels(z0, 0, 2.0)
        value = server.variationalSup(z0, clocks, 0, 2.0, kRange=need)
        self.assertEqual(value, server.evolveHeight(z0, clocks, 2.0).value(0))

    def test_widerLabelRangeKeepsValue(self):
        for seed in range(20):
            state, clocks = shock(0.8, 0.2, 40, seed, 2.0)
            z0 = server.heightFromConfig(state)
            cache = server.InterfaceCache(clocks, (z0.lo, z0.hi))
            for i in (-5, 0, 5):
                lo, hi = server.requiredLabels(z0, i, 2.0)
                value = server.variationalSup(z0, clocks, i, 2.0,
                                              kRange=(lo, hi), cache=cache)
                for kRange in ((max(z0.lo, lo - 3), hi),
                               (lo, min(z0.hi, hi + 3)),
                               (z0.lo, z0.hi)):
                    self.assertEqual(
                        server.variationalSup(z0, clocks, i, 2.0,
                                              kRange=kRange, cache=cache),
                        value)

    def test_heightPairTracksSecondClass(self):
        for seed in range(20):
            self.assertPairTracks(0.7, 0.3, 15, seed, 6.0)

    def test_heightPairInvariant(self):
        state, _ = shock(0.5, 0.5, 6, 1, 1.0)
        pair = server.makeHeightPair(state)
        pair.zp.z[0] += 1
        with self.assertRaises(CouplingError):
            pair.checkInvariant()

    def test_interfaceShape(self):
        self.assertAlmostEqual(float(server.interfaceShape(8.0, 0.0)), 2.0)
        self.assertAlmostEqual(float(server.interfaceShape(8.0, -16.0)), 16.0)
        self.assertAlmostEqual(float(server.interfaceShape(8.0, 16.0)), 0.0)
        self.assertAlmostEqual(float(server.interfaceShape(0.0, -3.0)), 3.0)

    def test_margins(self):
        self.assertEqual(server.sweepMargin(4.0), 30.0)
        self.assertEqual(server.interfaceMargin(4.0), 34)

    def test_interfaceFollowsLimitShape(self):
        rows = experiments.interfaceScaling(400, 1.0, [-0.5, 0.0, 0.5], 10, 3,
                                            workers=1)
        self.assertEqual([x for x, _, _ in rows], [-0.5, 0.0, 0.5])
        self.assertAlmostEqual(rows[1][2], 0.25)
        for x, mean, target in rows:
            self.assertAlmostEqual(target,
                                   float(server.interfaceShape(1.0, x)))
            self.assertLess(abs(mean - target), 0.05)
        with self.assertRaises(experiments.ExperimentError):
            experiments.interfaceScaling(400, 0.0, [0.0], 1, 3)

    @unittest.skipUnless(FULL, 'set TASEPFAN_FULL=1 for the full tier')
    def test_interfaceFollowsLimitShapeFullTier(self):
        rows = experiments.interfaceScaling(2000, 1.0, [0.0], 50, 4)
        _, mean, target = rows[0]
        self.assertLess(abs(mean - target), 0.05)

    @unittest.skipUnless(FULL, 'set TASEPFAN_FULL=1 for the full tier')
    def test_heightPairFullTier(self):
        for seed in range(100):
            self.assertPairTracks(0.8, 0.2, tasep.defaultWindow(50.0), seed,
                                  50.0)

    @unittest.skipUnless(FULL, 'set TASEPFAN_FULL=1 for the full tier')
    def test_widerLabelRangeFullTier(self):
        for seed in range(100):
            state, clocks = shock(0.8, 0.2, 60, seed, 5.0)
            z0 = server.heightFromConfig(state)
            cache = server.InterfaceCache(clocks, (z0.lo, z0.hi))
            need = server.requiredLabels(z0, 0, 5.0)
            self.assertEqual(
                server.variationalSup(z0, clocks, 0, 5.0, kRange=need,
                                      cache=cache),
                server.variationalSup(z0, clocks, 0, 5.0, cache=cache))

    @unittest.skipUnless(FULL, 'set TASEPFAN_FULL=1 for the full tier')
    def test_interfaceLawAgainstPassageTimes(self):
        D, p = experiments.interfaceLawComparison(20.0, 0, 300, 5)
        self.assertGreater(p, 1e-3)

    @unittest.skipUnless(FULL, 'set TASEPFAN_FULL=1 for the full tier')
    def test_variationalFormulaWideWindow(self):
        state, clocks = shock(0.8, 0.2, 100, 11, 20.0)
        z0 = server.heightFromConfig(state)
        report = server.couplingReport(z0, clocks, [1.0, 5.0, 20.0],
                                       queryRange=(-30, 30))
        self.assertTrue(report.passed)


# -----------------------------------------------------------------------------


if __name__ == '__main__':
    unittest.main()

# -----------------------------------------------------------------------------
# eof
