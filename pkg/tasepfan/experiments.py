# -----------------------------------------------------------------------------
# Name:         experiments.py
# Purpose:      Replica experiments for the second-class particle
#
# Author:       the tasepfan developers
# Copyright:    (c) 2024 by the tasepfan developers
# License:      BSD, see license.txt
# -----------------------------------------------------------------------------
"""
Experiments
===========

Replica experiments that measure, at finite scale, the statements the
simulation modules are built to illustrate:

* the law of X(T)/T at a terminal time, tested against the uniform
  distribution on [1 - 2 lambda, 1 - 2 rho] (:func:`uniformLawTest`,
  :func:`pairSpeedLaw`), or its median when there is no decreasing
  shock (:func:`controlMedian`);
* the stability of X(t)/t along the dyadic time grid
  `t_i^n = 2**n (1 + i/m)` (:func:`dyadicOscillation`,
  :func:`poissonStepBudget`, :func:`cauchyInScale`);
* the distance between the height process and its hydrodynamic limit
  (:func:`hydroCompare`);
* the insensitivity of the interior of a window to its boundary
  (:func:`truncationAgreement`);
* the agreement in law of the interface computed from passage times and
  from the server dynamics (:func:`interfaceLawComparison`), and its
  scaled growth along the limit shape (:func:`interfaceScaling`).

Almost-sure statements cannot be observed; every output labelled
'shadow' is a finite-scale measurement of one.

Replicas are independent: replica `r` of a run with base seed `s`
draws everything from the seed :func:`replicaSeed` (s, r), and results
are gathered in replica order whatever the number of workers.
"""
import concurrent.futures
import csv
import io
import json
import logging
import math
import os

import numpy as np
import scipy.stats

from tasepfan import harris
from tasepfan import hydro
from tasepfan import lpp
from tasepfan import server
from tasepfan import tasep
from tasepfan import utilities
from tasepfan.utilities import SimulationError

logger = logging.getLogger(__name__)

# -----------------------------------------------------------------------------
# MODULE VARIABLES
# -----------------------------------------------------------------------------

# None means os.cpu_count()
defaultWorkers = None

TRAJECTORY_HEADER = ['experiment', 'replica', 'seed', 'n', 'i', 't', 'X',
                     'ratio']
SUMMARY_HEADER = ['experiment', 'statistic', 'value', 'threshold', 'pass']

# -----------------------------------------------------------------------------
# EXCEPTION HANDLERS
# -----------------------------------------------------------------------------


class ExperimentError(SimulationError):
    pass


class AcceptanceFailure(ExperimentError):
    pass

# -----------------------------------------------------------------------------
# MAIN CLASSES
# -----------------------------------------------------------------------------


class DyadicGrid:
    """Times t_i^n = 2**n (1 + i/m) for n in [nMin, nMax], i in [0, m].

    Since t_m^n = t_0^{n+1}, consecutive scales share an endpoint; the
    shared instant is one column of the sample matrix."""

    def __init__(self, m, nMin, nMax):
        if not utilities.isPowerOfTwo(m):
            raise ExperimentError(f'm must be a power of 2; received {m}.')
        if not 0 <= nMin <= nMax:
            raise ExperimentError(
                f'The scale range [{nMin}, {nMax}] is invalid.')
        self.m = int(m)
        self.nMin = int(nMin)
        self.nMax = int(nMax)
        self.times = np.unique([self.time(n, i) for n, i in self.points()])

    def __repr__(self):
        return f'<DyadicGrid m={self.m} n=[{self.nMin}, {self.nMax}]>'

    def time(self, n, i):
        return 2.0 ** n * (1.0 + i / self.m)

    def points(self):
        return [(n, i) for n in range(self.nMin, self.nMax + 1)
                for i in range(self.m + 1)]

    def column(self, n, i):
        """Index of t_i^n in `times`."""
        return int(np.searchsorted(self.times, self.time(n, i)))

    @property
    def horizon(self):
        return self.time(self.nMax, self.m)


class ReplicaStats:
    """Second-class positions X[r, c] at the grid times `grid.times[c]`
    for every replica r, with the seeds that produced them."""

    def __init__(self, lam, rho, grid, seeds, positions, baseSeed=None):
        self.lam = lam
        self.rho = rho
        self.grid = grid
        self.seeds = list(seeds)
        self.X = np.asarray(positions, dtype=np.int64)
        self.baseSeed = baseSeed
        if self.X.shape != (len(self.seeds), len(grid.times)):
            raise ExperimentError(
                f'Expected {len(self.seeds)}x{len(grid.times)} samples, '
                f'received {self.X.shape}.')

    def __repr__(self):
        return (f'<ReplicaStats lambda={self.lam} rho={self.rho} '
                f'replicas={self.replicas} {self.grid}>')

    @property
    def replicas(self):
        return len(self.seeds)

    @property
    def ratios(self):
        return self.X / self.grid.times[None, :]

    def ratioAt(self, t):
        c = int(np.searchsorted(self.grid.times, t))
        if c >= len(self.grid.times) or self.grid.times[c] != t:
            raise ExperimentError(f'Time {t} is not on {self.grid}.')
        return self.ratios[:, c]

    def terminalRatios(self):
        return self.ratios[:, -1]

    def speedBoundHolds(self):
        t = self.grid.times
        bound = t + 10.0 * np.sqrt(t) * np.log(np.maximum(t, math.e))
        return bool(np.all(np.abs(self.X) <= bound[None, :]))

    def trajectoryRows(self, experiment='sll'):
        rows = []
        for r, seed in enumerate(self.seeds):
            for n, i in self.grid.points():
                c = self.grid.column(n, i)
                t = self.grid.times[c]
                x = int(self.X[r, c])
                rows.append([experiment, r, seed, n, i, repr(float(t)), x,
                             repr(x / t)])
        return rows


class StatisticResult:
    """A statistic with its threshold; true when it passes."""

    def __init__(self, name, value, threshold, passed, detail=None):
        self.name = name
        self.value = value
        self.threshold = threshold
        self.passed = bool(passed)
        self.detail = detail

    def __bool__(self):
        return self.passed

    def __repr__(self):
        return (f'<StatisticResult {self.name}={self.value:.5g} '
                f'threshold={self.threshold} passed={self.passed}>')

    def row(self, experiment):
        return [experiment, self.name, repr(float(self.value)),
                repr(float(self.threshold)), self.passed]


class HydroComparison:

    def __init__(self, lam, rho, n, t, seed, deviation, argmax, eps1):
        self.lam = lam
        self.rho = rho
        self.n = n
        self.t = t
        self.seed = seed
        self.deviation = deviation
        self.argmax = argmax
        self.eps1 = eps1

    def __repr__(self):
        return (f'<HydroComparison n={self.n} t={self.t} '
                f'deviation={self.deviation} '
                f'normalized={self.normalized:.4f}>')

    @property
    def normalized(self):
        return self.deviation / self.t ** (1.0 - self.eps1)

    header = ['lambda', 'rho', 'n', 't', 'seed', 'deviation', 'argmax',
              'normalized']

    def row(self):
        return [self.lam, self.rho, self.n, repr(self.t), self.seed,
                self.deviation, self.argmax, repr(self.normalized)]

# -----------------------------------------------------------------------------
# MAIN SCRIPTS
# -----------------------------------------------------------------------------


def replicaSeed(baseSeed, replica):
    return utilities.deriveSeed(baseSeed, utilities.STREAM_REPLICA, replica)


def runReplicas(func, argsList, workers=None):
    """`[func(a) for a in argsList]`, spread over a process pool when
    more than one worker is allowed.  Results keep the order of
    `argsList`."""
    argsList = list(argsList)
    if workers is None:
        workers = defaultWorkers or os.cpu_count() or 1
    if workers <= 1 or len(argsList) <= 1:
        return [func(a) for a in argsList]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(func, argsList))


def replicaMapper(workers):
    """A `map`-like callable that runs through :func:`runReplicas`."""
    def mapper(func, argsList):
        return runReplicas(func, argsList, workers)
    return mapper


def runSll(lam, rho, m, nMax, replicas, baseSeed, nMin=4, workers=None):
    """Simulate every replica to 2**(nMax+1) on the default window and
    record X at all times of the dyadic grid."""
    if m < 16:
        raise ExperimentError(f'm must be at least 16; received {m}.')
    grid = DyadicGrid(m, nMin, nMax)
    seeds = [replicaSeed(baseSeed, r) for r in range(replicas)]
    args = [(lam, rho, m, nMin, nMax, s) for s in seeds]
    positions = runReplicas(_sllReplica, args, workers)
    result = ReplicaStats(lam, rho, grid, seeds, positions, baseSeed)
    logger.info(f'Completed {result}.')
    return result


def dyadicOscillation(replicaStats, beta=0.9):
    """Per scale n: the budget 2**(-n (1 - beta)), the fraction of
    replica-steps whose ratio change exceeds it, and quantiles of the
    per-replica supremum against m 2**(-n (1 - beta)).

    Returns rows (n, budget, fraction, q50, q90, max, mBudget)."""
    if not 0.0 < beta < 1.0:
        raise ExperimentError(f'beta must lie in (0, 1); received {beta}.')
    grid = replicaStats.grid
    ratios = replicaStats.ratios
    rows = []
    for n in range(grid.nMin, grid.nMax + 1):
        cols = [grid.column(n, i) for i in range(grid.m + 1)]
        steps = np.abs(np.diff(ratios[:, cols], axis=1))
        budget = 2.0 ** (-n * (1.0 - beta))
        sup = steps.max(axis=1)
        rows.append((n, budget, float(np.mean(steps > budget)),
                     float(np.quantile(sup, 0.5)),
                     float(np.quantile(sup, 0.9)),
                     float(sup.max()), grid.m * budget))
    return rows


def poissonStepBudget(replicaStats, eps=0.5, nFrom=8):
    """Fraction of grid steps at scales n >= nFrom whose displacement
    |X(t_{i+1}^n) - X(t_i^n)| exceeds (1 + eps) 2**n / m, together with
    the Poisson tail P(N > (1 + eps) 2**n / m) at the smallest scale."""
    grid = replicaStats.grid
    counts = exceed = 0
    for n in range(max(nFrom, grid.nMin), grid.nMax + 1):
        cols = [grid.column(n, i) for i in range(grid.m + 1)]
        steps = np.abs(np.diff(replicaStats.X[:, cols], axis=1))
        limit = (1.0 + eps) * 2.0 ** n / grid.m
        exceed += int(np.count_nonzero(steps > limit))
        counts += steps.size
    if counts == 0:
        raise ExperimentError(f'No scale of {grid} reaches n = {nFrom}.')
    mean = 2.0 ** max(nFrom, grid.nMin) / grid.m
    cutoff = math.floor((1.0 + eps) * mean)
    oracle = float(scipy.stats.poisson.sf(cutoff, mean))
    return exceed / counts, oracle


def cauchyInScale(replicaStats, scales=(256, 512, 1024)):
    """Rows (T, median over replicas of |X(2T)/2T - X(T)/T|)."""
    rows = []
    for T in scales:
        later = replicaStats.ratioAt(2.0 * T)
        diff = np.abs(later - replicaStats.ratioAt(float(T)))
        rows.append((T, float(np.median(diff))))
    return rows


def uniformLawTest(samples, lam, rho, threshold):
    """Kolmogorov-Smirnov distance of the samples to the uniform law on
    [1 - 2 lambda, 1 - 2 rho]."""
    if lam <= rho:
        raise ExperimentError(
            f'lambda={lam} <= rho={rho}: the uniform law does not apply.')
    lo, width = 1.0 - 2.0 * lam, 2.0 * (lam - rho)
    res = scipy.stats.kstest(np.asarray(samples, dtype=float), 'uniform',
                             args=(lo, width))
    result = StatisticResult('ks_distance', res.statistic, threshold,
                             res.statistic <= threshold, detail=res.pvalue)
    logger.info(f'Uniform law: {result} (p={res.pvalue:.3g}).')
    return result


def controlMedian(replicaStats, tolerance=0.1):
    """Median of X(T)/T when there is no decreasing shock, against the
    characteristic speed 1 - 2 rho for lambda = rho or the shock speed
    1 - lambda - rho for lambda < rho."""
    lam, rho = replicaStats.lam, replicaStats.rho
    if lam > rho:
        raise ExperimentError(
            f'lambda={lam} > rho={rho}: use the uniform law instead.')
    target = 1.0 - lam - rho
    median = float(np.median(replicaStats.terminalRatios()))
    result = StatisticResult('control_median', median, target,
                             abs(median - target) <= tolerance,
                             detail=tolerance)
    logger.info(f'Control median: {result}.')
    return result


def heightDeviation(z, solution, t, yRange):
    """max over y in yRange of |z(y) - U_t(y)| and its argmax; U_t(y)
    is the self-similar t U_1(y / t) for t > 0 and U_0(y) at t = 0."""
    a, b = yRange
    ys = np.arange(a, b + 1)
    target = np.asarray(solution.U(t, ys.astype(float)), dtype=float)
    values = z.z[ys - z.lo]
    dev = np.abs(values - target)
    k = int(np.argmax(dev))
    return float(dev[k]), int(ys[k])


def hydroWindow(n, t):
    """Half-width of a window whose boundary cannot reach [-4n, 4n] by
    time t except through a Poisson tail."""
    return max(tasep.defaultWindow(t),
               4 * n + int(math.ceil(t + server.sweepMargin(t))))


def hydroCompare(lam, rho, n, tMultiplier=1.0, seed=0, eps1=0.05):
    """Evolve the height of a shock configuration to t = tMultiplier n
    and measure max over |y| <= 4n of |z_t(y) - t U_1(y/t)|."""
    if not 0.5 < tMultiplier <= 2.0:
        raise ExperimentError(
            f'The time multiplier must lie in (1/2, 2]; '
            f'received {tMultiplier}.')
    t = tMultiplier * n
    L = hydroWindow(n, t)
    state = tasep.initShock(tasep.ShockInitialCondition(lam, rho), L, seed)
    z0 = server.heightFromConfig(state, secondClassAs=0)
    clocks = harris.build(seed, tasep.harrisRange(L), t)
    z = server.evolveHeight(z0, clocks, t)
    solution = hydro.HydroSolution(hydro.RiemannData(lam, rho))
    deviation, argmax = heightDeviation(z, solution, t, (-4 * n, 4 * n))
    result = HydroComparison(lam, rho, n, t, seed, deviation, argmax, eps1)
    logger.info(f'Hydrodynamic comparison: {result}.')
    return result


def hydroReplicas(lam, rho, n, replicas, baseSeed, tMultiplier=1.0,
                  eps1=0.05, workers=None):
    """:func:`hydroCompare` on independent replicas, in replica order."""
    args = [(lam, rho, n, tMultiplier, replicaSeed(baseSeed, r), eps1)
            for r in range(replicas)]
    return runReplicas(_hydroReplica, args, workers)


def truncationAgreement(lam, rho, n, replicas, baseSeed, workers=None):
    """Run the configuration on [-6n, 6n] and its restriction to
    [-3n, 3n] on the same clocks up to t = n, and count the replicas in
    which the two agree on [-3n/2, 3n/2].

    Returns (agreements, frontsCover): the second counts the replicas in
    which the fronts of the narrow window still enclose [-3n/2, 3n/2]."""
    args = [(lam, rho, n, replicaSeed(baseSeed, r)) for r in range(replicas)]
    results = runReplicas(_truncationReplica, args, workers)
    agreements = sum(1 for agree, _ in results if agree)
    frontsCover = sum(1 for _, cover in results if cover)
    logger.info(f'Truncation: {agreements}/{replicas} agree, '
                f'{frontsCover}/{replicas} inside the fronts.')
    return agreements, frontsCover


def interfaceLawComparison(t, i, replicas, baseSeed, workers=None):
    """Two-sample Kolmogorov-Smirnov statistic between xi_t(i) computed
    from passage times and from the interface dynamics, on independent
    replicas.  Returns (statistic, pvalue)."""
    args = [(t, i, replicaSeed(baseSeed, r)) for r in range(2 * replicas)]
    fromGrid = runReplicas(_gridInterfaceReplica, args[:replicas], workers)
    fromServers = runReplicas(_serverInterfaceReplica, args[replicas:],
                              workers)
    res = scipy.stats.ks_2samp(fromGrid, fromServers)
    logger.info(f'Interface law at t={t}, i={i}: D={res.statistic:.4f}.')
    return float(res.statistic), float(res.pvalue)


def interfaceScaling(n, t, xs, replicas, baseSeed, workers=None):
    """Rows (x, replica mean of xi_{nt}([n x]) / n, t g(x / t)) for the
    interface grown from its initial corner."""
    if n < 1 or not t > 0:
        raise ExperimentError(f'Need n >= 1 and t > 0; received {n}, {t}.')
    args = [(n, t, tuple(xs), replicaSeed(baseSeed, r))
            for r in range(replicas)]
    samples = np.asarray(runReplicas(_scaledInterfaceReplica, args, workers))
    targets = server.interfaceShape(t, np.asarray(xs, dtype=float))
    rows = [(float(x), float(m), float(g))
            for x, m, g in zip(xs, samples.mean(axis=0), targets)]
    logger.info(f'Interface scaling at n={n}, t={t}: {rows}.')
    return rows


def pairSpeedLaw(lam, rho, t, replicas, baseSeed, threshold, workers=None):
    """Kolmogorov-Smirnov test of X(t)/t against the uniform law, with X
    read off the step of a coupled height pair rather than the particle
    configuration."""
    args = [(lam, rho, t, replicaSeed(baseSeed, r)) for r in range(replicas)]
    ratios = np.asarray(runReplicas(_pairReplica, args, workers)) / t
    return uniformLawTest(ratios, lam, rho, threshold)

# -----------------------------------------------------------------------------
# OUTPUT
# -----------------------------------------------------------------------------


def csvText(header, rows, comment=None):
    buffer = io.StringIO()
    if comment:
        buffer.write(comment.rstrip('\n') + '\n')
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def manifestComment(manifestName, seed):
    return f'# manifest={manifestName} seed={seed}'


def writeCsv(path, header, rows, manifestName=None, seed=None, comment=None):
    lines = []
    if manifestName is not None:
        lines.append(manifestComment(manifestName, seed))
    if comment:
        lines.append(comment)
    utilities.writeAtomically(path, csvText(header, rows,
                                            '\n'.join(lines) or None))
    logger.debug(f'Wrote {len(rows)} rows to {path}.')


def writeManifest(path, subcommand, parameters, version):
    manifest = {'subcommand': subcommand,
                'version': version,
                'parameters': parameters}
    utilities.writeAtomically(
        path, json.dumps(manifest, indent=2, sort_keys=True) + '\n')

# -----------------------------------------------------------------------------
# HELPER SCRIPTS
# -----------------------------------------------------------------------------


def _sllReplica(args):
    lam, rho, m, nMin, nMax, seed = args
    grid = DyadicGrid(m, nMin, nMax)
    horizon = grid.horizon
    L = tasep.defaultWindow(horizon)
    state = tasep.initShock(tasep.ShockInitialCondition(lam, rho), L, seed)
    clocks = harris.build(seed, tasep.harrisRange(L), horizon)
    positions = []
    for t in grid.times:
        tasep.evolve(state, clocks, t)
        positions.append(state.secondClassSite)
    lo, hi = state.validRange
    if not lo <= state.secondClassSite <= hi:
        raise ExperimentError(
            f'The second-class particle left the valid region (seed {seed}).')
    return positions


def _hydroReplica(args):
    lam, rho, n, tMultiplier, seed, eps1 = args
    return hydroCompare(lam, rho, n, tMultiplier, seed, eps1)


def _truncationReplica(args):
    lam, rho, n, seed = args
    wide = tasep.initShock(tasep.ShockInitialCondition(lam, rho), 6 * n, seed)
    narrow = tasep.truncatedCopy(wide, 3 * n)
    clocks = harris.build(seed, tasep.harrisRange(6 * n), n)
    tasep.evolve(wide, clocks, n)
    tasep.evolve(narrow, clocks, n)
    k = (3 * n) // 2
    agree = np.array_equal(wide.cells[wide.L - k:wide.L + k + 1],
                           narrow.cells[narrow.L - k:narrow.L + k + 1])
    lo, hi = narrow.validRange
    return bool(agree), lo <= -k and k <= hi


def _gridInterfaceReplica(args):
    t, i, seed = args
    size = lpp.gridSizeFor(t) + abs(i)
    grid = lpp.sampleGrid(size, size, seed)
    return lpp.interfaceFromGrid(grid, t, i)


def _scaledInterfaceReplica(args):
    n, t, xs, seed = args
    T = n * t
    labels = [int(math.floor(n * x)) for x in xs]
    w = server.interfaceMargin(T) + max(abs(i) for i in labels)
    clocks = harris.build(seed, (-w, w), T)
    xi = server.evolveInterface(0, clocks, T, indexRange=(-w, w))
    return [xi.value(i) / n for i in labels]


def _pairReplica(args):
    lam, rho, t, seed = args
    L = tasep.defaultWindow(t)
    state = tasep.initShock(tasep.ShockInitialCondition(lam, rho), L, seed)
    clocks = harris.build(seed, tasep.harrisRange(L), t)
    pair = server.makeHeightPair(state)
    server.trackSecondClass(pair, clocks, t)
    pair.checkInvariant()
    return pair.stepSite


def _serverInterfaceReplica(args):
    t, i, seed = args
    w = server.interfaceMargin(t) + abs(i)
    clocks = harris.build(seed, (-w, w), t)
    return server.evolveInterface(0, clocks, t, indexRange=(-w, w)).value(i)

# -----------------------------------------------------------------------------
# eof
