# -----------------------------------------------------------------------------
# Name:         lpp.py
# Purpose:      Last-passage percolation and the corner growth limit shape
#
# Author:       the tasepfan developers
# Copyright:    (c) 2024 by the tasepfan developers
# License:      BSD, see license.txt
# -----------------------------------------------------------------------------
"""
Last-Passage Percolation
========================

Passage times on the quadrant: with independent unit exponential
weights `tau(i, j)`,

    T(i, j) = max(T(i-1, j), T(i, j-1)) + tau(i, j),

predecessors outside the quadrant counting as 0.  The same numbers,
read through the map `(x, y) -> (x + y - 1, y - 1)`, are the passage
times of the wedge `{(x, y): y >= 1, x >= 1 - y}` whose recursion
takes the maximum over three predecessors.

The interface process is the level set of the passage times,

    xi_t(i) = min{ j >= max(0, -i) : T(i + j, j) > t },

so that `xi_t(i) >= j` exactly when the wedge point (i, j) has been
reached by time t.

Scaled passage times converge to the limit shape
`Gamma(x, y) = (sqrt(y) + sqrt(x + y))**2`, whose unit level curve is
`y = g(x) = (1 - x)**2 / 4`; along the anti-diagonal of the quadrant
this gives `T(n theta, n (1 - theta)) / n -> f(theta) =
(sqrt(theta) + sqrt(1 - theta))**2`.
"""
import itertools
import logging
import math

import numpy as np
from numba import njit

from tasepfan import utilities
from tasepfan.utilities import SimulationError

logger = logging.getLogger(__name__)

# -----------------------------------------------------------------------------
# EXCEPTION HANDLERS
# -----------------------------------------------------------------------------


class PassageError(SimulationError):
    pass


class GridTooSmallError(PassageError):
    pass

# -----------------------------------------------------------------------------
# MAIN CLASSES
# -----------------------------------------------------------------------------


class PassageGrid:
    """Weights and passage times on the cells (i, j), 0 <= i < I,
    0 <= j < J."""

    def __init__(self, weights, seed=None):
        self.weights = np.ascontiguousarray(weights, dtype=np.float64)
        if self.weights.ndim != 2 or 0 in self.weights.shape:
            raise PassageError(
                f'Weights must form a nonempty matrix; '
                f'received shape {self.weights.shape}.')
        self.seed = seed
        self.times = _passageKernel(self.weights)

    def __repr__(self):
        return f'<PassageGrid {self.I}x{self.J} seed={self.seed}>'

    @property
    def I(self):
        return self.weights.shape[0]

    @property
    def J(self):
        return self.weights.shape[1]

    def T(self, i, j):
        if not (0 <= i < self.I and 0 <= j < self.J):
            raise PassageError(
                f'Cell ({i}, {j}) lies outside the {self.I}x{self.J} grid.')
        return float(self.times[i, j])

    def pathTo(self, i, j):
        """An optimal up-right path from (0, 0) to (i, j), found by
        walking back through the larger predecessor (ties to the left)."""
        self.T(i, j)
        path = [(i, j)]
        while (i, j) != (0, 0):
            if j == 0 or (i > 0 and self.times[i - 1, j]
                          >= self.times[i, j - 1]):
                i -= 1
            else:
                j -= 1
            path.append((i, j))
        path.reverse()
        return path

    def pathWeight(self, path):
        return float(sum(self.weights[i, j] for i, j in path))


class WedgePoint:
    """A point (x, y) of the wedge: y >= 1 and x >= 1 - y."""

    def __init__(self, x, y):
        x, y = int(x), int(y)
        if y < 1 or x < 1 - y:
            raise PassageError(f'({x}, {y}) lies outside the wedge.')
        self.x = x
        self.y = y

    def __repr__(self):
        return f'<WedgePoint ({self.x}, {self.y})>'

    def __eq__(self, other):
        return (isinstance(other, WedgePoint)
                and (self.x, self.y) == (other.x, other.y))

    def __hash__(self):
        return hash((self.x, self.y))


class ShapeResult:
    """Summary of a limit-shape run along the direction theta."""

    def __init__(self, n, theta, replicas, seed, samples):
        self.n = n
        self.theta = theta
        self.replicas = replicas
        self.seed = seed
        self.samples = np.asarray(samples, dtype=float)
        self.mean = float(self.samples.mean())
        self.std = float(self.samples.std(ddof=1)) if replicas > 1 else 0.0
        self.stderr = self.std / math.sqrt(replicas)
        self.target = fShape(theta)

    def __repr__(self):
        return (f'<ShapeResult n={self.n} theta={self.theta} '
                f'mean={self.mean:.4f} target={self.target:.4f}>')

    @property
    def upperBoundHolds(self):
        return self.mean <= self.target + 3.0 * self.stderr

    header = ['n', 'theta', 'replicas', 'mean', 'std', 'target',
              'envelope', 'seed']

    def row(self, envelope=''):
        return [self.n, self.theta, self.replicas, repr(self.mean),
                repr(self.std), repr(self.target), envelope, self.seed]


class ConcavityReport:
    """Outcome of :func:`fConcavityCheck`; true when both parts pass."""

    def __init__(self, maxSecondDifference, curvaturePassed, violations,
                 checked, skipped):
        self.maxSecondDifference = maxSecondDifference
        self.curvaturePassed = curvaturePassed
        self.violations = violations
        self.checked = checked
        self.skipped = skipped

    def __bool__(self):
        return self.curvaturePassed and self.violations == 0

    def __repr__(self):
        return (f'<ConcavityReport f2max={self.maxSecondDifference:.4f} '
                f'checked={self.checked} skipped={self.skipped} '
                f'violations={self.violations}>')

# -----------------------------------------------------------------------------
# MAIN SCRIPTS
# -----------------------------------------------------------------------------


def sampleGrid(I, J, seed):
    """Passage times over unit exponential weights addressed by
    (seed, i, j)."""
    if I < 1 or J < 1:
        raise PassageError(f'Grid dimensions must be >= 1; got {I}x{J}.')
    ii = np.arange(I)[:, None]
    jj = np.arange(J)[None, :]
    u = utilities.counterUniforms(seed, utilities.STREAM_WEIGHTS, ii, jj)
    grid = PassageGrid(-np.log(u), seed)
    logger.debug(f'Sampled {grid}.')
    return grid


def wedgeToUpright(p):
    return (p.x + p.y - 1, p.y - 1)


def uprightToWedge(i, j):
    if i < 0 or j < 0:
        raise PassageError(f'({i}, {j}) lies outside the quadrant.')
    return WedgePoint(i - j, j + 1)


def wedgePassageTimes(grid):
    """Passage times of every wedge point whose image lies in the grid,
    computed directly by the three-predecessor wedge recursion with the
    weights carried over through the isomorphism.

    Returns a dict {(x, y): time}."""
    theta = {}
    for y in range(1, grid.J + 1):
        for x in range(1 - y, grid.I - y + 1):
            i, j = x + y - 1, y - 1
            best = max(theta.get((x - 1, y), 0.0),
                       theta.get((x + 1, y - 1), 0.0),
                       theta.get((x, y - 1), 0.0))
            theta[(x, y)] = best + grid.weights[i, j]
    return theta


def bruteForcePassageTimes(weights):
    """Passage times as explicit maxima over every up-right path."""
    w = np.asarray(weights, dtype=float)
    I, J = w.shape
    out = np.empty_like(w)
    for i in range(I):
        for j in range(J):
            best = -math.inf
            for ups in itertools.combinations(range(i + j), j):
                a = b = 0
                total = w[0, 0]
                for step in range(i + j):
                    if step in ups:
                        b += 1
                    else:
                        a += 1
                    total += w[a, b]
                best = max(best, total)
            out[i, j] = best
    return out


def interfaceFromGrid(grid, t, i):
    """The interface level xi_t(i) read off the passage times."""
    j0 = max(0, -i)
    js = np.arange(j0, min(grid.I - i, grid.J))
    if len(js) == 0:
        raise GridTooSmallError(
            f'The {grid.I}x{grid.J} grid holds no wedge point above {i}.')
    diagonal = grid.times[i + js, js]
    k = np.searchsorted(diagonal, t, side='right')
    if k == len(js):
        raise GridTooSmallError(
            f'Every passage time above {i} in the {grid.I}x{grid.J} grid '
            f'is at most {t}.')
    return int(js[k])


def interfaceProfile(grid, t, iRange):
    a, b = iRange
    return np.array([interfaceFromGrid(grid, t, i) for i in range(a, b + 1)],
                    dtype=np.int64)


def dualityCheck(grid, times=None):
    """Count the wedge cells (i, j) and times t for which
    `xi_t(i) >= j` and `T_wedge(i, j) <= t` disagree.  `times` defaults
    to every passage time of the grid."""
    if times is None:
        times = np.unique(grid.times)
    mismatches = 0
    for t in times:
        for j in range(1, grid.J + 1):
            for i in range(1 - j, grid.I - j + 1):
                reached = grid.times[i + j - 1, j - 1] <= t
                try:
                    level = interfaceFromGrid(grid, t, i)
                except GridTooSmallError:
                    level = math.inf
                if (level >= j) != reached:
                    mismatches += 1
    return mismatches


def gridSizeFor(t):
    """Grid dimension large enough for interface queries near the
    origin at time t."""
    margin = 4.0 * math.sqrt(t) * math.log(max(t, math.e))
    return int(math.ceil(t + margin)) + 1


def gamma(x, y):
    if y < 0 or x + y < 0:
        raise PassageError(f'Gamma is undefined at ({x}, {y}).')
    return (math.sqrt(y) + math.sqrt(x + y)) ** 2


def gShape(x):
    """g(x) = (1 - x)**2 / 4."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        logger.debug('gShape evaluated outside [-1, 1].')
    value = (1.0 - x) ** 2 / 4.0
    return float(value) if value.ndim == 0 else value


def flux(u):
    """G(u) = u (1 - u)."""
    return u * (1.0 - u)


def fShape(theta):
    return (math.sqrt(theta) + math.sqrt(1.0 - theta)) ** 2


def fSecondDerivative(theta):
    return -1.0 / (2.0 * (theta * (1.0 - theta)) ** 1.5)


def legendreCheck(uGrid, rGrid):
    """max over u of |G(u) - min over r of (u r + g(r))|."""
    u = np.asarray(uGrid, dtype=float)[:, None]
    r = np.asarray(rGrid, dtype=float)[None, :]
    inf = np.min(u * r + gShape(r), axis=1)
    return float(np.max(np.abs(flux(u[:, 0]) - inf)))


def limitShapeExperiment(n, theta, replicas, seed, mapper=map):
    """Scaled passage times T([n theta], n - [n theta]) / n over
    `replicas` independent grids.  `mapper` distributes the replicas."""
    if not 0.0 < theta < 1.0:
        raise PassageError(f'theta must lie in (0, 1); received {theta}.')
    if n * min(theta, 1.0 - theta) < 1:
        raise PassageError(f'n = {n} is too small for theta = {theta}.')
    seeds = [utilities.deriveSeed(seed, utilities.STREAM_REPLICA, r)
             for r in range(replicas)]
    samples = list(mapper(_shapeReplica, [(n, theta, s) for s in seeds]))
    result = ShapeResult(n, theta, replicas, seed, samples)
    if not result.upperBoundHolds:
        logger.warning(f'{result} exceeds the one-sided bound.')
    logger.info(f'Limit shape: {result}.')
    return result


def concentrationExperiment(nList, theta, replicas, seed, mapper=map):
    """Rows (n, std, envelope, mean) with the deviation envelope
    3 sqrt(n) log(n**2)."""
    rows = []
    for n in nList:
        if n < 2:
            raise PassageError(
                f'The envelope degenerates at n = {n}; start at n = 2.')
        result = limitShapeExperiment(n, theta, replicas, seed, mapper)
        # the experiment is scaled by 1/n; the envelope is for raw times
        std = result.std * n
        envelope = 3.0 * math.sqrt(n) * math.log(n ** 2)
        rows.append((n, std, envelope, result.mean))
    return rows


def stdGrowth(rows):
    """From :func:`concentrationExperiment` rows sorted by n, rows
    (nSmall, nLarge, std ratio, nLarge / nSmall); growth is sublinear
    when the ratio stays below the last column.  The ratio is nan when
    the smaller standard deviation vanishes."""
    growth = []
    for (n0, s0, _, _), (n1, s1, _, _) in zip(rows, rows[1:]):
        if n1 <= n0:
            continue
        ratio = s1 / s0 if s0 > 0 else math.nan
        growth.append((n0, n1, ratio, n1 / n0))
    return growth


def fConcavityCheck(theta, delta, samples, seed=0, h=1e-4):
    """Check f'' <= -4 on (0, 1/2] by second differences and, for
    random convex combinations of points at distance at least delta
    from theta with barycenter theta,

        sum alpha_i f(x_i) <= f(theta) - 2 delta**2.
    """
    if not (0.0 < theta <= 0.5 and 0.0 < delta < theta):
        raise PassageError(
            f'Need 0 < delta < theta <= 1/2; received theta={theta}, '
            f'delta={delta}.')
    f = np.vectorize(fShape)
    xs = np.linspace(0.005, 0.5, 100)
    xs = xs[xs - h > 0]
    second = (f(xs + h) - 2.0 * f(xs) + f(xs - h)) / h ** 2
    maxSecond = float(second.max())
    curvaturePassed = maxSecond <= -4.0 + 1e-5

    rng = np.random.default_rng(seed)
    target = fShape(theta) - 2.0 * delta ** 2
    violations = checked = skipped = 0
    for _ in range(samples):
        nLeft, nRight = rng.integers(0, 4, size=2)
        if nLeft == 0 or nRight == 0:
            skipped += 1
            continue
        left = rng.uniform(0.0, theta - delta, size=nLeft)
        right = rng.uniform(theta + delta, 1.0, size=nRight)
        wLeft = rng.dirichlet(np.ones(nLeft))
        wRight = rng.dirichlet(np.ones(nRight))
        mL, mR = wLeft @ left, wRight @ right
        p = (mR - theta) / (mR - mL)
        value = p * (wLeft @ f(left)) + (1.0 - p) * (wRight @ f(right))
        checked += 1
        if value > target + 1e-12:
            violations += 1
    report = ConcavityReport(maxSecond, curvaturePassed, violations,
                             checked, skipped)
    logger.info(f'Concavity check: {report}.')
    return report

# -----------------------------------------------------------------------------
# HELPER SCRIPTS
# -----------------------------------------------------------------------------


def _shapeReplica(args):
    n, theta, seed = args
    i = int(math.floor(n * theta))
    grid = sampleGrid(i + 1, n - i + 1, seed)
    return grid.times[i, n - i] / n


@njit(cache=False)
def _passageKernel(w):
    I, J = w.shape
    T = np.empty_like(w)
    for i in range(I):
        for j in range(J):
            a = T[i - 1, j] if i > 0 else 0.0
            b = T[i, j - 1] if j > 0 else 0.0
            T[i, j] = (a if a >= b else b) + w[i, j]
    return T

# -----------------------------------------------------------------------------
# eof
