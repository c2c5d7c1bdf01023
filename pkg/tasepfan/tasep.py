# -----------------------------------------------------------------------------
# Name:         tasep.py
# Purpose:      Exclusion dynamics with a second-class particle
#
# Author:       the tasepfan developers
# Copyright:    (c) 2024 by the tasepfan developers
# License:      BSD, see license.txt
# -----------------------------------------------------------------------------
"""
TASEP
=====

Event-driven totally asymmetric exclusion on a finite window [-L, L]
with closed boundaries, started from a two-sided Bernoulli shock with
one second-class particle at the origin.

The dynamics are driven by a Harris system: at an epoch of site `x`
the pair of cells (x, x+1) is examined.

======================  ======================================
cells (x, x+1)          result
======================  ======================================
first, empty            swap
first, second-class     swap; the second-class moves left
second-class, empty     swap; the second-class moves right
anything else           no change
======================  ======================================

Two contamination fronts record how far the closed boundaries can have
influenced the window.  The left front starts at -L-1 and steps right
at the epochs of its own site; the right front starts at L+1 and steps
left at the epochs of the site just left of it.  Cells strictly between
the fronts evolve exactly as they would in the infinite system driven
by the same clocks.
"""
import logging
import math

import numpy as np
from numba import njit

from tasepfan import utilities
from tasepfan.utilities import SimulationError

logger = logging.getLogger(__name__)

# -----------------------------------------------------------------------------
# MODULE VARIABLES
# -----------------------------------------------------------------------------

EMPTY = 0
FIRST = 1
SECOND = 2

# default window half-width as a multiple of the time horizon
windowFactor = 3

# number of events merged per slab in evolve
slabEvents = 1 << 22

INCREASING_SHOCK_LABEL = 'increasing shock: outside the uniform-law regime'

# -----------------------------------------------------------------------------
# EXCEPTION HANDLERS
# -----------------------------------------------------------------------------


class TasepError(SimulationError):
    pass

# -----------------------------------------------------------------------------
# MAIN CLASSES
# -----------------------------------------------------------------------------


class ShockInitialCondition:
    """Densities `lam` to the left of the origin and `rho` to the right."""

    def __init__(self, lam, rho):
        for name, value in (('lambda', lam), ('rho', rho)):
            if not 0.0 <= value <= 1.0:
                raise TasepError(
                    f'The density {name}={value} lies outside [0, 1].')
        self.lam = float(lam)
        self.rho = float(rho)

    def __repr__(self):
        return f'<ShockInitialCondition lambda={self.lam} rho={self.rho}>'

    @property
    def isDecreasing(self):
        return self.lam > self.rho

    @property
    def label(self):
        if self.lam < self.rho:
            return INCREASING_SHOCK_LABEL
        return ''


class OccupancyState:
    """A configuration on the window [-L, L].

    `cells[x + L]` holds EMPTY, FIRST or SECOND.  The state is owned by
    a single replica and is mutated in place by :func:`evolve`."""

    def __init__(self, L, cells, secondClassSite, t=0.0,
                 leftFront=None, rightFront=None):
        self.L = int(L)
        self.cells = cells
        self.secondClassSite = int(secondClassSite)
        self.t = float(t)
        self.leftFront = -self.L - 1 if leftFront is None else int(leftFront)
        self.rightFront = self.L + 1 if rightFront is None else int(rightFront)

    def __repr__(self):
        return (f'<OccupancyState L={self.L} t={self.t} '
                f'X={self.secondClassSite} '
                f'fronts=({self.leftFront}, {self.rightFront})>')

    @property
    def window(self):
        return (-self.L, self.L)

    @property
    def sites(self):
        return np.arange(-self.L, self.L + 1)

    @property
    def validRange(self):
        """The closed interval of sites between the fronts; empty when
        the lower end exceeds the upper one."""
        return (self.leftFront + 1, self.rightFront - 1)

    def cell(self, x):
        if not -self.L <= x <= self.L:
            raise TasepError(
                f'Site {x} lies outside the window [{-self.L}, {self.L}].')
        return int(self.cells[x + self.L])

    def copy(self):
        return OccupancyState(self.L, self.cells.copy(), self.secondClassSite,
                              self.t, self.leftFront, self.rightFront)

    def checkInvariants(self):
        seconds = np.flatnonzero(self.cells == SECOND)
        if len(seconds) != 1:
            raise TasepError(
                f'Expected one second-class particle, found {len(seconds)}.')
        if seconds[0] - self.L != self.secondClassSite:
            raise TasepError(
                f'The second-class particle sits at {seconds[0] - self.L}, '
                f'not at the recorded site {self.secondClassSite}.')
        if self.leftFront > self.rightFront:
            raise TasepError('The contamination fronts have crossed.')


class Trajectory:
    """Rows (time, X, left front, right front), one at the start and one
    after every event that moved the second-class particle or a front."""

    def __init__(self, times, secondClass, leftFronts, rightFronts):
        self.times = times
        self.secondClass = secondClass
        self.leftFronts = leftFronts
        self.rightFronts = rightFronts

    def __len__(self):
        return len(self.times)

    def positionAt(self, t):
        idx = np.searchsorted(self.times, t, side='right') - 1
        if idx < 0:
            raise TasepError(f'Time {t} precedes the trajectory.')
        return int(self.secondClass[idx])

    def moves(self):
        """The (times, sites) of the initial position and of every
        subsequent change of the second-class site."""
        keep = np.ones(len(self.times), dtype=bool)
        keep[1:] = self.secondClass[1:] != self.secondClass[:-1]
        return self.times[keep], self.secondClass[keep]

# -----------------------------------------------------------------------------
# MAIN SCRIPTS
# -----------------------------------------------------------------------------


def initShock(ic, L, seed):
    """Bernoulli(lambda) occupancies on [-L, -1], Bernoulli(rho) on
    [1, L], the second-class particle at 0.

    Each site's occupancy is decided by a counter-based uniform
    addressed by (seed, site), so a wider window reproduces a narrower
    one on the shared sites."""
    if L < 1:
        raise TasepError(f'The window half-width must be >= 1; received {L}.')
    sites = np.arange(-L, L + 1)
    u = utilities.counterUniforms(seed, utilities.STREAM_OCCUPANCY, sites)
    density = np.where(sites < 0, ic.lam, ic.rho)
    cells = np.where(u < density, FIRST, EMPTY).astype(np.int8)
    cells[L] = SECOND
    if ic.label:
        logger.info(f'Shock {ic} is tagged "{ic.label}".')
    return OccupancyState(L, cells, 0)


def evolve(state, clocks, tEnd):
    """Process every epoch in (state.t, tEnd] in time order.

    The state is advanced in place; returns (state, trajectory)."""
    tEnd = float(tEnd)
    if tEnd > clocks.horizon:
        raise TasepError(
            f'The end time {tEnd} exceeds the clock horizon {clocks.horizon}.')
    if tEnd < state.t:
        raise TasepError(
            f'Cannot evolve backwards from {state.t} to {tEnd}.')
    lo, hi = harrisRange(state.L)
    if not (clocks.contains(lo) and clocks.contains(hi - 1)):
        raise TasepError(
            f'The clocks {clocks} do not cover the sites [{lo}, {hi - 1}].')

    chunks = [(np.array([state.t]), np.array([state.secondClassSite]),
               np.array([state.leftFront]), np.array([state.rightFront]))]
    capacity = 4 * int(tEnd - state.t) + 64
    outT = np.empty(capacity, dtype=np.float64)
    outX = np.empty(capacity, dtype=np.int64)
    outL = np.empty(capacity, dtype=np.int64)
    outR = np.empty(capacity, dtype=np.int64)
    second, lf, rf = state.secondClassSite, state.leftFront, state.rightFront
    slab = slabEvents / (hi - lo)
    t0 = state.t
    while t0 < tEnd:
        t1 = min(tEnd, t0 + slab)
        times, sites = clocks.eventStream(lo, hi - 1, t0, t1)
        start = 0
        while start < len(times):
            start, n, second, lf, rf = _exclusionKernel(
                state.cells, state.L, times, sites, start,
                second, lf, rf, outT, outX, outL, outR)
            chunks.append((outT[:n].copy(), outX[:n].copy(),
                           outL[:n].copy(), outR[:n].copy()))
        t0 = t1
    state.secondClassSite, state.leftFront, state.rightFront = second, lf, rf
    state.t = tEnd
    trajectory = Trajectory(*(np.concatenate(c) for c in zip(*chunks)))
    logger.debug(f'Evolved to {state} with {len(trajectory)} records.')
    return state, trajectory


def advanceFronts(state):
    """The current (left_front, right_front) pair; the fronts themselves
    are advanced by :func:`evolve` on the same event stream."""
    return state.leftFront, state.rightFront


def densityProfile(state, binWidth, secondClassAs=0.0, siteRange=None):
    """Empirical density on consecutive bins of `binWidth` sites tiling
    the valid region, or its intersection with `siteRange`, from the
    left end; a trailing partial bin is dropped.  Returns an array of
    (bin center, density) rows."""
    if binWidth < 1:
        raise TasepError(f'The bin width must be >= 1; received {binWidth}.')
    if secondClassAs not in (0, 0.5, 1):
        raise TasepError(
            f'The second-class weight must be 0, 1/2 or 1; '
            f'received {secondClassAs}.')
    a, b = state.validRange
    if siteRange is not None:
        a, b = max(a, siteRange[0]), min(b, siteRange[1])
    nBins = max(0, (b - a + 1) // binWidth)
    cells = state.cells[a + state.L:a + state.L + nBins * binWidth]
    values = np.where(cells == FIRST, 1.0,
                      np.where(cells == SECOND, float(secondClassAs), 0.0))
    density = values.reshape(nBins, binWidth).mean(axis=1)
    centers = a + binWidth * np.arange(nBins) + (binWidth - 1) / 2.0
    return np.column_stack([centers, density])

# -----------------------------------------------------------------------------
# HELPER SCRIPTS
# -----------------------------------------------------------------------------


def defaultWindow(tEnd):
    return max(1, int(math.ceil(windowFactor * tEnd)))


def harrisRange(L):
    """Sites whose clocks drive a window of half-width L: the pairs
    inside the window plus the two front sites outside it."""
    return (-L - 1, L + 1)


def truncatedCopy(state, k):
    """The configuration restricted to [-k, k], as a state on that
    smaller window with fresh fronts."""
    if abs(state.secondClassSite) > k:
        raise TasepError(
            f'The second-class particle at {state.secondClassSite} lies '
            f'outside [{-k}, {k}].')
    if not 1 <= k <= state.L:
        raise TasepError(
            f'The truncation half-width {k} must lie in [1, {state.L}].')
    cells = state.cells[state.L - k:state.L + k + 1].copy()
    return OccupancyState(k, cells, state.secondClassSite, state.t)


def particleCount(state, lo=None, hi=None):
    """Number of first-class particles in [lo, hi]."""
    lo = -state.L if lo is None else max(lo, -state.L)
    hi = state.L if hi is None else min(hi, state.L)
    if hi < lo:
        return 0
    return int(np.count_nonzero(state.cells[lo + state.L:hi + state.L + 1]
                                == FIRST))


def isValidSite(state, x):
    a, b = state.validRange
    return a <= x <= b


def trajectoryRows(trajectory, seed, replica=0):
    """CSV rows (replica, seed, time, X, left_front, right_front)."""
    return [[replica, seed, repr(float(t)), int(x), int(lf), int(rf)]
            for t, x, lf, rf in zip(trajectory.times, trajectory.secondClass,
                                    trajectory.leftFronts,
                                    trajectory.rightFronts)]

# -----------------------------------------------------------------------------
# KERNELS
# -----------------------------------------------------------------------------


@njit(cache=False)
def _exclusionKernel(cells, L, times, sites, start, second, lf, rf,
                     outT, outX, outL, outR):
    # returns at the first event that would overflow the output buffers
    capacity = outT.shape[0]
    n = 0
    for e in range(start, times.shape[0]):
        if n >= capacity:
            return e, n, second, lf, rf
        x = sites[e]
        moved = False
        if lf + 2 <= rf:
            if x == lf:
                lf += 1
                moved = True
            elif x == rf - 1:
                rf -= 1
                moved = True
        if -L <= x < L:
            a = x + L
            ca = cells[a]
            cb = cells[a + 1]
            if ca == 1 and cb == 0:
                cells[a] = 0
                cells[a + 1] = 1
            elif ca == 1 and cb == 2:
                cells[a] = 2
                cells[a + 1] = 1
                second = x
                moved = True
            elif ca == 2 and cb == 0:
                cells[a] = 0
                cells[a + 1] = 2
                second = x + 1
                moved = True
        if moved:
            outT[n] = times[e]
            outX[n] = second
            outL[n] = lf
            outR[n] = rf
            n += 1
    return times.shape[0], n, second, lf, rf

# -----------------------------------------------------------------------------
# eof
