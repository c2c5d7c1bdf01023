# -----------------------------------------------------------------------------
# Name:         harris.py
# Purpose:      Seedable Harris systems of rate-1 Poisson clocks
#
# Author:       the tasepfan developers
# Copyright:    (c) 2024 by the tasepfan developers
# License:      BSD, see license.txt
# -----------------------------------------------------------------------------
"""
Harris System
=============

A Harris system is a family of mutually independent rate-1 Poisson
processes indexed by the sites of the lattice.  Every process in the
package (particles, servers, interfaces, the contamination fronts) is
driven by one, which is what turns the coupling statements between
them into literal equalities.

The epochs of site `x` are the partial sums of unit exponential draws
from a Philox generator keyed by a hash of (seed, x), truncated at the
horizon.  A site's clock therefore does not depend on which other
sites have been materialized, and enlarging the site range never
changes the epochs already drawn.

Sites are materialized lazily on first access and cached.

>>> h = build(seed=1, siteRange=(-10, 10), horizon=5.0)
>>> h.epochs(3)            # doctest: +SKIP
>>> shifted(h, 3).epochs(0) is h.epochs(3)
True
"""
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


class HarrisError(SimulationError):
    pass


class OutOfRangeError(HarrisError):
    pass

# -----------------------------------------------------------------------------
# MAIN CLASSES
# -----------------------------------------------------------------------------


class HarrisSystem:
    """Per-site unit-rate Poisson epochs on the sites
    `siteRange[0] .. siteRange[1]` over the time interval (0, horizon].

    The object is immutable from the outside; the only internal state
    that changes is the cache of materialized sites.
    """

    def __init__(self, seed, siteRange, horizon):
        lo, hi = (int(s) for s in siteRange)
        if not horizon > 0:
            raise HarrisError(
                f'The horizon must be positive; received {horizon}.')
        if hi < lo:
            raise HarrisError(
                f'The site range [{lo}, {hi}] is empty.')
        self.seed = int(seed)
        self.lo = lo
        self.hi = hi
        self.horizon = float(horizon)
        self._epochs = {}
        self._packed = {}

    def __repr__(self):
        return (f'<HarrisSystem seed={self.seed} '
                f'sites=[{self.lo}, {self.hi}] horizon={self.horizon}>')

    @property
    def siteRange(self):
        return (self.lo, self.hi)

    def contains(self, site):
        return self.lo <= site <= self.hi

    def epochs(self, site):
        """Sorted epoch times of the clock at `site`."""
        site = int(site)
        if not self.contains(site):
            raise OutOfRangeError(
                f'Site {site} lies outside the materialized range '
                f'[{self.lo}, {self.hi}].')
        times = self._epochs.get(site)
        if times is None:
            times = drawEpochs(self.seed, site, self.horizon)
            times.setflags(write=False)
            self._epochs[site] = times
        return times

    def extended(self, siteRange):
        """A Harris system with the same seed and horizon on a larger
        site range.  Clocks on shared sites are identical."""
        lo, hi = siteRange
        bigger = HarrisSystem(self.seed,
                              (min(lo, self.lo), max(hi, self.hi)),
                              self.horizon)
        bigger._epochs.update(self._epochs)
        return bigger

    def shifted(self, k, siteRange=None):
        return ShiftedClockView(self, k, siteRange)

    def eventCounts(self, lo=None, hi=None, tEnd=None):
        """Number of epochs in (0, tEnd] for each site of [lo, hi]."""
        lo = self.lo if lo is None else lo
        hi = self.hi if hi is None else hi
        tEnd = self.horizon if tEnd is None else tEnd
        return np.array([np.searchsorted(self.epochs(x), tEnd, side='right')
                         for x in range(lo, hi + 1)], dtype=np.int64)

    def eventStream(self, lo, hi, tStart, tEnd):
        """All epochs in (tStart, tEnd] at the sites lo..hi, merged
        into a single time-ordered stream.

        Returns the arrays (times, sites)."""
        return mergeEpochs(self, lo, hi, tStart, tEnd)


class ShiftedClockView:
    """The clocks of a Harris system with the site index translated:
    site `i` of the view is site `i + shift` of the base system.

    Views of views collapse onto the base, so that
    `shifted(shifted(h, a), b)` and `shifted(h, a + b)` read the very
    same arrays."""

    def __init__(self, base, shift, siteRange=None):
        if isinstance(base, ShiftedClockView):
            shift = base.shift + shift
            base = base.base
        self.base = base
        self.shift = int(shift)
        if siteRange is None:
            siteRange = (base.lo - self.shift, base.hi - self.shift)
        lo, hi = (int(s) for s in siteRange)
        if not (base.contains(lo + self.shift)
                and base.contains(hi + self.shift)):
            raise OutOfRangeError(
                f'Shift {self.shift} maps the sites [{lo}, {hi}] outside '
                f'the materialized range [{base.lo}, {base.hi}].')
        self.lo = lo
        self.hi = hi

    def __repr__(self):
        return f'<ShiftedClockView shift={self.shift} of {self.base}>'

    @property
    def seed(self):
        return self.base.seed

    @property
    def horizon(self):
        return self.base.horizon

    @property
    def siteRange(self):
        return (self.lo, self.hi)

    def contains(self, site):
        return self.lo <= site <= self.hi

    def epochs(self, site):
        if not self.contains(site):
            raise OutOfRangeError(
                f'Site {site} lies outside the view range '
                f'[{self.lo}, {self.hi}].')
        return self.base.epochs(site + self.shift)

    def shifted(self, k, siteRange=None):
        return ShiftedClockView(self, k, siteRange)

    def eventStream(self, lo, hi, tStart, tEnd):
        times, sites = self.base.eventStream(lo + self.shift, hi + self.shift,
                                             tStart, tEnd)
        return times, sites - self.shift

# -----------------------------------------------------------------------------
# MAIN SCRIPTS
# -----------------------------------------------------------------------------


def build(seed, siteRange, horizon):
    """Construct a Harris system; clocks are drawn on first access."""
    h = HarrisSystem(seed, siteRange, horizon)
    logger.debug(f'Built {h}.')
    return h


def shifted(h, k, siteRange=None):
    """The view of `h` whose site `i` is site `i + k` of `h`."""
    return ShiftedClockView(h, k, siteRange)

# -----------------------------------------------------------------------------
# HELPER SCRIPTS
# -----------------------------------------------------------------------------


def drawEpochs(seed, site, horizon):
    """Epochs of one site: cumulative sums of unit exponentials from a
    Philox stream keyed by (seed, site), truncated at the horizon.

    Draw counts grow by doubling and the stream is always restarted
    from its key, so the result is the same prefix regardless of how
    many draws were needed."""
    key = utilities.counterKey(seed, utilities.STREAM_HARRIS, site)
    count = int(horizon + 6.0 * math.sqrt(horizon) + 16)
    while True:
        rng = np.random.Generator(np.random.Philox(key=key))
        times = np.cumsum(rng.standard_exponential(count))
        if times[-1] > horizon:
            break
        count *= 2
    return times[:np.searchsorted(times, horizon, side='right')]


def packEpochs(clocks, lo, hi):
    """The epochs of sites lo..hi in one flat array, site after site,
    with `offsets[s]:offsets[s+1]` delimiting site `lo + s`."""
    arrays = [clocks.epochs(site) for site in range(lo, hi + 1)]
    offsets = np.zeros(len(arrays) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(a) for a in arrays])
    flat = np.concatenate(arrays) if arrays else np.empty(0)
    return flat, offsets


def mergeEpochs(clocks, lo, hi, tStart, tEnd):
    """Merge the per-site epochs in (tStart, tEnd] into one stream,
    ordered by time (ties, which have probability zero, by site)."""
    if tEnd > clocks.horizon:
        raise HarrisError(
            f'The end time {tEnd} exceeds the horizon {clocks.horizon}.')
    packed = clocks._packed.get((lo, hi))
    if packed is None:
        packed = packEpochs(clocks, lo, hi)
        clocks._packed[(lo, hi)] = packed
    flat, offsets = packed
    times, sites = _gatherSlab(flat, offsets, lo, float(tStart), float(tEnd))
    order = np.argsort(times, kind='stable')
    return times[order], sites[order]

# -----------------------------------------------------------------------------
# KERNELS
# -----------------------------------------------------------------------------


@njit(cache=False)
def _firstAfter(flat, a, b, t):
    # first index in flat[a:b] holding a value > t
    while a < b:
        mid = (a + b) // 2
        if flat[mid] <= t:
            a = mid + 1
        else:
            b = mid
    return a


@njit(cache=False)
def _gatherSlab(flat, offsets, lo, tStart, tEnd):
    nSites = offsets.shape[0] - 1
    starts = np.empty(nSites, np.int64)
    stops = np.empty(nSites, np.int64)
    total = 0
    for s in range(nSites):
        starts[s] = _firstAfter(flat, offsets[s], offsets[s + 1], tStart)
        stops[s] = _firstAfter(flat, starts[s], offsets[s + 1], tEnd)
        total += stops[s] - starts[s]
    times = np.empty(total, np.float64)
    sites = np.empty(total, np.int64)
    k = 0
    for s in range(nSites):
        for j in range(starts[s], stops[s]):
            times[k] = flat[j]
            sites[k] = lo + s
            k += 1
    return times, sites

# -----------------------------------------------------------------------------
# eof
