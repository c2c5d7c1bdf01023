# -----------------------------------------------------------------------------
# Name:         server.py
# Purpose:      Height processes, interfaces and the variational formula
#
# Author:       the tasepfan developers
# Copyright:    (c) 2024 by the tasepfan developers
# License:      BSD, see license.txt
# -----------------------------------------------------------------------------
"""
Servers
=======

The particle configuration on [-L, L] is encoded by a height function
`z` on [-L-1, L] whose increments are the occupancies,
`eta(x) = z(x) - z(x-1)`.  A particle jumping from `x` to `x+1` is a
server at `x` moving down one unit.  At an epoch of site `i` the server
`z(i)` moves down if

    0 <= z(i+1) - z(i) <= 1

still holds against both neighbours afterwards.  The two end servers of
the index interval never move, which is the closed boundary of the
particle window.

The interface process of label `k` starts from the wedge

    xi(i) = 0 for i >= 0,    xi(i) = -i for i < 0,

and `xi(i)` grows by one at the epochs of site `i + k` when the growth
keeps `0 <= xi(i) - xi(i+1) <= 1`.  With every interface evolved on the
same clocks as `z` (shifted by its label) and the same frozen ends,

    z_t(i) = max_k { z_0(k) - xi^k_t(i - k) }

holds exactly, for every site and every time.  :func:`couplingReport`
checks this identity.

A :class:`HeightPair` runs two height functions that differ by a unit
step on the same clocks.  The location of the step is the position of
the second-class particle.
"""
import logging
import math

import numpy as np
from numba import njit

from tasepfan import harris
from tasepfan import lpp
from tasepfan import tasep
from tasepfan.utilities import SimulationError

logger = logging.getLogger(__name__)

# -----------------------------------------------------------------------------
# MODULE VARIABLES
# -----------------------------------------------------------------------------

# assert the exclusion rule after every mutation in the event kernels
checkExclusionRule = True

# -----------------------------------------------------------------------------
# EXCEPTION HANDLERS
# -----------------------------------------------------------------------------


class ServerError(SimulationError):
    pass


class CouplingError(ServerError):
    pass

# -----------------------------------------------------------------------------
# MAIN CLASSES
# -----------------------------------------------------------------------------


class HeightProcess:
    """Integer heights `z[i - lo]` on the index interval [lo, hi] at
    time `t`."""

    def __init__(self, lo, values, t=0.0):
        self.lo = int(lo)
        self.z = np.asarray(values, dtype=np.int64)
        self.t = float(t)

    def __repr__(self):
        return f'<HeightProcess [{self.lo}, {self.hi}] t={self.t}>'

    @property
    def hi(self):
        return self.lo + len(self.z) - 1

    @property
    def sites(self):
        return np.arange(self.lo, self.hi + 1)

    def value(self, i):
        if not self.lo <= i <= self.hi:
            raise ServerError(
                f'Index {i} lies outside [{self.lo}, {self.hi}].')
        return int(self.z[i - self.lo])

    def copy(self):
        return HeightProcess(self.lo, self.z.copy(), self.t)

    def satisfiesExclusion(self):
        d = np.diff(self.z)
        return bool(np.all((d >= 0) & (d <= 1)))


class InterfaceProcess:
    """The interface of label `k`: values `xi[i - lo]` on [lo, hi] at
    time `t`."""

    def __init__(self, k, lo, values, t=0.0):
        self.k = int(k)
        self.lo = int(lo)
        self.xi = np.asarray(values, dtype=np.int64)
        self.t = float(t)

    def __repr__(self):
        return (f'<InterfaceProcess k={self.k} '
                f'[{self.lo}, {self.hi}] t={self.t}>')

    @property
    def hi(self):
        return self.lo + len(self.xi) - 1

    def value(self, i):
        if not self.lo <= i <= self.hi:
            raise ServerError(
                f'Index {i} lies outside [{self.lo}, {self.hi}] '
                f'of the interface {self.k}.')
        return int(self.xi[i - self.lo])

    def satisfiesExclusion(self):
        d = -np.diff(self.xi)
        return bool(np.all((d >= 0) & (d <= 1)))


class HeightPair:
    """Two height functions on the same index interval with
    `zp(u) - z(u) = 1 if u >= stepSite else 0`."""

    def __init__(self, z, zp, stepSite):
        self.z = z
        self.zp = zp
        self.stepSite = int(stepSite)

    def __repr__(self):
        return f'<HeightPair step={self.stepSite} t={self.z.t}>'

    def checkInvariant(self):
        step = (self.z.sites >= self.stepSite).astype(np.int64)
        if not np.array_equal(self.zp.z - self.z.z, step):
            raise CouplingError(
                f'The height difference is not a unit step at '
                f'{self.stepSite} (t={self.z.t}).')


class InterfaceCache:
    """Interfaces evolved on the clocks of one replica, memoized by
    (label, time).

    Every label `k` is evolved on the index interval that covers the
    true sites [lo, hi], so the merged event stream of that site range
    is computed once per time and reused, shifted, for every label."""

    def __init__(self, clocks, siteRange):
        self.clocks = clocks
        self.lo, self.hi = (int(s) for s in siteRange)
        self._streams = {}
        self._interfaces = {}

    def __len__(self):
        return len(self._interfaces)

    def stream(self, t):
        key = float(t)
        if key not in self._streams:
            self._streams[key] = self.clocks.eventStream(
                self.lo + 1, self.hi - 1, 0.0, key)
        return self._streams[key]

    def interface(self, k, t):
        key = (int(k), float(t))
        proc = self._interfaces.get(key)
        if proc is None:
            times, sites = self.stream(t)
            proc = evolveInterface(k, self.clocks, t,
                                   indexRange=(self.lo - k, self.hi - k),
                                   stream=(times, sites - k))
            self._interfaces[key] = proc
        return proc


class CouplingReport:
    """Rows (i, t, direct, variational, match) and a global pass flag."""

    header = ['i', 't', 'direct', 'variational', 'match']

    def __init__(self, rows):
        self.rows = rows

    @property
    def mismatches(self):
        return sum(1 for row in self.rows if not row[4])

    @property
    def passed(self):
        return self.mismatches == 0

    def firstMismatch(self):
        """(i, t) of the earliest failing comparison, or None."""
        for i, t, _, _, match in self.rows:
            if not match:
                return (i, t)
        return None

# -----------------------------------------------------------------------------
# MAIN SCRIPTS
# -----------------------------------------------------------------------------


def heightFromConfig(state, anchor=0, secondClassAs=0):
    """The height function of a configuration on [-L, L], defined on
    [-L-1, L] with `z(0) = anchor`.  The second-class particle counts
    as a particle when `secondClassAs` is 1 and as a hole when 0."""
    if secondClassAs not in (0, 1):
        raise ServerError(
            f'The second-class convention must be 0 or 1; '
            f'received {secondClassAs}.')
    eta = (state.cells == tasep.FIRST).astype(np.int64)
    if secondClassAs:
        eta[state.cells == tasep.SECOND] = 1
    c = np.concatenate([[0], np.cumsum(eta)])
    # c[L + 1] is the height at site 0
    z = c - c[state.L + 1] + int(anchor)
    return HeightProcess(-state.L - 1, z, state.t)


def configFromHeight(z, secondClassSite):
    """The inverse of :func:`heightFromConfig`.  The second-class
    particle is placed at `secondClassSite` whichever convention
    produced the heights."""
    L = z.hi
    if z.lo != -L - 1:
        raise ServerError(
            f'Heights on [{z.lo}, {z.hi}] do not encode a window [-L, L].')
    eta = np.diff(z.z)
    if np.any((eta < 0) | (eta > 1)):
        raise ServerError('The heights violate the exclusion rule.')
    cells = eta.astype(np.int8)
    cells[secondClassSite + L] = tasep.SECOND
    return tasep.OccupancyState(L, cells, secondClassSite, z.t)


def evolveHeight(z, clocks, tEnd):
    """A copy of `z` evolved to `tEnd`; the end servers stay put."""
    tEnd = float(tEnd)
    _checkTimes(z.t, tEnd, clocks)
    out = z.copy()
    if tEnd > z.t and out.hi - out.lo >= 2:
        # merged streams are built one slab of time at a time
        slab = tasep.slabEvents / (out.hi - out.lo)
        t0 = z.t
        while t0 < tEnd:
            t1 = min(tEnd, t0 + slab)
            times, sites = clocks.eventStream(out.lo + 1, out.hi - 1, t0, t1)
            bad = _heightKernel(out.z, out.lo, times, sites,
                                checkExclusionRule)
            if bad >= 0:
                raise CouplingError(
                    f'The exclusion rule broke at site {sites[bad]}, '
                    f'time {times[bad]}.')
            t0 = t1
    out.t = tEnd
    logger.debug(f'Evolved {z} to {out}.')
    return out


def evolveInterface(k, clocks, tEnd, indexRange=None, stream=None):
    """The interface of label `k` at time `tEnd`, driven by the clocks
    shifted by `k`.

    `indexRange` defaults to an interval reaching `tEnd + 10 sqrt(tEnd)
    + 10` beyond the origin on both sides.  A precomputed `stream` of
    (times, indexes) already in interface coordinates may be passed."""
    tEnd = float(tEnd)
    if indexRange is None:
        w = interfaceMargin(tEnd)
        indexRange = (-w, w)
    a, b = (int(s) for s in indexRange)
    if b < a:
        raise ServerError(f'The index range [{a}, {b}] is empty.')
    _checkTimes(0.0, tEnd, clocks)
    idx = np.arange(a, b + 1)
    xi = np.where(idx >= 0, 0, -idx).astype(np.int64)
    if tEnd > 0 and b - a >= 2:
        if stream is None:
            view = harris.shifted(clocks, k, (a, b))
            stream = view.eventStream(a + 1, b - 1, 0.0, tEnd)
        times, sites = stream
        bad = _interfaceKernel(xi, a, times, sites, checkExclusionRule)
        if bad >= 0:
            raise CouplingError(
                f'The interface rule broke at index {sites[bad]}, '
                f'time {times[bad]}, label {k}.')
    return InterfaceProcess(k, a, xi, tEnd)


def variationalSup(z0, clocks, i, t, kRange=None, cache=None):
    """max over k in kRange of z0(k) - xi^k_t(i - k).

    Every label is evolved on the index interval covering the sites of
    `z0`, so the maximum reproduces :func:`evolveHeight` exactly.
    `kRange` must contain [i - ceil(t) - D, i + D] (D = 10 sqrt(t) + 10)
    as far as the heights reach."""
    if not z0.lo <= i <= z0.hi:
        raise ServerError(f'Site {i} lies outside [{z0.lo}, {z0.hi}].')
    if z0.t != 0.0:
        raise ServerError(
            f'The initial heights must be taken at time 0, not {z0.t}.')
    if kRange is None:
        kRange = (z0.lo, z0.hi)
    ka, kb = (int(s) for s in kRange)
    need = requiredLabels(z0, i, t)
    if ka > need[0] or kb < need[1]:
        raise ServerError(
            f'The label range [{ka}, {kb}] does not cover '
            f'[{need[0]}, {need[1]}] for site {i} at time {t}.')
    if ka < z0.lo or kb > z0.hi:
        raise ServerError(
            f'The label range [{ka}, {kb}] leaves the heights '
            f'[{z0.lo}, {z0.hi}].')
    if cache is None:
        cache = InterfaceCache(clocks, (z0.lo, z0.hi))
    best = None
    for k in range(ka, kb + 1):
        value = z0.value(k) - cache.interface(k, t).value(i - k)
        if best is None or value > best:
            best = value
    return best


def variationalHeight(z0, clocks, t, queryRange=None, cache=None):
    """The variational formula evaluated at every site of `queryRange`
    (default: the whole index interval)."""
    if cache is None:
        cache = InterfaceCache(clocks, (z0.lo, z0.hi))
    qa, qb = queryRange if queryRange is not None else (z0.lo, z0.hi)
    values = [variationalSup(z0, clocks, i, t, cache=cache)
              for i in range(qa, qb + 1)]
    return np.array(values, dtype=np.int64)


def makeHeightPair(state):
    """The pair (z, z + 1_{u >= X}) for the first-class heights z of
    `state` and its second-class site X."""
    z = heightFromConfig(state, secondClassAs=0)
    zp = z.copy()
    zp.z = z.z + (z.sites >= state.secondClassSite)
    return HeightPair(z, zp, state.secondClassSite)


def trackSecondClass(pair, clocks, tEnd):
    """Evolve both heights of `pair` on the same clocks to `tEnd`,
    checking after every event that they still differ by a unit step.

    The pair is advanced in place.  Returns (times, sites) of the
    initial step location and of each of its moves."""
    tEnd = float(tEnd)
    _checkTimes(pair.z.t, tEnd, clocks)
    pair.checkInvariant()
    z, zp = pair.z, pair.zp
    chunks = [(np.array([z.t]), np.array([pair.stepSite]))]
    if tEnd > z.t and z.hi - z.lo >= 2:
        times, sites = clocks.eventStream(z.lo + 1, z.hi - 1, z.t, tEnd)
        capacity = 2 * int(tEnd - z.t) + 64
        outT = np.empty(capacity, dtype=np.float64)
        outX = np.empty(capacity, dtype=np.int64)
        start = 0
        step = pair.stepSite
        while start < len(times):
            status, start, step, n = _pairKernel(z.z, zp.z, z.lo, times,
                                                 sites, start, step,
                                                 outT, outX)
            chunks.append((outT[:n].copy(), outX[:n].copy()))
            if status == 2:
                pair.stepSite = step
                raise CouplingError(
                    f'The height difference stopped being a unit step at '
                    f'site {sites[start]}, time {times[start]}.')
        pair.stepSite = step
    z.t = zp.t = tEnd
    traj = tuple(np.concatenate(c) for c in zip(*chunks))
    logger.debug(f'Tracked {pair}; {len(traj[0]) - 1} moves.')
    return traj


def couplingReport(z0, clocks, times, queryRange=None, variationalClocks=None):
    """Compare direct height evolution with the variational formula at
    every (site, time) of the query.

    `variationalClocks` defaults to `clocks`; passing a different clock
    source drives the variational side separately.  Returns a
    :class:`CouplingReport`."""
    if variationalClocks is None:
        variationalClocks = clocks
    qa, qb = queryRange if queryRange is not None else (z0.lo, z0.hi)
    cache = InterfaceCache(variationalClocks, (z0.lo, z0.hi))
    rows = []
    for t in times:
        direct = evolveHeight(z0, clocks, t)
        formula = variationalHeight(z0, variationalClocks, t, (qa, qb),
                                    cache=cache)
        for i, value in zip(range(qa, qb + 1), formula):
            d = direct.value(i)
            rows.append((i, float(t), d, int(value), d == int(value)))
    report = CouplingReport(rows)
    logger.info(f'Coupling report: {len(rows)} comparisons, '
                f'{report.mismatches} mismatches.')
    return report


def interfaceShape(t, x):
    """The macroscopic interface t * g(x / t), extended by -x to the
    left of -t and by 0 to the right of t."""
    x = np.asarray(x, dtype=float)
    if t <= 0:
        return np.maximum(-x, 0.0)
    r = np.clip(x / t, -1.0, 1.0)
    return np.where(x < -t, -x, t * lpp.gShape(r))

# -----------------------------------------------------------------------------
# HELPER SCRIPTS
# -----------------------------------------------------------------------------


def sweepMargin(t):
    """D = 10 sqrt(t) + 10."""
    return 10.0 * math.sqrt(max(t, 0.0)) + 10.0


def interfaceMargin(t):
    return int(math.ceil(t + sweepMargin(t)))


def requiredLabels(z0, i, t):
    """The labels the variational maximum must include at (i, t),
    clipped to the index interval of `z0`."""
    d = sweepMargin(t)
    lo = int(math.floor(i - math.ceil(t) - d))
    hi = int(math.ceil(i + d))
    return (max(lo, z0.lo), min(hi, z0.hi))


def _checkTimes(t0, tEnd, clocks):
    if tEnd > clocks.horizon:
        raise ServerError(
            f'The end time {tEnd} exceeds the clock horizon {clocks.horizon}.')
    if tEnd < t0:
        raise ServerError(f'Cannot evolve backwards from {t0} to {tEnd}.')

# -----------------------------------------------------------------------------
# KERNELS
# -----------------------------------------------------------------------------


@njit(cache=False)
def _heightKernel(z, lo, times, sites, check):
    # returns the index of the offending event, or -1
    hi = lo + z.shape[0] - 1
    for e in range(times.shape[0]):
        s = sites[e]
        if lo < s < hi:
            j = s - lo
            if z[j] - 1 >= z[j - 1] and z[j + 1] - (z[j] - 1) <= 1:
                z[j] -= 1
                if check:
                    dl = z[j] - z[j - 1]
                    dr = z[j + 1] - z[j]
                    if dl < 0 or dl > 1 or dr < 0 or dr > 1:
                        return e
    return -1


@njit(cache=False)
def _interfaceKernel(xi, lo, times, sites, check):
    hi = lo + xi.shape[0] - 1
    for e in range(times.shape[0]):
        s = sites[e]
        if lo < s < hi:
            j = s - lo
            if xi[j] + 1 <= xi[j - 1] and xi[j] + 1 - xi[j + 1] <= 1:
                xi[j] += 1
                if check:
                    dl = xi[j - 1] - xi[j]
                    dr = xi[j] - xi[j + 1]
                    if dl < 0 or dl > 1 or dr < 0 or dr > 1:
                        return e
    return -1


@njit(cache=False)
def _pairKernel(z, zp, lo, times, sites, start, step, outT, outX):
    # status 0: stream consumed; 1: output buffer full at `e`;
    # 2: the step invariant broke at event `e`
    hi = lo + z.shape[0] - 1
    capacity = outT.shape[0]
    n = 0
    for e in range(start, times.shape[0]):
        if n >= capacity:
            return 1, e, step, n
        s = sites[e]
        if lo < s < hi:
            j = s - lo
            before = zp[j] - z[j]
            if z[j] - 1 >= z[j - 1] and z[j + 1] - (z[j] - 1) <= 1:
                z[j] -= 1
            if zp[j] - 1 >= zp[j - 1] and zp[j + 1] - (zp[j] - 1) <= 1:
                zp[j] -= 1
            after = zp[j] - z[j]
            if after != before:
                if before == 0 and after == 1 and s == step - 1:
                    step = s
                elif before == 1 and after == 0 and s == step:
                    step = s + 1
                else:
                    return 2, e, step, n
                outT[n] = times[e]
                outX[n] = step
                n += 1
    return 0, times.shape[0], step, n

# -----------------------------------------------------------------------------
# eof
