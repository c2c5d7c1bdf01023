# -----------------------------------------------------------------------------
# Name:         utilities.py
# Purpose:      Scripts shared among various modules
#
# Author:       the tasepfan developers
# Copyright:    (c) 2024 by the tasepfan developers
# License:      BSD, see license.txt
# -----------------------------------------------------------------------------
"""
Utilities
=========

Helpers shared by the simulation modules: the common exception class,
counter-based hashing for reproducible random streams, and file writing.

Counter-based hashing lets every random quantity in the package be
addressed by a tuple of integers (seed, stream, site, ...) rather than
by its position in a sequential stream.  Enlarging a window or a grid
therefore never changes the values already drawn for existing sites.
"""
import logging
import os
import tempfile
import unittest

import numpy as np

# -----------------------------------------------------------------------------
# MODULE VARIABLES
# -----------------------------------------------------------------------------

# stream tags for counter-based draws
STREAM_HARRIS = 1
STREAM_OCCUPANCY = 2
STREAM_WEIGHTS = 3
STREAM_REPLICA = 4

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1

# -----------------------------------------------------------------------------
# EXCEPTION HANDLERS
# -----------------------------------------------------------------------------


class SimulationError(Exception):
    """Base class for errors raised by tasepfan.  Each module
    derives its own error class from this one."""

    def __init__(self, desc):
        super().__init__(desc)
        self.desc = desc

    def __str__(self):
        return str(self.desc)

    def logerror(self):
        logging.getLogger('tasepfan').error(
            f'{type(self).__name__}: {self.desc}')

# -----------------------------------------------------------------------------
# COUNTER-BASED HASHING
# -----------------------------------------------------------------------------


def _mix64(z):
    # splitmix64 finalizer, elementwise on uint64 arrays
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def zigzag(values):
    """Map signed integers onto unsigned ones: 0, -1, 1, -2, ... ->
    0, 1, 2, 3, ..."""
    v = np.asarray(values, dtype=np.int64)
    return np.where(v >= 0, 2 * v, -2 * v - 1).astype(np.uint64)


def counterHash(seed, stream, *indexes):
    """Hash (seed, stream, index_1, ..., index_k) into uint64 words.
    Index arguments may be integers or integer arrays; arrays are
    broadcast against each other."""
    with np.errstate(over='ignore'):
        h = np.atleast_1d(np.asarray(int(seed) & _MASK64, dtype=np.uint64))
        h = _mix64(h + _GOLDEN * np.uint64(stream + 1))
        for idx in indexes:
            h = _mix64((h ^ zigzag(np.atleast_1d(idx))) + _GOLDEN)
    return h


def counterUniforms(seed, stream, *indexes):
    """Uniform(0, 1) doubles addressed by (seed, stream, indexes)."""
    h = counterHash(seed, stream, *indexes)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def counterKey(seed, stream, *indexes):
    """A 128-bit integer key for numpy's Philox generator."""
    lo = counterHash(seed, stream, *indexes, 0)
    hi = counterHash(seed, stream, *indexes, 1)
    return int(lo[0]) | (int(hi[0]) << 64)


def deriveSeed(seed, stream, *indexes):
    """A nonnegative 63-bit child seed."""
    return int(counterHash(seed, stream, *indexes)[0]) >> 1

# -----------------------------------------------------------------------------
# SEQUENCE HELPERS
# -----------------------------------------------------------------------------


def isPowerOfTwo(m):
    return isinstance(m, (int, np.integer)) and m > 0 and (m & (m - 1)) == 0

# -----------------------------------------------------------------------------
# FILE HELPERS
# -----------------------------------------------------------------------------


def writeAtomically(path, text):
    """Write text to path through a temporary file and a rename, so
    that readers never see a partially written file."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix='.tmp_')
    try:
        with os.fdopen(fd, 'w', newline='') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise

# -----------------------------------------------------------------------------


class Test(unittest.TestCase):

    def runTest(self):
        pass

    def test_zigzag(self):
        self.assertEqual(list(zigzag([0, -1, 1, -2, 2])), [0, 1, 2, 3, 4])

    def test_counterUniforms(self):
        u = counterUniforms(7, STREAM_OCCUPANCY, np.arange(-50, 50))
        v = counterUniforms(7, STREAM_OCCUPANCY, np.arange(-10, 10))
        self.assertTrue(np.all((u > 0) & (u < 1)))
        # addressing by site, not by position
        self.assertTrue(np.array_equal(u[40:60], v))

    def test_isPowerOfTwo(self):
        self.assertTrue(isPowerOfTwo(16))
        self.assertFalse(isPowerOfTwo(12))
        self.assertFalse(isPowerOfTwo(0))


# -----------------------------------------------------------------------------


if __name__ == '__main__':
    unittest.main()

# -----------------------------------------------------------------------------
# eof
