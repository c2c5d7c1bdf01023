# -----------------------------------------------------------------------------
# Name:         config.py
# Purpose:      Run configuration for the command-line subcommands
#
# Author:       the tasepfan developers
# Copyright:    (c) 2024 by the tasepfan developers
# License:      BSD, see license.txt
# -----------------------------------------------------------------------------
"""
Configuration
=============

Every subcommand has a dictionary of defaults.  A run configuration
starts from those, is updated from an optional JSON file and then from
command-line flags (flags win).  Keys absent from the defaults are an
error, and values must have the type of their default (an integer is
accepted where a float is expected).  Values must also lie in the
range given in `RANGES`; relations between keys are checked by
:meth:`RunConfig.validate` once every source has been applied.

The keys are documented in :doc:`the user's guide <userguide>`.
"""
import json
import logging

from tasepfan import utilities
from tasepfan.utilities import SimulationError

logger = logging.getLogger(__name__)

# -----------------------------------------------------------------------------
# MODULE VARIABLES
# -----------------------------------------------------------------------------

COMMON = {
    'seed': 7,
    'output_dir': 'output',
    'workers': 0,
}

DEFAULTS = {
    'simulate': {
        'lambda': 1.0,
        'rho': 0.0,
        't': 64.0,
        'L': 0,
        'replicas': 1,
        'plot': False,
    },
    'coupling-verify': {
        'lambda': 0.8,
        'rho': 0.2,
        'window': 200,
        'times': [1.0, 5.0, 20.0],
        'seeds': 10,
        'pair_check': True,
    },
    'lpp-shape': {
        'n': 400,
        'thetas': [0.5, 0.25],
        'replicas': 50,
        'lower_edge': 1.9,
        'n_list': [50, 100, 200],
    },
    'hydro-check': {
        'lambda': 1.0,
        'rho': 0.0,
        'n': 256,
        't_multiplier': 1.0,
        'replicas': 10,
        'eps1': 0.05,
        'pass_rate': 0.99,
        'grid_step': 1e-3,
        'profile_points': 201,
        'plot': False,
    },
    'sll': {
        'lambda': 1.0,
        'rho': 0.0,
        'm': 16,
        'n_min': 4,
        'n_max': 8,
        'replicas': 500,
        'ks_threshold': 0.08,
        'beta': 0.9,
        'plot': False,
    },
}


# key: (test applied to the value, or to each entry of a list, and the
# phrase completing "must ...")
RANGES = {
    'workers': (lambda v: v >= 0, 'be >= 0'),
    'lambda': (lambda v: 0.0 <= v <= 1.0, 'lie in [0, 1]'),
    'rho': (lambda v: 0.0 <= v <= 1.0, 'lie in [0, 1]'),
    't': (lambda v: v >= 0.0, 'be >= 0'),
    'L': (lambda v: v >= 0, 'be >= 0'),
    'replicas': (lambda v: v >= 1, 'be >= 1'),
    'window': (lambda v: v >= 2, 'be >= 2'),
    'times': (lambda v: v >= 0.0, 'be >= 0'),
    'seeds': (lambda v: v >= 1, 'be >= 1'),
    'n': (lambda v: v >= 1, 'be >= 1'),
    'thetas': (lambda v: 0.0 < v < 1.0, 'lie in (0, 1)'),
    'n_list': (lambda v: v >= 2, 'be >= 2'),
    't_multiplier': (lambda v: 0.5 < v <= 2.0, 'lie in (1/2, 2]'),
    'eps1': (lambda v: 0.0 <= v < 1.0, 'lie in [0, 1)'),
    'pass_rate': (lambda v: 0.0 <= v <= 1.0, 'lie in [0, 1]'),
    'grid_step': (lambda v: 0.0 < v <= 0.1, 'lie in (0, 0.1]'),
    'profile_points': (lambda v: v >= 2, 'be >= 2'),
    'm': (lambda v: utilities.isPowerOfTwo(v) and v >= 16,
          'be a power of 2 and >= 16'),
    'n_min': (lambda v: v >= 0, 'be >= 0'),
    'n_max': (lambda v: v >= 0, 'be >= 0'),
    'ks_threshold': (lambda v: v >= 0.0, 'be >= 0'),
    'beta': (lambda v: 0.0 < v < 1.0, 'lie in (0, 1)'),
}

# -----------------------------------------------------------------------------
# EXCEPTION HANDLERS
# -----------------------------------------------------------------------------


class ConfigError(SimulationError):
    pass

# -----------------------------------------------------------------------------
# MAIN CLASSES
# -----------------------------------------------------------------------------


class RunConfig:
    """The parameters of one subcommand run."""

    def __init__(self, subcommand, parameters=None):
        if subcommand not in DEFAULTS:
            raise ConfigError(f'Unknown subcommand "{subcommand}".')
        self.subcommand = subcommand
        self.parameters = dict(defaultsFor(subcommand))
        if parameters:
            self.update(parameters)

    def __repr__(self):
        return f'<RunConfig {self.subcommand} {self.parameters}>'

    def __getitem__(self, key):
        return self.parameters[key]

    def update(self, parameters):
        defaults = defaultsFor(self.subcommand)
        for key, value in parameters.items():
            if key not in defaults:
                raise ConfigError(
                    f'Unknown configuration key "{key}" for '
                    f'{self.subcommand}.')
            value = coerce(key, value, defaults[key])
            checkRange(key, value)
            self.parameters[key] = value

    def validate(self):
        """Checks that involve more than one key; run once all sources
        are merged."""
        p = self.parameters
        if 'n_max' in p and p['n_max'] < p['n_min']:
            raise ConfigError(
                f'"n_max" ({p["n_max"]}) must be >= "n_min" ({p["n_min"]}).')
        if self.subcommand == 'lpp-shape':
            for theta in p['thetas']:
                if p['n'] * min(theta, 1.0 - theta) < 1:
                    raise ConfigError(
                        f'"n" = {p["n"]} is too small for theta = {theta}.')
        return self

    @classmethod
    def fromFile(cls, subcommand, path):
        try:
            with open(path, encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError(f'Cannot read the configuration {path}: {err}')
        if not isinstance(data, dict):
            raise ConfigError(f'The configuration {path} is not an object.')
        logger.debug(f'Loaded {len(data)} keys from {path}.')
        return cls(subcommand, data)

    def asDict(self):
        return dict(self.parameters)

# -----------------------------------------------------------------------------
# HELPER SCRIPTS
# -----------------------------------------------------------------------------


def defaultsFor(subcommand):
    merged = dict(COMMON)
    merged.update(DEFAULTS[subcommand])
    return merged


def coerce(key, value, default):
    """Check `value` against the type of `default`."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f'"{key}" must be true or false; got {value!r}.')
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f'"{key}" must be a number; got {value!r}.')
        return float(value)
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f'"{key}" must be an integer; got {value!r}.')
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f'"{key}" must be a list; got {value!r}.')
        if default:
            return [coerce(key, v, default[0]) for v in value]
        return value
    if not isinstance(value, type(default)):
        raise ConfigError(
            f'"{key}" must be of type {type(default).__name__}; '
            f'got {value!r}.')
    return value


def checkRange(key, value):
    if key not in RANGES:
        return
    test, phrase = RANGES[key]
    for v in (value if isinstance(value, list) else [value]):
        if not test(v):
            raise ConfigError(f'"{key}" must {phrase}; got {v!r}.')

# -----------------------------------------------------------------------------
# eof
