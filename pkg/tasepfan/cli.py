# -----------------------------------------------------------------------------
# Name:         cli.py
# Purpose:      Command-line entry point for the tasepfan experiments
#
# Author:       the tasepfan developers
# Copyright:    (c) 2024 by the tasepfan developers
# License:      BSD, see license.txt
# -----------------------------------------------------------------------------
"""
Command Line
============

This is the main program module.

Each experiment and verification is a subcommand:

.. code-block:: shell

   $ tasepfan simulate --lambda 1 --rho 0 --t 64 --seed 7
   $ tasepfan coupling-verify --config coupling.json
   $ tasepfan lpp-shape
   $ tasepfan hydro-check --n 512
   $ tasepfan sll --replicas 2000 --n-max 10 --workers 8

A subcommand reads its defaults, then the JSON file given by
`--config`, then the flags.  Results are written as CSV files to the
output directory together with a JSON manifest; optional SVG plots are
drawn with matplotlib.

Exit codes: 0 success, 2 configuration error, 3 failed verification or
acceptance check, 1 anything else.
"""
import argparse
import json
import logging
import os
import sys

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

import tasepfan  # noqa: E402
from tasepfan import config  # noqa: E402
from tasepfan import experiments  # noqa: E402
from tasepfan import harris  # noqa: E402
from tasepfan import hydro  # noqa: E402
from tasepfan import lpp  # noqa: E402
from tasepfan import server  # noqa: E402
from tasepfan import tasep  # noqa: E402
from tasepfan.config import ConfigError  # noqa: E402
from tasepfan.experiments import AcceptanceFailure  # noqa: E402
from tasepfan.server import CouplingError  # noqa: E402

# -----------------------------------------------------------------------------
# LOGGER
# -----------------------------------------------------------------------------

logfileName = 'tasepfan.txt'

logger = logging.getLogger('tasepfan')
logger.setLevel(logging.DEBUG)
logger.propagate = False
# logging handlers
f_handler = logging.FileHandler(logfileName, mode='w')
f_handler.setLevel(logging.DEBUG)
# logging formatters
f_formatter = logging.Formatter('%(message)s')
f_handler.setFormatter(f_formatter)
# add handlers to logger
logger.addHandler(f_handler)

# -----------------------------------------------------------------------------
# MAIN SCRIPTS
# -----------------------------------------------------------------------------


def main(argv=None):
    """Run one subcommand and return its exit code."""
    parser = buildParser()
    args = parser.parse_args(argv)
    if args.verbose:
        s_handler = logging.StreamHandler(sys.stderr)
        s_handler.setLevel(logging.INFO)
        s_handler.setFormatter(f_formatter)
        logger.addHandler(s_handler)
    try:
        cfg = configFromArgs(args)
        runner = RUNNERS[cfg.subcommand]
        outputs = runner(cfg)
    except ConfigError as err:
        err.logerror()
        print(f'Configuration error: {err}', file=sys.stderr)
        return 2
    except (AcceptanceFailure, CouplingError) as err:
        err.logerror()
        print(f'Check failed: {err}', file=sys.stderr)
        return 3
    except Exception as err:
        logger.exception(f'Unexpected error: {err}')
        print(f'Internal error: {err}', file=sys.stderr)
        return 1
    for path in outputs:
        print(path)
    return 0


def buildParser():
    parser = argparse.ArgumentParser(
        prog='tasepfan',
        description='Second-class particle experiments for TASEP.')
    subparsers = parser.add_subparsers(dest='subcommand', required=True)
    for name in config.DEFAULTS:
        sub = subparsers.add_parser(name)
        sub.add_argument('--config', default=None,
                         help='JSON file of configuration keys')
        sub.add_argument('--verbose', action='store_true',
                         help='also log progress to stderr')
        for key, default in config.defaultsFor(name).items():
            sub.add_argument('--' + key.replace('_', '-'), dest=key,
                             default=None,
                             help=f'default: {json.dumps(default)}')
    return parser


def configFromArgs(args):
    """Defaults, then the JSON file, then the flags."""
    if args.config:
        cfg = config.RunConfig.fromFile(args.subcommand, args.config)
    else:
        cfg = config.RunConfig(args.subcommand)
    flags = {}
    for key in config.defaultsFor(args.subcommand):
        raw = getattr(args, key)
        if raw is not None:
            flags[key] = parseFlag(raw)
    cfg.update(flags)
    cfg.validate()
    logger.debug(f'Configuration: {cfg}')
    return cfg


def parseFlag(raw):
    """Flag values are read as JSON where possible, else as strings."""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw

# -----------------------------------------------------------------------------
# SUBCOMMANDS
# -----------------------------------------------------------------------------


def runSimulate(cfg):
    ic = tasep.ShockInitialCondition(cfg['lambda'], cfg['rho'])
    t = cfg['t']
    L = cfg['L'] or tasep.defaultWindow(t)
    rows = []
    paths = []
    for r in range(cfg['replicas']):
        seed = experiments.replicaSeed(cfg['seed'], r)
        state = tasep.initShock(ic, L, seed)
        clocks = harris.build(seed, tasep.harrisRange(L), max(t, 1.0))
        state, trajectory = tasep.evolve(state, clocks, t)
        state.checkInvariants()
        rows.extend(tasep.trajectoryRows(trajectory, seed, r))
        paths.append(trajectory)
    out = Outputs(cfg)
    header = ['replica', 'seed', 'time', 'X', 'left_front', 'right_front']
    out.csv('simulate.csv', header, rows, comment=_labelComment(ic.label))
    if cfg['plot']:
        series = [(tr.times[1:], tr.secondClass[1:] / tr.times[1:])
                  for tr in paths if len(tr) > 1]
        out.plot('simulate.svg', series, 't', 'X(t)/t')
    return out.finish()


def runCouplingVerify(cfg):
    ic = tasep.ShockInitialCondition(cfg['lambda'], cfg['rho'])
    L = max(1, cfg['window'] // 2)
    times = sorted(cfg['times'])
    horizon = max(times + [1.0])
    rows = []
    failures = []
    for s in range(cfg['seeds']):
        seed = experiments.replicaSeed(cfg['seed'], s)
        state = tasep.initShock(ic, L, seed)
        clocks = harris.build(seed, tasep.harrisRange(L), horizon)
        z0 = server.heightFromConfig(state)
        report = server.couplingReport(z0, clocks, times)
        rows.extend([seed] + list(row) for row in report.rows)
        if not report.passed:
            failures.append((seed, report.firstMismatch()))
        if cfg['pair_check']:
            pair = server.makeHeightPair(state.copy())
            steps = server.trackSecondClass(pair, clocks, horizon)
            _, trajectory = tasep.evolve(state.copy(), clocks, horizon)
            moves = trajectory.moves()
            if not (np.array_equal(steps[0], moves[0])
                    and np.array_equal(steps[1], moves[1])):
                failures.append((seed, 'second-class trajectory'))
    out = Outputs(cfg)
    out.csv('coupling.csv', ['seed'] + server.CouplingReport.header, rows)
    summary = [['coupling', 'mismatched_seeds', len(failures), 0,
                not failures]]
    out.csv('coupling_summary.csv', experiments.SUMMARY_HEADER, summary)
    out.finish()
    if failures:
        seed, where = failures[0]
        raise CouplingError(
            f'{len(failures)} failed checks; first at seed {seed}, {where}.')
    return out.paths


def runLppShape(cfg):
    mapper = experiments.replicaMapper(_workers(cfg))
    n = cfg['n']
    shape = []
    summary = []
    for theta in cfg['thetas']:
        result = lpp.limitShapeExperiment(n, theta, cfg['replicas'],
                                          cfg['seed'], mapper)
        envelope = 3.0 * np.sqrt(n) * np.log(n ** 2)
        shape.append(result.row(repr(float(envelope))))
        summary.append(['lpp-shape', f'upper_bound_theta={theta}',
                        repr(result.mean),
                        repr(result.target + 3 * result.stderr),
                        result.upperBoundHolds])
        if theta == 0.5:
            summary.append(['lpp-shape', 'lower_edge_theta=0.5',
                            repr(result.mean), repr(cfg['lower_edge']),
                            result.mean >= cfg['lower_edge']])
    out = Outputs(cfg)
    out.csv('lpp_shape.csv', lpp.ShapeResult.header, shape)
    if cfg['n_list']:
        rows = lpp.concentrationExperiment(cfg['n_list'], 0.5,
                                           cfg['replicas'], cfg['seed'],
                                           mapper)
        out.csv('lpp_concentration.csv', ['n', 'std', 'envelope', 'mean'],
                [[n_, repr(s), repr(e), repr(m)] for n_, s, e, m in rows])
        for n_, s, e, _ in rows:
            summary.append(['lpp-shape', f'std_n={n_}', repr(s), repr(e),
                            s <= e])
        for n0, n1, ratio, bound in lpp.stdGrowth(sorted(rows)):
            summary.append(['lpp-shape', f'std_growth_n={n0}..{n1}',
                            repr(ratio), repr(bound),
                            ratio < bound if np.isfinite(ratio) else ''])
    out.csv('lpp_summary.csv', experiments.SUMMARY_HEADER, summary)
    out.finish()
    _enforce(summary)
    return out.paths


def runHydroCheck(cfg):
    data = hydro.RiemannData(cfg['lambda'], cfg['rho'])
    solution = hydro.HydroSolution(data)
    h = cfg['grid_step']
    xs = np.linspace(-1.0, 1.0, cfg['profile_points'])
    summary = []
    discrepancy = hydro.hopfLaxDiscrepancy(solution, 1.0, xs, h)
    summary.append(['hydro-check', 'hopf_lax_discrepancy', repr(discrepancy),
                    repr(10 * h), discrepancy <= 10 * h])
    # a shock costs half a grid step of trapezoid error at the jump
    consistency = hydro.integralConsistency(solution, 1.0, -2.0, 2.0,
                                            int(4.0 / h) + 1)
    summary.append(['hydro-check', 'integral_consistency', repr(consistency),
                    repr(h), consistency <= h])

    results = experiments.hydroReplicas(
        cfg['lambda'], cfg['rho'], cfg['n'], cfg['replicas'], cfg['seed'],
        cfg['t_multiplier'], cfg['eps1'], _workers(cfg))
    passRate = np.mean([r.normalized <= 1.0 for r in results])
    summary.append(['hydro-check', 'normalized_pass_rate', repr(passRate),
                    repr(cfg['pass_rate']), passRate >= cfg['pass_rate']])

    out = Outputs(cfg)
    out.csv('hydro_profile.csv', ['x', 'u', 'U'],
            hydro.profileRows(solution, 1.0, xs),
            comment=hydro.profileComment(solution, 1.0))
    out.csv('hydro_compare.csv', experiments.HydroComparison.header,
            [r.row() for r in results])
    out.csv('hydro_summary.csv', experiments.SUMMARY_HEADER, summary)
    if cfg['plot']:
        out.plot('hydro_profile.svg', [(xs, solution.u(1.0, xs))], 'x',
                 'u_1(x)')
    out.finish()
    _enforce(summary)
    return out.paths


def runSll(cfg):
    lam, rho = cfg['lambda'], cfg['rho']
    stats = experiments.runSll(lam, rho, cfg['m'], cfg['n_max'],
                               cfg['replicas'], cfg['seed'],
                               nMin=cfg['n_min'], workers=_workers(cfg))
    summary = []
    # the shadow rows are finite-scale measurements and are not enforced
    shadows = []
    if lam > rho:
        ks = experiments.uniformLawTest(stats.terminalRatios(), lam, rho,
                                        cfg['ks_threshold'])
        summary.append(ks.row('sll'))
    else:
        row = experiments.controlMedian(stats).row('sll')
        row[1] = 'shadow_' + row[1]
        shadows.append(row)
    summary.append(['sll', 'speed_bound', repr(1.0), repr(1.0),
                    stats.speedBoundHolds()])
    nMax = cfg['n_max']
    scales = [2 ** k for k in range(max(cfg['n_min'], nMax - 2), nMax + 1)]
    cauchy = experiments.cauchyInScale(stats, scales)
    medians = [m for _, m in cauchy]
    decreasing = all(b < a for a, b in zip(medians, medians[1:]))
    for T, med in cauchy:
        shadows.append(['sll', f'shadow_cauchy_median_T={T}', repr(med),
                        '', decreasing])
    for n, budget, frac, q50, q90, mx, mBudget in \
            experiments.dyadicOscillation(stats, cfg['beta']):
        shadows.append(['sll', f'shadow_exceedance_n={n}', repr(frac),
                        repr(budget), ''])
        shadows.append(['sll', f'shadow_sup_q90_n={n}', repr(q90),
                        repr(mBudget), q90 <= mBudget])
    if nMax >= 8:
        frac, oracle = experiments.poissonStepBudget(stats)
        shadows.append(['sll', 'shadow_step_budget_violations', repr(frac),
                        repr(0.01), frac < 0.01])

    out = Outputs(cfg)
    out.csv('sll.csv', experiments.TRAJECTORY_HEADER,
            stats.trajectoryRows(),
            comment=_labelComment(
                tasep.ShockInitialCondition(lam, rho).label))
    out.csv('sll_summary.csv', experiments.SUMMARY_HEADER, summary + shadows)
    if cfg['plot']:
        ratios = stats.terminalRatios()
        grid = np.sort(ratios)
        ecdf = np.arange(1, len(grid) + 1) / len(grid)
        out.plot('sll_ecdf.svg', [(grid, ecdf)], 'X(T)/T', 'empirical CDF')
    out.finish()
    _enforce(summary)
    return out.paths


RUNNERS = {
    'simulate': runSimulate,
    'coupling-verify': runCouplingVerify,
    'lpp-shape': runLppShape,
    'hydro-check': runHydroCheck,
    'sll': runSll,
}

# -----------------------------------------------------------------------------
# HELPER CLASSES
# -----------------------------------------------------------------------------


class Outputs:
    """Collects the files of one run; every CSV names the manifest
    and the seed on its first line."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.directory = cfg['output_dir']
        self.manifestName = f'{cfg.subcommand}_manifest.json'
        self.paths = []

    def path(self, name):
        return os.path.join(self.directory, name)

    def csv(self, name, header, rows, comment=None):
        path = self.path(name)
        experiments.writeCsv(path, header, rows, self.manifestName,
                             self.cfg['seed'], comment)
        self.paths.append(path)

    def plot(self, name, series, xlabel, ylabel):
        path = self.path(name)
        writePlot(path, series, xlabel, ylabel)
        self.paths.append(path)

    def finish(self):
        path = self.path(self.manifestName)
        experiments.writeManifest(path, self.cfg.subcommand,
                                  self.cfg.asDict(), tasepfan.__version__)
        self.paths.append(path)
        return self.paths


def writePlot(path, series, xlabel, ylabel):
    """Polylines on common axes, saved as SVG."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    for xs, ys in series:
        ax.plot(xs, ys, linewidth=0.8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)

# -----------------------------------------------------------------------------
# HELPER SCRIPTS
# -----------------------------------------------------------------------------


def _workers(cfg):
    return cfg['workers'] or None


def _labelComment(label):
    return f'# {label}' if label else None


def _enforce(summary):
    failed = [row[1] for row in summary if row[4] is False]
    if failed:
        raise AcceptanceFailure(f'Failed checks: {", ".join(failed)}.')

# -----------------------------------------------------------------------------


if __name__ == '__main__':
    sys.exit(main())

# -----------------------------------------------------------------------------
# eof
