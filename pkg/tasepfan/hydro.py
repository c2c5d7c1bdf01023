# -----------------------------------------------------------------------------
# Name:         hydro.py
# Purpose:      Entropy solutions and the Hopf-Lax formula for Riemann data
#
# Author:       the tasepfan developers
# Copyright:    (c) 2024 by the tasepfan developers
# License:      BSD, see license.txt
# -----------------------------------------------------------------------------
"""
Hydrodynamics
=============

The density `u_t(x)` solves the conservation law
`du/dt + d(u (1 - u))/dx = 0` from the Riemann data

    u_0(x) = lambda for x < 0,    u_0(x) = rho for x > 0.

Its integral `U_t(x)`, normalized by `U_0(0) = 0`, is given by the
Hopf-Lax formula

    U_t(x) = sup_y { U_0(y) - t g((x - y) / t) },    g(r) = (1 - r)**2 / 4,

the supremum being attained in [x - t, x + t].

For lambda > rho the solution is a rarefaction fan between the
characteristic speeds 1 - 2 lambda and 1 - 2 rho.  Equal densities give
a constant profile, and lambda < rho an entropy shock travelling at
speed 1 - lambda - rho; the latter is labelled as outside the regime of
the second-class uniform law.
"""
import logging
import math

import numpy as np
from scipy import integrate
from scipy import optimize

from tasepfan import lpp
from tasepfan import tasep
from tasepfan.utilities import SimulationError

logger = logging.getLogger(__name__)

# -----------------------------------------------------------------------------
# EXCEPTION HANDLERS
# -----------------------------------------------------------------------------


class HydroError(SimulationError):
    pass


class UnsupportedCaseError(HydroError):
    pass

# -----------------------------------------------------------------------------
# MAIN CLASSES
# -----------------------------------------------------------------------------


class RiemannData:

    def __init__(self, lam, rho):
        for name, value in (('lambda', lam), ('rho', rho)):
            if not 0.0 <= value <= 1.0:
                raise HydroError(
                    f'The density {name}={value} lies outside [0, 1].')
        self.lam = float(lam)
        self.rho = float(rho)

    def __repr__(self):
        return f'<RiemannData lambda={self.lam} rho={self.rho}>'

    def u0(self, x):
        x = np.asarray(x, dtype=float)
        return _scalar(np.where(x < 0, self.lam, self.rho))

    def U0(self, x):
        x = np.asarray(x, dtype=float)
        return _scalar(np.where(x < 0, self.lam * x, self.rho * x))


class HydroSolution:
    """Closed-form density and integrated profile for Riemann data,
    together with a numerical Hopf-Lax evaluator."""

    def __init__(self, data):
        self.data = data

    def __repr__(self):
        return f'<HydroSolution {self.case} {self.data}>'

    @property
    def case(self):
        if self.data.lam > self.data.rho:
            return 'fan'
        if self.data.lam == self.data.rho:
            return 'constant'
        return 'shock'

    @property
    def label(self):
        return tasep.INCREASING_SHOCK_LABEL if self.case == 'shock' else ''

    @property
    def shockSpeed(self):
        return 1.0 - self.data.lam - self.data.rho

    def u(self, t, x):
        if t <= 0:
            return self.data.u0(x)
        lam, rho = self.data.lam, self.data.rho
        x = np.asarray(x, dtype=float)
        if self.case == 'fan':
            return fanDensity(self.data, t, x)
        if self.case == 'constant':
            return _scalar(np.full_like(x, lam))
        return _scalar(np.where(x <= self.shockSpeed * t, lam, rho))

    def U(self, t, x):
        if t <= 0:
            return self.data.U0(x)
        lam, rho = self.data.lam, self.data.rho
        x = np.asarray(x, dtype=float)
        left = lam * x - t * lpp.flux(lam)
        right = rho * x - t * lpp.flux(rho)
        if self.case == 'fan':
            fan = -(t - x) ** 2 / (4.0 * t)
            value = np.where(x <= (1 - 2 * lam) * t, left,
                             np.where(x <= (1 - 2 * rho) * t, fan, right))
            return _scalar(value)
        return _scalar(np.maximum(left, right))

    def hopfLax(self, t, x, h=1e-3):
        return hopfLax(self.data.U0, t, x, h)

    def kinks(self, t):
        """The points where u_t is not smooth."""
        if self.case == 'fan':
            return [(1 - 2 * self.data.lam) * t, (1 - 2 * self.data.rho) * t]
        if self.case == 'shock':
            return [self.shockSpeed * t]
        return []


class ClosenessResult:

    def __init__(self, maxDeviation, argmax, v):
        self.maxDeviation = maxDeviation
        self.argmax = argmax
        self.v = v

    def __bool__(self):
        return self.maxDeviation <= self.v

    def __repr__(self):
        return (f'<ClosenessResult max={self.maxDeviation:.3f} '
                f'at {self.argmax} v={self.v}>')


class MaximizerReport:
    """Where the maximizer landed and how the quadratic gap fared."""

    def __init__(self, x, s, m, h, vStar, gapExcess, secondDerivative):
        self.x = x
        self.s = s
        self.m = m
        self.h = h
        self.vStar = vStar
        self.gapExcess = gapExcess
        self.secondDerivative = secondDerivative

    def __repr__(self):
        return (f'<MaximizerReport v*={self.vStar:.5f} x={self.x} '
                f'gap excess={self.gapExcess:.2e} '
                f"V''={self.secondDerivative:.3f}>")

    @property
    def argmaxOk(self):
        return abs(self.vStar - self.x) <= self.h

    @property
    def gapOk(self):
        return self.gapExcess <= 1e-9

    @property
    def curvatureOk(self):
        return self.secondDerivative <= -2.0

    def __bool__(self):
        return self.argmaxOk and self.gapOk and self.curvatureOk

# -----------------------------------------------------------------------------
# MAIN SCRIPTS
# -----------------------------------------------------------------------------


def fanDensity(data, t, x):
    """The rarefaction fan: lambda up to (1 - 2 lambda) t, then
    (t - x) / 2t, then rho beyond (1 - 2 rho) t."""
    if t <= 0:
        raise HydroError(f'The fan needs t > 0; received {t}.')
    if data.lam <= data.rho:
        raise UnsupportedCaseError(
            f'{data} does not produce a rarefaction fan.')
    x = np.asarray(x, dtype=float)
    value = np.where(x <= (1 - 2 * data.lam) * t, data.lam,
                     np.where(x <= (1 - 2 * data.rho) * t,
                              (t - x) / (2.0 * t), data.rho))
    return _scalar(value)


def hopfLax(U0, t, x, h=1e-3):
    """sup over y in [x - t, x + t] of U0(y) - t g((x - y) / t).

    The supremum is taken on a grid of step h and then refined by a
    bounded scalar maximization around the best grid point."""
    if h <= 0:
        raise HydroError(f'The grid step must be positive; received {h}.')
    if t <= 0:
        raise HydroError(f'Hopf-Lax needs t > 0; received {t}.')

    def objective(y):
        return U0(y) - t * lpp.gShape((x - y) / t)

    n = max(2, int(math.ceil(2 * t / h)) + 1)
    ys = np.linspace(x - t, x + t, n)
    values = np.asarray(objective(ys), dtype=float)
    k = int(np.argmax(values))
    best = float(values[k])
    a = ys[max(k - 1, 0)]
    b = ys[min(k + 1, n - 1)]
    if b > a:
        res = optimize.minimize_scalar(lambda y: -float(objective(y)),
                                       bounds=(a, b), method='bounded',
                                       options={'xatol': 1e-12})
        best = max(best, -float(res.fun))
    return best


def closeness(state, U0, M, n, v):
    """Compare the partial sums of first-class occupancies from -Mn with
    n times the integral of the profile: true when

        | sum_{y=-Mn}^{x} eta(y) - n (U0(x / n) - U0(-M)) | <= v

    at every x in [-Mn, Mn]."""
    Mn = int(math.floor(M * n))
    if Mn > state.L:
        raise HydroError(
            f'The window [-{state.L}, {state.L}] does not contain '
            f'[-{Mn}, {Mn}].')
    cells = state.cells[state.L - Mn:state.L + Mn + 1]
    sums = np.cumsum(cells == tasep.FIRST)
    xs = np.arange(-Mn, Mn + 1)
    target = n * (np.asarray(U0(xs / n), dtype=float) - U0(-Mn / n))
    dev = np.abs(sums - target)
    k = int(np.argmax(dev))
    result = ClosenessResult(float(dev[k]), int(xs[k]), v)
    logger.debug(f'Closeness at M={M}, n={n}: {result}.')
    return result


def maximizerCheck(data, x, s, m, h=1e-4, delta=0.1, strict=False):
    """Maximize V(v) = U_1(v) - (s - 1) g((x s - v) / (s - 1)) over a
    grid of step h on |v - s x| < 2 (s - 1).

    The maximizer should sit at v = x, with

        V(v) <= U_s(x s) - (v - x)**2

    and V'' <= -2.  Requires m >= 4, s in [1 + 1/(2m), 1 + 1/m] and x at
    distance more than delta inside the fan; `strict` also demands
    1/m < delta/10 and delta < 1/10."""
    if data.lam <= data.rho:
        raise UnsupportedCaseError(f'{data} does not produce a fan.')
    if m < 4:
        raise HydroError(f'm must be at least 4; received {m}.')
    if not 1 + 1 / (2 * m) <= s <= 1 + 1 / m:
        raise HydroError(
            f's = {s} lies outside [1 + 1/(2m), 1 + 1/m] for m = {m}.')
    if not (1 - 2 * data.lam + delta < x < 1 - 2 * data.rho - delta):
        raise HydroError(
            f'x = {x} is not inside the fan of {data} with margin {delta}.')
    if strict and not (1 / m < delta / 10 and delta < 0.1):
        raise HydroError(
            f'm = {m} and delta = {delta} violate 1/m < delta/10 < 1/100.')
    sol = HydroSolution(data)
    w = s - 1.0

    def V(v):
        return sol.U(1.0, v) - w * lpp.gShape((x * s - v) / w)

    n = int(math.ceil(4 * w / h))
    vs = np.linspace(x * s - 2 * w, x * s + 2 * w, n + 1)[1:-1]
    values = V(vs)
    vStar = float(vs[int(np.argmax(values))])
    target = float(sol.U(s, x * s))
    gapExcess = float(np.max(values - (target - (vs - x) ** 2)))
    d = 1e-3 * w
    second = float((V(x + d) - 2 * V(x) + V(x - d)) / d ** 2)
    report = MaximizerReport(x, s, m, h, vStar, gapExcess, second)
    logger.info(f'Maximizer check: {report}.')
    return report


def integralConsistency(solution, t, a, b, nx=4001):
    """max over the grid of |U_t(y) - U_t(a) - integral_a^y u_t|, the
    integral by the cumulative trapezoid rule on a grid holding the
    kinks of u_t."""
    xs = _gridWithKinks(a, b, nx, solution.kinks(t))
    integral = integrate.cumulative_trapezoid(solution.u(t, xs), xs,
                                              initial=0.0)
    U = solution.U(t, xs)
    return float(np.max(np.abs(U - U[0] - integral)))


def massBalance(solution, t1, t2, a, b, nx=4001, nt=2001):
    """Change of the mass in [a, b] between t1 and t2 minus the net flux
    G(u(a)) - G(u(b)) through its ends over the same period."""
    xs = _gridWithKinks(a, b, nx, solution.kinks(t1) + solution.kinks(t2))
    m1 = integrate.trapezoid(solution.u(t1, xs), xs)
    m2 = integrate.trapezoid(solution.u(t2, xs), xs)
    ts = np.linspace(t1, t2, nt)
    fluxIn = integrate.trapezoid(
        [lpp.flux(solution.u(t, a)) for t in ts], ts)
    fluxOut = integrate.trapezoid(
        [lpp.flux(solution.u(t, b)) for t in ts], ts)
    return float((m2 - m1) - (fluxIn - fluxOut))


def hopfLaxDiscrepancy(solution, t, xs, h=1e-3):
    """max over xs of |closed-form U_t(x) - Hopf-Lax U_t(x)|."""
    closed = np.asarray(solution.U(t, xs), dtype=float)
    numeric = np.array([solution.hopfLax(t, x, h) for x in xs])
    return float(np.max(np.abs(closed - numeric)))


def profileRows(solution, t, xs):
    """Rows (x, u_t(x), U_t(x)) for a profile dump."""
    u = np.atleast_1d(solution.u(t, xs))
    U = np.atleast_1d(solution.U(t, xs))
    return [[repr(float(x)), repr(float(a)), repr(float(b))]
            for x, a, b in zip(xs, u, U)]


def profileComment(solution, t):
    return (f'# lambda={solution.data.lam} rho={solution.data.rho} t={t} '
            f'case={solution.case} {solution.label}').rstrip()

# -----------------------------------------------------------------------------
# HELPER SCRIPTS
# -----------------------------------------------------------------------------


def _scalar(value):
    value = np.asarray(value)
    return float(value) if value.ndim == 0 else value


def _gridWithKinks(a, b, nx, kinks):
    xs = np.linspace(a, b, nx)
    inside = [k for k in kinks if a < k < b]
    return np.union1d(xs, inside)

# -----------------------------------------------------------------------------
# eof
