"""Selfdecomposability tools.

A law with characteristic function phi is selfdecomposable when, for every
0 < c < 1, phi(t) / phi(ct) is again a characteristic function. On a finite
uniform grid that is checked through Bochner: the matrix
psi_c(t_j - t_k) must be positive semi-definite.

Selfdecomposable laws are exactly the laws of random integrals
int_0^inf e^-t dY(t) over a Levy process Y with E log(1 + |Y(1)|) finite;
``sample_random_integral`` and ``log_moment_check`` cover that side.
"""
from __future__ import absolute_import

import collections
import logging
import math

import numpy as np

from mixmonster import streams
from mixmonster.probability import (
    EmpiricalCF, Sample, difference_matrix, empirical_cf, psd_check)

logger = logging.getLogger("mixmonster")

DEFAULT_GRID_RADIUS = 8.0
DEFAULT_GRID_SIZE = 41
CLOSED_FORM_TOLERANCE = 1e-9
EMPIRICAL_TOLERANCE = 1e-3
CLOSED_FORM_FLOOR = 1e-300
EMPIRICAL_FLOOR = 1e-6

MIN_T_MAX = 5.0
LOG_MOMENT_GROWTH = 1.5
HILL_THRESHOLD = 2.0

# log(1 + |Y|) of heavy jump sums is computed in log space above this.
_LOG_OVERFLOW = 700.0

JUMP_LAWS = ('discrete', 'normal', 'exponential', 'doubly-exponential')

PASS = 'pass'
FAIL = 'fail'
INCONCLUSIVE = 'inconclusive'


class InvalidScaleError(Exception):
    pass


class InvalidBDLPError(Exception):
    pass


def scale_sample(sample, c):
    """The operator T_c on samples: every point multiplied by c."""
    if c == 0:
        raise InvalidScaleError('T_c is only defined for c != 0')
    if not isinstance(sample, Sample):
        sample = Sample(sample)
    return Sample(sample.points * c)


def gaussian_cf(sigma=1.0, mean=0.0):
    def cf(t):
        t = np.asarray(t, dtype=float)
        return np.exp(1j * mean * t - 0.5 * (sigma * t) ** 2)
    cf.description = 'normal(mean=%r, sigma=%r)' % (mean, sigma)
    return cf


def exponential_cf(scale=1.0):
    def cf(t):
        return 1.0 / (1.0 - 1j * scale * np.asarray(t, dtype=float))
    cf.description = 'exponential(scale=%r)' % scale
    return cf


def uniform_cf(half_width=1.0):
    def cf(t):
        # np.sinc(x) = sin(pi x) / (pi x)
        return np.sinc(half_width * np.asarray(t, dtype=float) / np.pi) + 0j
    cf.description = 'uniform(-%r, %r)' % (half_width, half_width)
    return cf


def default_grid(radius=DEFAULT_GRID_RADIUS, size=DEFAULT_GRID_SIZE):
    if size < 3 or size % 2 == 0:
        raise ValueError('Grid size must be odd and at least 3, got %d' % size)
    return np.linspace(-radius, radius, size)


def _check_c(c_values):
    c_values = [float(c) for c in c_values]
    if not c_values:
        raise InvalidScaleError('Need at least one value of c')
    for c in c_values:
        if not 0.0 < c < 1.0:
            raise InvalidScaleError(
                'Selfdecomposability is tested for 0 < c < 1, got %r' % c)
    return c_values


def required_frequencies(c_values, grid):
    """All frequencies at which phi is evaluated when testing ``grid``:
    the grid differences d and their multiples c d. The result is a grid
    symmetric about 0, suitable for ``empirical_cf``.
    """
    grid = np.asarray(grid, dtype=float).ravel()
    differences = np.abs(grid[:, None] - grid[None, :]).ravel()
    needed = [differences] + [c * differences for c in c_values]
    positive = np.unique(np.round(np.concatenate(needed), 12))
    positive = positive[positive > 0]
    return np.concatenate([-positive[::-1], [0.0], positive])


SelfdecompRow = collections.namedtuple(
    'SelfdecompRow',
    ['c', 'psd_pass', 'worst_violation', 'grid_radius', 'inconclusive_at'])


class SelfdecompReport(object):
    """Outcome of ``selfdecomp_test``: one row per c and a verdict.

    The verdict is ``fail`` if any c fails, ``pass`` if every c passes and
    ``inconclusive`` otherwise.
    """
    def __init__(self, rows, tolerance, floor, source):
        self.rows = list(rows)
        self.tolerance = tolerance
        self.floor = floor
        self.source = source

    @property
    def c_values(self):
        return [row.c for row in self.rows]

    @property
    def verdict(self):
        if any(not row.psd_pass and row.inconclusive_at is None
               for row in self.rows):
            return FAIL
        if all(row.psd_pass for row in self.rows):
            return PASS
        return INCONCLUSIVE

    def as_rows(self):
        return [row._asdict() for row in self.rows]

    def __repr__(self):
        return 'SelfdecompReport(verdict=%s, c=%s)' % (
            self.verdict, self.c_values)


def selfdecomp_test(cf, c_values, grid_radius=DEFAULT_GRID_RADIUS,
                    tol=None, floor=None, grid_size=DEFAULT_GRID_SIZE):
    """Grid test of the selfdecomposability factorisation.

    :param cf: a closed-form characteristic function (a vectorised
        callable), an ``EmpiricalCF`` covering ``required_frequencies`` or
        a one dimensional ``Sample`` whose empirical CF is taken on them
    :param c_values: values of c in (0, 1)
    :param float grid_radius: the grid is ``grid_size`` uniform points on
        [-grid_radius, grid_radius]
    :param tol: PSD tolerance; 1e-9 for closed forms and 1e-3 otherwise
    :param floor: smallest admissible |phi(ct)|; a c whose denominator
        falls below it is inconclusive. Defaults to 1e-300 for closed forms
        and max(1e-6, 3 / sqrt(sample size)) for empirical CFs.
    """
    c_values = _check_c(c_values)
    grid = default_grid(grid_radius, grid_size)
    if isinstance(cf, Sample):
        cf = empirical_cf(cf, required_frequencies(c_values, grid))
    if isinstance(cf, EmpiricalCF):
        phi = cf.at
        source = 'empirical (n=%d)' % cf.sample_size
        default_tol = EMPIRICAL_TOLERANCE
        default_floor = max(EMPIRICAL_FLOOR, 3.0 / math.sqrt(cf.sample_size))
    elif callable(cf):
        phi = cf
        source = getattr(cf, 'description', 'closed form')
        default_tol = CLOSED_FORM_TOLERANCE
        default_floor = CLOSED_FORM_FLOOR
    else:
        raise TypeError('Expected a CF callable, EmpiricalCF or Sample, got '
                        '%r' % (cf,))
    tol = default_tol if tol is None else tol
    floor = default_floor if floor is None else floor
    if not tol > 0 or not floor > 0:
        raise ValueError('Tolerance and floor must be positive')

    differences = grid[:, None] - grid[None, :]
    rows = []
    for c in c_values:
        denominator = np.abs(phi(c * differences))
        if np.any(denominator < floor):
            offending = np.abs(differences[denominator < floor])
            at = float(offending.min())
            logger.warning(
                '|phi(ct)| below the floor %.1e at t = %.4g for c = %.3g; '
                'marking c inconclusive', floor, at, c)
            rows.append(SelfdecompRow(c, False, None, grid_radius, at))
            continue
        matrix = difference_matrix(lambda d: phi(d) / phi(c * d), grid)
        result = psd_check(matrix, tol=tol)
        logger.debug('c=%.3g smallest eigenvalue %.3e', c,
                     result.worst_violation)
        rows.append(SelfdecompRow(c, bool(result.is_psd),
                                  result.worst_violation, grid_radius, None))
    return SelfdecompReport(rows, tol, floor, source)


class JumpLaw(object):
    """Law of the jumps of a compound Poisson process.

    ``discrete`` takes ``values`` and ``probabilities``; ``normal`` takes
    ``mean`` and ``scale``; ``exponential`` takes ``scale``;
    ``doubly-exponential`` is P(J = 2**(2**k)) = 2**-k, k >= 1, which has
    an infinite log-moment and is sampled in log magnitude.
    """
    def __init__(self, kind, values=None, probabilities=None, mean=0.0,
                 scale=1.0):
        if kind not in JUMP_LAWS:
            raise InvalidBDLPError('Unknown jump law %r' % kind)
        self.kind = kind
        self.mean_parameter = float(mean)
        self.scale = float(scale)
        if kind == 'discrete':
            values = np.array(values if values is not None else [],
                              dtype=float)
            probabilities = np.array(
                probabilities if probabilities is not None else [],
                dtype=float)
            if values.size == 0 or values.shape != probabilities.shape:
                raise InvalidBDLPError(
                    'A discrete jump law needs matching values and '
                    'probabilities')
            if np.any(probabilities < 0) or \
                    abs(probabilities.sum() - 1.0) > 1e-12:
                raise InvalidBDLPError(
                    'Jump probabilities must be non-negative and sum to 1')
            self.values = values
            self.probabilities = probabilities
        elif not self.scale > 0:
            raise InvalidBDLPError(
                'Jump scale must be positive, got %r' % scale)

    @property
    def heavy(self):
        return self.kind == 'doubly-exponential'

    def moments(self):
        """(E J, E J^2)."""
        if self.kind == 'discrete':
            return (float(self.probabilities.dot(self.values)),
                    float(self.probabilities.dot(self.values ** 2)))
        elif self.kind == 'normal':
            return (self.mean_parameter,
                    self.mean_parameter ** 2 + self.scale ** 2)
        elif self.kind == 'exponential':
            return self.scale, 2.0 * self.scale ** 2
        return float('inf'), float('inf')

    def sample(self, rng, size):
        if self.kind == 'discrete':
            return rng.choice(self.values, size=size, p=self.probabilities)
        elif self.kind == 'normal':
            return rng.normal(self.mean_parameter, self.scale, size)
        elif self.kind == 'exponential':
            return rng.exponential(self.scale, size)
        raise InvalidBDLPError(
            'doubly-exponential jumps overflow; only log magnitudes can be '
            'sampled')

    def sample_log(self, rng, size):
        """log|J| for jumps of the doubly-exponential law (all positive)."""
        k = rng.geometric(0.5, size).astype(float)
        return np.exp2(k) * math.log(2.0)

    def as_dict(self):
        result = {'kind': self.kind}
        if self.kind == 'discrete':
            result['values'] = self.values.tolist()
            result['probabilities'] = self.probabilities.tolist()
        elif self.kind == 'normal':
            result['mean'] = self.mean_parameter
            result['scale'] = self.scale
        elif self.kind == 'exponential':
            result['scale'] = self.scale
        return result


class BDLPSpec(object):
    """A background driving Levy process: drift t + sigma B(t) plus a
    compound Poisson process of rate ``jump_rate``."""
    def __init__(self, drift=0.0, gaussian_sigma=0.0, jump_rate=0.0,
                 jump_law=None):
        if not gaussian_sigma >= 0:
            raise InvalidBDLPError(
                'gaussian_sigma must be non-negative, got %r' % gaussian_sigma)
        if not jump_rate >= 0:
            raise InvalidBDLPError(
                'jump_rate must be non-negative, got %r' % jump_rate)
        if jump_rate > 0 and jump_law is None:
            raise InvalidBDLPError('A positive jump_rate needs a jump_law')
        self.drift = float(drift)
        self.gaussian_sigma = float(gaussian_sigma)
        self.jump_rate = float(jump_rate)
        self.jump_law = jump_law

    @property
    def has_jumps(self):
        return self.jump_rate > 0

    def as_dict(self):
        return {
            'drift': self.drift,
            'gaussian_sigma': self.gaussian_sigma,
            'jump_rate': self.jump_rate,
            'jump_law': self.jump_law.as_dict() if self.jump_law else None,
        }

    def __repr__(self):
        return 'BDLPSpec(drift=%r, sigma=%r, rate=%r)' % (
            self.drift, self.gaussian_sigma, self.jump_rate)


def _jump_sums(counts, jumps):
    """Sums ``jumps`` into per-sample totals given per-sample ``counts``."""
    owners = np.repeat(np.arange(counts.size), counts)
    return np.bincount(owners, weights=jumps, minlength=counts.size)


def sample_random_integral(bdlp, T_max, n_steps, n_samples, seed):
    """Samples int_0^T_max e^-t dY(t).

    The drift and Gaussian parts are integrated exactly on every step of
    the partition, so the drift contributes (1 - e^-T_max) drift for any
    ``n_steps``. Jumps fall at exact uniform times given their Poisson
    count and are weighted by e^-(jump time). The neglected tail beyond
    T_max is of order e^-T_max.
    """
    if n_steps < 1:
        raise InvalidBDLPError('n_steps must be positive, got %r' % n_steps)
    if n_samples < 1:
        raise InvalidBDLPError(
            'n_samples must be positive, got %r' % n_samples)
    if T_max < MIN_T_MAX:
        raise InvalidBDLPError(
            'T_max must be at least %g, got %r' % (MIN_T_MAX, T_max))
    if bdlp.has_jumps and bdlp.jump_law.heavy:
        raise InvalidBDLPError(
            'Random integrals of doubly-exponential jumps overflow')
    rng = streams.make_rng(seed, 'integral', n_steps)
    total = np.full(n_samples, bdlp.drift * -math.expm1(-T_max))
    if bdlp.gaussian_sigma > 0:
        edges = np.linspace(0.0, T_max, n_steps + 1)
        weights = np.exp(-2.0 * edges)
        step_sd = bdlp.gaussian_sigma * np.sqrt(
            0.5 * (weights[:-1] - weights[1:]))
        for sd in step_sd:
            total += rng.normal(0.0, sd, n_samples)
    if bdlp.has_jumps:
        counts = rng.poisson(bdlp.jump_rate * T_max, n_samples)
        times = rng.uniform(0.0, T_max, counts.sum())
        jumps = bdlp.jump_law.sample(rng, counts.sum())
        total += _jump_sums(counts, jumps * np.exp(-times))
    return Sample(total)


def integral_moments(bdlp, T_max):
    """Exact mean and variance of the truncated random integral, plus the
    truncation factor e^-T_max."""
    mean_jump, square_jump = (bdlp.jump_law.moments() if bdlp.has_jumps
                              else (0.0, 0.0))
    drift = bdlp.drift + bdlp.jump_rate * mean_jump
    variance = bdlp.gaussian_sigma ** 2 + bdlp.jump_rate * square_jump
    return {
        'mean': drift * -math.expm1(-T_max),
        'variance': 0.5 * variance * -math.expm1(-2.0 * T_max),
        'truncation_factor': math.exp(-T_max),
    }


def sample_bdlp_at_one(bdlp, n, rng):
    """n draws of Y(1)."""
    values = bdlp.drift + bdlp.gaussian_sigma * rng.standard_normal(n)
    if bdlp.has_jumps:
        counts = rng.poisson(bdlp.jump_rate, n)
        values = values + _jump_sums(counts,
                                     bdlp.jump_law.sample(rng, counts.sum()))
    return values


def log_magnitude_at_one(bdlp, n, rng):
    """n draws of log(1 + |Y(1)|), overflow free for heavy jump laws."""
    if not (bdlp.has_jumps and bdlp.jump_law.heavy):
        return np.log1p(np.abs(sample_bdlp_at_one(bdlp, n, rng)))
    rest = bdlp.drift + bdlp.gaussian_sigma * rng.standard_normal(n)
    counts = rng.poisson(bdlp.jump_rate, n)
    logs = bdlp.jump_law.sample_log(rng, counts.sum())
    owners = np.repeat(np.arange(n), counts)
    largest = np.full(n, -np.inf)
    np.maximum.at(largest, owners, logs)
    scaled = np.bincount(owners, weights=np.exp(logs - largest[owners]),
                         minlength=n)
    with np.errstate(divide='ignore'):
        log_sum = largest + np.log(scaled)
    result = np.log1p(np.abs(rest))
    jumped = counts > 0
    small = jumped & (log_sum < _LOG_OVERFLOW)
    result[small] = np.log1p(np.abs(np.exp(log_sum[small]) + rest[small]))
    large = jumped & ~small
    result[large] = log_sum[large]
    return result


def hill_tail_index(values):
    """Hill estimate of the tail index from the top sqrt(n) order
    statistics; infinite when the top of the sample is flat."""
    values = np.sort(np.asarray(values, dtype=float))
    k = max(2, int(math.sqrt(values.size)))
    threshold = values[-k - 1]
    if not threshold > 0:
        return float('inf')
    gamma = float(np.mean(np.log(values[-k:])) - math.log(threshold))
    if gamma <= 0:
        return float('inf')
    return 1.0 / gamma


LogMomentReport = collections.namedtuple(
    'LogMomentReport',
    ['estimate', 'diagnostic', 'tenth_estimate', 'growth', 'tail_index'])

FINITE = 'finite'
SUSPECT_INFINITE = 'suspect-infinite'


def log_moment_check(bdlp, n_samples=100000, seed=0,
                     growth_factor=LOG_MOMENT_GROWTH,
                     hill_threshold=HILL_THRESHOLD):
    """Monte Carlo estimate of E log(1 + |Y(1)|) with a divergence
    diagnostic.

    Two diagnostics flag ``suspect-infinite``: the estimate on all n samples
    exceeding ``growth_factor`` times the estimate on the first n / 10, or
    a Hill tail index of log(1 + |Y(1)|) at or below ``hill_threshold``.
    """
    if n_samples < 100:
        raise ValueError('Need at least 100 samples, got %d' % n_samples)
    rng = streams.make_rng(seed, 'log-moment')
    values = log_magnitude_at_one(bdlp, n_samples, rng)
    estimate = float(np.mean(values))
    tenth = float(np.mean(values[:n_samples // 10]))
    growth = estimate / tenth if tenth > 0 else 1.0
    tail_index = hill_tail_index(values)
    suspect = growth > growth_factor or tail_index <= hill_threshold
    diagnostic = SUSPECT_INFINITE if suspect else FINITE
    if suspect:
        logger.warning(
            'log-moment looks infinite: estimate %.4g, growth %.3g, tail '
            'index %.3g', estimate, growth, tail_index)
    return LogMomentReport(estimate, diagnostic, tenth, growth, tail_index)
