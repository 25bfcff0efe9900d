"""The blocking construction behind the selfdecomposability of limits of
normalised sums of strongly mixing sequences.

For a target 0 < c < 1 and each n the engine picks

    m_n   the largest k < n with a(n) / a(k) <= c
    delta_n  a non-increasing sequence with
             max_k P(a(n) |X_k| >= delta_n) <= delta_n
    q_n   floor(delta_n ** -1/2), capped so that m_n + q_n < n

and splits the normalised sum into three blocks,

    U_n = (a_n / a_m)(a_m S_m + b_m)
    V_n = a_n (S_{m+q} - S_m)
    W_n = a_n (S_n - S_{m+q}) + b_n - (a_n / a_m) b_m

with U_n + V_n + W_n = a_n S_n + b_n. ``verify_blocking`` checks every
claim made about the blocks by Monte Carlo.
"""
from __future__ import absolute_import

import collections
import logging
import math

import numpy as np
import six
from scipy import stats

from mixmonster import processes, workers
from mixmonster.mixing import alpha_plugin
from mixmonster.probability import Sample, empirical_cf, ks_distance
from mixmonster.selfdecomp import (
    FAIL, default_grid, required_frequencies, selfdecomp_test)

logger = logging.getLogger("mixmonster")

DEFAULT_N_GRID = (256, 512, 1024, 2048, 4096)
DEFAULT_REPLICATIONS = 10000
DEFAULT_EPSILON = 0.1
DEFAULT_GRID_STEP = 0.01
KS_TOLERANCE = 0.05
IDENTITY_TOLERANCE = 1e-9
TIGHTNESS_SPREAD = 2.0

# Empirical CF checks on the block sums use a coarse grid so the PSD
# tolerance dominates the sampling noise.
CF_CHECK_RADIUS = 1.0
CF_CHECK_SIZE = 3
CONVOLUTION_GRID = np.linspace(-2.0, 2.0, 21)


class NotInfinitesimalError(Exception):
    pass


class PreAsymptoticError(Exception):
    pass


class BlockingIdentityError(Exception):
    pass


def compute_m(a, c, n):
    """m_n = max{1 <= k <= n - 1 : a(n) / a(k) <= c}, or 1 if empty."""
    if n < 2:
        raise ValueError('m_n needs n >= 2, got %r' % n)
    ks = np.arange(1, n)
    ratios = float(a(n)) / np.asarray(a(ks), dtype=float)
    valid = np.nonzero(ratios <= c)[0]
    if valid.size == 0:
        return 1
    return int(ks[valid[-1]])


def compute_m_values(a, c, n_values):
    return dict((int(n), compute_m(a, c, int(n))) for n in n_values)


def compute_deltas(tail, horizon, grid_step=DEFAULT_GRID_STEP):
    """delta_1..delta_N as an array (delta_n at index n - 1).

    For each n the smallest delta on {grid_step, 2 grid_step, ..., 1} with
    tail(n, delta) <= delta, made non-increasing by a reverse running
    maximum.
    """
    if horizon < 1:
        raise ValueError('Horizon must be positive, got %r' % horizon)
    steps = int(round(1.0 / grid_step))
    if steps < 1 or abs(steps * grid_step - 1.0) > 1e-9:
        raise ValueError('grid_step must divide 1, got %r' % grid_step)
    grid = np.arange(1, steps + 1) * grid_step
    grid[-1] = 1.0
    raw = np.empty(horizon)
    for n in six.moves.range(1, horizon + 1):
        satisfied = np.nonzero(np.asarray(tail(n, grid)) <= grid)[0]
        if satisfied.size == 0:
            raise NotInfinitesimalError(
                'No delta on the grid satisfies the tail inequality at '
                'n = %d' % n)
        raw[n - 1] = grid[satisfied[0]]
    deltas = np.maximum.accumulate(raw[::-1])[::-1]
    if deltas[-1] >= 1.0 and horizon > 1:
        raise NotInfinitesimalError(
            'The array is not infinitesimal at the horizon n = %d: only '
            'delta = 1 satisfies the tail inequality' % horizon)
    return deltas


def _value_at(values, n):
    if isinstance(values, dict):
        return values[n]
    return values[n - 1]


def compute_q(deltas, m_values, n):
    """q_n = max(1, min(floor(delta_n ** -1/2), n - m_n - 1)).

    ``deltas`` and ``m_values`` are either dicts keyed by n or sequences
    starting at n = 1.
    """
    delta = float(_value_at(deltas, n))
    m = int(_value_at(m_values, n))
    largest = int(math.floor(delta ** -0.5 * (1.0 + 1e-12)))
    return max(1, min(largest, n - m - 1))


PlanEntry = collections.namedtuple(
    'PlanEntry', ['n', 'm', 'q', 'delta', 'ratio'])


class BlockingPlan(object):
    """The (m_n, q_n, delta_n) choices for a set of n, computed once.

    ``threshold`` is the first n from which m + q < n holds for every
    larger n of the plan; smaller n are pre-asymptotic.
    """
    def __init__(self, c, entries):
        self.c = c
        self.entries = dict((entry.n, entry) for entry in entries)
        self.threshold = None
        for n in sorted(self.entries, reverse=True):
            entry = self.entries[n]
            if entry.m + entry.q >= n:
                break
            self.threshold = n

    @property
    def n_values(self):
        return sorted(self.entries)

    def is_pre_asymptotic(self, n):
        return self.threshold is None or n < self.threshold

    def at(self, n):
        if n not in self.entries:
            raise ValueError('n = %d is not part of this plan' % n)
        if self.is_pre_asymptotic(n):
            raise PreAsymptoticError(
                'n = %d is pre-asymptotic; the plan starts at n = %s' %
                (n, self.threshold))
        return self.entries[n]

    def __repr__(self):
        return 'BlockingPlan(c=%r, n=%s, threshold=%s)' % (
            self.c, self.n_values, self.threshold)


def build_plan(norming, c, n_values, tail, grid_step=DEFAULT_GRID_STEP):
    if not 0.0 < c < 1.0:
        raise ValueError('c must lie in (0, 1), got %r' % c)
    n_values = sorted(set(int(n) for n in n_values))
    a = norming.a
    deltas = compute_deltas(tail, n_values[-1], grid_step)
    entries = []
    for n in n_values:
        m = compute_m(a, c, n)
        q = compute_q(deltas, {n: m}, n)
        entries.append(PlanEntry(n, m, q, float(deltas[n - 1]),
                                 float(a(n) / a(m))))
    plan = BlockingPlan(c, entries)
    logger.debug('Built %r', plan)
    return plan


BlockTriple = collections.namedtuple(
    'BlockTriple', ['U', 'V', 'W', 'n', 'residual'])


def decompose_batch(paths, norming, entry):
    """Vectorised decomposition of paths of shape ``(R, N, d)`` with
    N >= n. Returns ``(U, V, W, total, residual)``, the first four of shape
    ``(R, d)`` and the largest relative identity residual."""
    n, m, q = entry.n, entry.m, entry.q
    paths = np.asarray(paths, dtype=float)
    if paths.ndim == 2:
        paths = paths[:, :, None]
    if paths.shape[1] < n:
        raise ValueError('Paths of length %d are shorter than n = %d' %
                         (paths.shape[1], n))
    a_n = float(norming.a(n))
    a_m = float(norming.a(m))
    b_n = np.asarray(norming.b(n), dtype=float)
    b_m = np.asarray(norming.b(m), dtype=float)
    s_m = paths[:, :m].sum(axis=1)
    s_mq = s_m + paths[:, m:m + q].sum(axis=1)
    s_n = s_mq + paths[:, m + q:n].sum(axis=1)
    ratio = a_n / a_m
    U = ratio * (a_m * s_m + b_m)
    V = a_n * (s_mq - s_m)
    W = a_n * (s_n - s_mq) + b_n - ratio * b_m
    total = a_n * s_n + b_n
    scale = np.maximum.reduce([np.abs(U), np.abs(V), np.abs(W),
                               np.abs(total), np.full(total.shape, 1e-300)])
    residual = float(np.max(np.abs(U + V + W - total) / scale))
    if not residual <= IDENTITY_TOLERANCE:
        raise BlockingIdentityError(
            'U + V + W differs from a_n S_n + b_n by %.3e (relative) at '
            'n = %d' % (residual, n))
    return U, V, W, total, residual


def decompose(path, norming, plan, n):
    """Splits a_n S_n + b_n of one path into its three blocks."""
    entry = plan.at(n)
    U, V, W, _, residual = decompose_batch(
        path.values[None, :, :], norming, entry)
    return BlockTriple(U[0], V[0], W[0], n, residual)


def median_split_alpha(u, w):
    """Plug-in strong mixing coefficient between two samples split at
    their medians."""
    return alpha_plugin(u, w, bins=2)


def _upper_order_statistic(values, p):
    """An order statistic a with #{values > a} <= floor((1 - p) R)."""
    ordered = np.sort(np.asarray(values))
    exceed = int(math.floor((1.0 - p) * ordered.size + 1e-9))
    return float(ordered[ordered.size - exceed - 1])


COLUMNS = ('n', 'm_n', 'q_n', 'delta_n', 'ratio', 'metric_name', 'value',
           'analytic_ceiling', 'pass', 'claim')

BlockingRow = collections.namedtuple(
    'BlockingRow', ['n', 'm_n', 'q_n', 'delta_n', 'ratio', 'metric_name',
                    'value', 'analytic_ceiling', 'passed', 'claim'])


class BlockingReport(object):
    def __init__(self, rows, plan):
        self.rows = list(rows)
        self.plan = plan

    @property
    def passed(self):
        return all(row.passed for row in self.rows)

    def failures(self):
        return [row for row in self.rows if not row.passed]

    def as_table(self):
        """Rows as tuples in ``COLUMNS`` order."""
        return [tuple(row) for row in self.rows]

    def metric(self, name, n=None):
        for row in self.rows:
            if row.metric_name == name and (n is None or row.n == n):
                return row
        raise KeyError('No %s row for n = %s' % (name, n))


def verify_blocking(spec, c, n_grid=DEFAULT_N_GRID,
                    replications=DEFAULT_REPLICATIONS, seed=0,
                    epsilon=DEFAULT_EPSILON, grid_step=DEFAULT_GRID_STEP,
                    ks_tolerance=KS_TOLERANCE, threads=1):
    """Monte Carlo verification of the blocking argument for one process.

    The KS rows project onto the first coordinate; coordinates of a
    ``ProcessSpec`` are independent copies.
    """
    norming = processes.norming_for(spec)
    limit = processes.limit_law(spec)
    scaled_limit = stats.norm(0.0, c)
    tail = processes.tail_function(spec, norming, seed)
    plan = build_plan(norming, c, n_grid, tail, grid_step)
    if plan.threshold is None:
        raise PreAsymptoticError(
            'No n in %s reaches m + q < n for c = %r; the grid needs larger n'
            % (plan.n_values, c))
    alpha = processes.alpha_bound_for(
        spec, [plan.entries[n].q + 1 for n in plan.n_values])
    rows = []
    quantiles = []
    cf_grid = default_grid(CF_CHECK_RADIUS, CF_CHECK_SIZE)
    cf_frequencies = required_frequencies([c], cf_grid)

    for n in plan.n_values:
        if plan.is_pre_asymptotic(n):
            logger.warning('Skipping pre-asymptotic n = %d (plan starts at '
                           '%s)', n, plan.threshold)
            continue
        entry = plan.at(n)
        logger.info('Blocking check n=%d m=%d q=%d delta=%.3g', n, entry.m,
                    entry.q, entry.delta)

        def task(start, size, entry=entry):
            paths = processes.simulate_replications(
                spec, entry.n, seed, start, size, stream='blocking')
            return decompose_batch(paths, norming, entry)

        results = workers.run_replications(
            task, replications, threads, label='blocking n=%d' % n)
        U, V, W, total = [np.concatenate([r[i] for r in results])[:, 0]
                          for i in range(4)]
        residual = max(r[4] for r in results)

        def row(name, value, ceiling, passed, claim, entry=entry):
            rows.append(BlockingRow(
                entry.n, entry.m, entry.q, entry.delta, entry.ratio, name,
                float(value), float(ceiling), bool(passed), claim))

        sandwich = entry.ratio <= c and (
            entry.m + 1 >= n or float(norming.a(n) / norming.a(entry.m + 1))
            > c)
        row('ratio', entry.ratio, c, sandwich or entry.m == 1,
            'norming ratio a(n)/a(m) sandwiches c')
        tail_value = float(tail(n, entry.delta))
        row('delta_tail', tail_value, entry.delta,
            tail_value <= entry.delta, 'uniform infinitesimality')
        row('identity_residual', residual, IDENTITY_TOLERANCE,
            residual <= IDENTITY_TOLERANCE, 'three-block identity')

        exceed = float(np.mean(np.abs(V) > epsilon))
        if math.sqrt(entry.delta) < epsilon:
            ceiling = min(1.0, entry.q * entry.delta)
        else:
            ceiling = 1.0
        error = math.sqrt(exceed * (1.0 - exceed) / replications)
        row('v_exceedance', exceed, ceiling, exceed - 3.0 * error <= ceiling,
            'separator block vanishes')

        u_ks = ks_distance(Sample(U), scaled_limit.cdf)
        row('u_ks', u_ks, ks_tolerance, u_ks <= ks_tolerance,
            'first block converges to the scaled limit')
        sum_ks = ks_distance(Sample(total), limit.cdf)
        row('sum_ks', sum_ks, ks_tolerance, sum_ks <= ks_tolerance,
            'normalised sums converge to the limit')
        uw_ks = ks_distance(Sample(U + W), limit.cdf)
        row('uw_ks', uw_ks, ks_tolerance, uw_ks <= ks_tolerance,
            'outer blocks converge to the limit')
        if spec.family == 'iid':
            remainder = stats.norm(0.0, math.sqrt(1.0 - c ** 2))
            w_ks = ks_distance(Sample(W), remainder.cdf)
            row('w_ks', w_ks, ks_tolerance, w_ks <= ks_tolerance,
                'last block converges to the cofactor')

        w_quantile = _upper_order_statistic(np.abs(W), 0.99)
        tight = (_upper_order_statistic(np.abs(total), 0.995) +
                 _upper_order_statistic(np.abs(U + V), 0.995))
        quantiles.append(w_quantile)
        row('w_q99', w_quantile, tight, w_quantile <= tight,
            'last block is tight')

        bound = alpha[entry.q + 1]
        row('alpha_bound', bound, 0.25, bound <= 0.25,
            'mixing across the separator')
        split = median_split_alpha(U, W)
        allowance = bound + 3.0 * math.sqrt(3.0 / 16.0 / replications)
        row('median_split_alpha', split, allowance, split <= allowance,
            'outer blocks are nearly independent')

        phi_uw = empirical_cf(Sample(U + W), CONVOLUTION_GRID).values
        phi_u = empirical_cf(Sample(U), CONVOLUTION_GRID).values
        phi_w = empirical_cf(Sample(W), CONVOLUTION_GRID).values
        gap = float(np.max(np.abs(phi_uw - phi_u * phi_w)))
        allowance = 5.0 / math.sqrt(replications)
        row('cf_convolution', gap, allowance, gap <= allowance,
            'limit factorises as a convolution')

        report = selfdecomp_test(
            empirical_cf(Sample(total), cf_frequencies), [c],
            grid_radius=CF_CHECK_RADIUS, grid_size=CF_CHECK_SIZE)
        worst = report.rows[0].worst_violation
        row('selfdecomp_psd', worst if worst is not None else float('nan'),
            -report.tolerance, report.verdict != FAIL,
            'limit law is selfdecomposable')

    if quantiles:
        last = plan.entries[plan.n_values[-1]]
        spread = max(quantiles) / min(quantiles)
        rows.append(BlockingRow(
            last.n, last.m, last.q, last.delta, last.ratio, 'w_tightness',
            spread, TIGHTNESS_SPREAD, spread <= TIGHTNESS_SPREAD,
            'last block quantiles stay bounded'))
    return BlockingReport(rows, plan)
