"""Generators of strongly mixing sequences with known limit laws.

Each family has a closed form long-run variance v and mean, so the norming
a_n = 1 / sqrt(n v), b_n = -a_n n mean makes a_n S_n + b_n converge to the
standard normal law.

Families:

``iid``
    independent draws from an innovation law
``ar1``
    X_k = phi X_{k-1} + e_k started from its stationary law
``ma_q``
    X_k = sum_i weights[i] e_{k-i}, started with q pre-samples
``markov_function``
    X_k = values[state_k] for a finite state Markov chain
``constant``
    X_k = value (degenerate; norming is refused)
"""
from __future__ import absolute_import

import collections
import csv
import hashlib
import json
import logging
import math

import numpy as np
import six
from scipy import signal, stats

from mixmonster import streams
from mixmonster.mixing import (
    ANALYTIC_BOUND, AlphaProfile, MarkovChainSpec, TRIVIAL_BOUND,
    alpha_bound_geometric)

logger = logging.getLogger("mixmonster")

FAMILIES = ('iid', 'ar1', 'ma_q', 'markov_function', 'constant')
LAWS = ('normal', 'uniform', 'exponential', 'rademacher')

# Non-Gaussian ar1 paths start after this many steps of burn-in from the
# innovation mean; |phi|**burn_in is below double precision.
_BURN_IN_PRECISION = 1e-17
_MAX_BURN_IN = 10000


class InvalidProcessError(Exception):
    pass


class DegenerateProcessError(Exception):
    pass


class Innovation(object):
    """A one dimensional innovation law with known moments.

    :param str law: one of ``normal``, ``uniform``, ``exponential``,
        ``rademacher``
    :param float mean: the mean of the law
    :param float scale: standard deviation (normal), half width (uniform),
        scale (exponential, mean shifted) or jump size (rademacher)
    """
    def __init__(self, law='normal', mean=0.0, scale=1.0):
        if law not in LAWS:
            raise InvalidProcessError('Unknown innovation law %r' % law)
        if not scale >= 0:
            raise InvalidProcessError(
                'Innovation scale must be non-negative, got %r' % scale)
        self.law = law
        self.mean = float(mean)
        self.scale = float(scale)

    @property
    def variance(self):
        if self.law == 'normal':
            return self.scale ** 2
        elif self.law == 'uniform':
            return self.scale ** 2 / 3.0
        elif self.law == 'exponential':
            return self.scale ** 2
        return self.scale ** 2

    @property
    def is_gaussian(self):
        return self.law == 'normal'

    def draw(self, rng, size):
        if self.law == 'normal':
            return rng.normal(self.mean, self.scale, size)
        elif self.law == 'uniform':
            return rng.uniform(self.mean - self.scale, self.mean + self.scale,
                               size)
        elif self.law == 'exponential':
            return self.mean - self.scale + rng.exponential(self.scale, size)
        return self.mean + self.scale * (2.0 * rng.integers(0, 2, size) - 1.0)

    def frozen(self):
        """The law as a frozen ``scipy.stats`` distribution (continuous
        laws only)."""
        if self.law == 'normal':
            return stats.norm(self.mean, self.scale)
        elif self.law == 'uniform':
            return stats.uniform(self.mean - self.scale, 2 * self.scale)
        elif self.law == 'exponential':
            return stats.expon(self.mean - self.scale, self.scale)
        return None

    def as_dict(self):
        return {'law': self.law, 'mean': self.mean, 'scale': self.scale}


class ProcessSpec(object):
    """A generative model of a real (or R^d valued, coordinatewise
    independent) sequence X_1, X_2, ...
    """
    def __init__(self, family, innovation=None, phi=None, weights=None,
                 chain=None, values=None, value=0.0, dimension=1):
        if family not in FAMILIES:
            raise InvalidProcessError('Unknown process family %r' % family)
        if int(dimension) < 1:
            raise InvalidProcessError(
                'Dimension must be positive, got %r' % dimension)
        self.family = family
        self.dimension = int(dimension)
        self.innovation = innovation or Innovation()
        self.phi = None
        self.weights = None
        self.chain = None
        self.values = None
        self.value = float(value)
        if family == 'ar1':
            if phi is None or not -1.0 < float(phi) < 1.0:
                raise InvalidProcessError(
                    'ar1 needs |phi| < 1, got %r' % (phi,))
            self.phi = float(phi)
        elif family == 'ma_q':
            weights = np.array(weights if weights is not None else [1.0],
                               dtype=float).ravel()
            if weights.size == 0 or not np.all(np.isfinite(weights)):
                raise InvalidProcessError(
                    'ma_q needs a finite, non-empty list of weights')
            self.weights = weights
        elif family == 'markov_function':
            if not isinstance(chain, MarkovChainSpec):
                raise InvalidProcessError(
                    'markov_function needs a MarkovChainSpec')
            self.chain = chain
            values = chain.states if values is None else values
            values = np.array(values, dtype=float).ravel()
            if values.size != chain.size:
                raise InvalidProcessError(
                    'markov_function maps %d states but got %d values' %
                    (chain.size, values.size))
            self.values = values

    @property
    def q(self):
        return 0 if self.weights is None else self.weights.size - 1

    @property
    def is_stationary(self):
        if self.family == 'markov_function':
            return np.allclose(self.chain.initial.dot(self.chain.transition),
                               self.chain.initial, atol=1e-12)
        return True

    def as_dict(self):
        result = {'family': self.family, 'dimension': self.dimension}
        if self.family in ('iid', 'ar1', 'ma_q'):
            result['innovation'] = self.innovation.as_dict()
        if self.family == 'ar1':
            result['phi'] = self.phi
        elif self.family == 'ma_q':
            result['weights'] = self.weights.tolist()
        elif self.family == 'markov_function':
            result['chain'] = {
                'states': self.chain.states.tolist(),
                'transition': self.chain.transition.tolist(),
                'initial': self.chain.initial.tolist(),
            }
            result['values'] = self.values.tolist()
        elif self.family == 'constant':
            result['value'] = self.value
        return result

    def spec_hash(self):
        canonical = json.dumps(self.as_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:16]

    def __repr__(self):
        return 'ProcessSpec(%s)' % self.family


class SamplePath(object):
    """One realisation X_1..X_N, shape ``(N, d)``, read only."""
    def __init__(self, values, spec_hash, seed):
        values = np.array(values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        values.setflags(write=False)
        self.values = values
        self.spec_hash = spec_hash
        self.seed = seed

    def __len__(self):
        return self.values.shape[0]

    def partial_sums(self):
        """S_0..S_N with S_0 = 0, shape ``(N + 1, d)``."""
        sums = np.zeros((len(self) + 1, self.values.shape[1]))
        np.cumsum(self.values, axis=0, out=sums[1:])
        return sums

    def __repr__(self):
        return 'SamplePath(N=%d, spec=%s, seed=%r)' % (
            len(self), self.spec_hash, self.seed)


def _simulate(spec, rng, length, count):
    """Draws ``count`` independent real paths of ``length`` steps, shape
    ``(count, length)``."""
    innovation = spec.innovation
    if spec.family == 'constant':
        return np.full((count, length), spec.value)
    elif spec.family == 'iid':
        return innovation.draw(rng, (count, length))
    elif spec.family == 'ar1':
        phi = spec.phi
        if innovation.is_gaussian:
            start = rng.normal(
                innovation.mean / (1.0 - phi),
                innovation.scale / math.sqrt(1.0 - phi ** 2), count)
            noise = innovation.draw(rng, (count, length))
        else:
            burn_in = _burn_in(phi)
            noise = innovation.draw(rng, (count, length + burn_in))
            start = np.full(count, innovation.mean / (1.0 - phi))
        # X_0 is the start value; X_1 = phi X_0 + e_1 is stationary too.
        paths = signal.lfilter([1.0], [1.0, -phi], noise, axis=1,
                               zi=phi * start[:, None])[0]
        return paths[:, paths.shape[1] - length:]
    elif spec.family == 'ma_q':
        noise = innovation.draw(rng, (count, length + spec.q))
        return signal.lfilter(spec.weights, [1.0], noise, axis=1)[:, spec.q:]
    states = spec.chain.sample(rng, length, count)
    return spec.values[states]


def _burn_in(phi):
    if phi == 0:
        return 0
    steps = int(math.ceil(math.log(_BURN_IN_PRECISION) / math.log(abs(phi))))
    return min(_MAX_BURN_IN, steps)


def simulate_batch(spec, rng, length, count):
    """``count`` paths of the spec from one generator, shape
    ``(count, length, d)``; the d coordinates are independent copies."""
    coordinates = [_simulate(spec, rng, length, count)
                   for _ in six.moves.range(spec.dimension)]
    return np.stack(coordinates, axis=-1)


def simulate_replications(spec, N, seed, start, size, stream='paths'):
    """Replications ``start .. start + size - 1`` of length N, shape
    ``(size, N, d)``. Replication r always uses the stream
    ``(seed, stream, N, r)``, so the result does not depend on how the
    replications were split into batches."""
    result = np.empty((size, N, spec.dimension))
    for offset in six.moves.range(size):
        rng = streams.make_rng(seed, stream, N, start + offset)
        result[offset] = simulate_batch(spec, rng, N, 1)[0]
    return result


def generate_path(spec, N, seed, replication=0, stream='paths'):
    """A single reproducible path X_1..X_N.

    Identical (spec, N, seed, replication) give bit-identical paths.
    """
    if N < 1:
        raise InvalidProcessError('Path length must be positive, got %r' % N)
    values = simulate_replications(spec, N, seed, replication, 1, stream)[0]
    return SamplePath(values, spec.spec_hash(), seed)


def generate_paths(spec, N, replications, seed, stream='paths'):
    """Yields ``(start, paths)`` blocks covering ``replications`` paths;
    replication r agrees with ``generate_path(..., replication=r)``."""
    if N < 1:
        raise InvalidProcessError('Path length must be positive, got %r' % N)
    for _, start, size in streams.batches(replications):
        yield start, simulate_replications(spec, N, seed, start, size, stream)


def export_path_csv(path, filename):
    """Writes a path as CSV with an index column and one value column per
    coordinate."""
    d = path.values.shape[1]
    header = ['index'] + (['value'] if d == 1 else
                          ['value_%d' % (i + 1) for i in range(d)])
    with open(filename, 'w') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for index, row in enumerate(path.values, 1):
            writer.writerow([index] + ['%.16e' % value for value in row])


NormingSequences = collections.namedtuple(
    'NormingSequences',
    ['a', 'b', 'provenance', 'long_run_variance', 'mean'])


def stationary_mean(spec):
    innovation = spec.innovation
    if spec.family == 'iid':
        return innovation.mean
    elif spec.family == 'ar1':
        return innovation.mean / (1.0 - spec.phi)
    elif spec.family == 'ma_q':
        return innovation.mean * spec.weights.sum()
    elif spec.family == 'markov_function':
        return float(spec.chain.stationary().dot(spec.values))
    return spec.value


def _fundamental(chain):
    pi = chain.stationary()
    size = chain.size
    return np.linalg.inv(np.eye(size) - chain.transition +
                         np.outer(np.ones(size), pi)), pi


def long_run_variance(spec):
    """lim Var(S_n) / n in closed form, per coordinate."""
    variance = spec.innovation.variance
    if spec.family == 'iid':
        return variance
    elif spec.family == 'ar1':
        return variance / (1.0 - spec.phi) ** 2
    elif spec.family == 'ma_q':
        return spec.weights.sum() ** 2 * variance
    elif spec.family == 'markov_function':
        fundamental, pi = _fundamental(spec.chain)
        centred = spec.values - pi.dot(spec.values)
        weighted = pi * centred
        return float(2.0 * weighted.dot(fundamental.dot(centred)) -
                     weighted.dot(centred))
    return 0.0


def expected_partial_sum(spec, n):
    """E[S_n] exactly, including non-stationary chain starts."""
    if spec.family != 'markov_function' or spec.is_stationary:
        return n * stationary_mean(spec)
    chain = spec.chain
    fundamental, pi = _fundamental(chain)
    centred = spec.values - pi.dot(spec.values)
    power = np.linalg.matrix_power(chain.transition, int(n))
    transient = chain.initial.dot(fundamental.dot(
        centred - power.dot(centred)))
    return n * pi.dot(spec.values) + float(transient)


def partial_sum_variance(spec, n):
    """Var(S_n) exactly for stationary families."""
    n = int(n)
    variance = spec.innovation.variance
    if spec.family == 'iid':
        return n * variance
    elif spec.family == 'ar1':
        phi = spec.phi
        gamma0 = variance / (1.0 - phi ** 2)
        lags = np.arange(1, n)
        return float(n * gamma0 +
                     2.0 * gamma0 * np.sum((n - lags) * phi ** lags))
    elif spec.family == 'ma_q':
        weights = spec.weights
        q = spec.q
        autocovariance = [
            variance * weights[:weights.size - h].dot(weights[h:])
            for h in range(q + 1)]
        total = n * autocovariance[0]
        for h in six.moves.range(1, min(q, n - 1) + 1):
            total += 2.0 * (n - h) * autocovariance[h]
        return float(total)
    elif spec.family == 'markov_function':
        chain = spec.chain
        pi = chain.stationary()
        centred = spec.values - pi.dot(spec.values)
        total = n * pi.dot(centred ** 2)
        propagated = centred.copy()
        for h in six.moves.range(1, n):
            propagated = chain.transition.dot(propagated)
            total += 2.0 * (n - h) * (pi * centred).dot(propagated)
        return float(total)
    return 0.0


def norming_for(spec):
    """The norming sequences a(n) = 1 / sqrt(n v), b(n) = -a(n) E[S_n].

    Both functions accept scalars or integer arrays; b returns one value per
    coordinate.
    """
    if spec.family == 'constant':
        raise DegenerateProcessError(
            'A constant sequence has zero long-run variance; its normalised '
            'sums have no non-degenerate limit')
    v = long_run_variance(spec)
    if not v > 1e-14:
        raise DegenerateProcessError(
            'Long-run variance of the %s spec is %.3e; the limit would be '
            'degenerate' % (spec.family, v))
    d = spec.dimension
    provenance = {
        'iid': 'v = Var(X)',
        'ar1': 'v = sigma^2 / (1 - phi)^2',
        'ma_q': 'v = (sum of weights)^2 sigma^2',
        'markov_function': 'v = 2 <f, Z f>_pi - <f, f>_pi, '
                           'Z = (I - P + 1 pi)^-1',
    }[spec.family]
    mean = stationary_mean(spec)

    def a(n):
        return 1.0 / np.sqrt(np.asarray(n, dtype=float) * v)

    def b(n):
        n = np.asarray(n)
        if n.ndim == 0:
            return -a(n) * expected_partial_sum(spec, int(n)) * np.ones(d)
        totals = np.array([expected_partial_sum(spec, int(k)) for k in n])
        return (-a(n) * totals)[:, None] * np.ones(d)

    return NormingSequences(a, b, provenance + ', a(n) = 1/sqrt(n v), '
                            'b(n) = -a(n) E[S_n]', v, mean)


def limit_law(spec):
    """The weak limit of a_n S_n + b_n under ``norming_for``: standard
    normal (coordinatewise) for every admissible family."""
    norming_for(spec)
    return stats.norm(0.0, 1.0)


NormingCheck = collections.namedtuple(
    'NormingCheck',
    ['n_max', 'decay', 'ratio_gap', 'drift', 'decay_pass', 'ratio_pass',
     'drift_pass', 'passed'])


def validate_norming(norming, n_max, decay_factor=0.1, ratio_tolerance=0.01,
                     drift_tolerance=0.01):
    """Numerical check that a_n -> 0, a_{n+1}/a_n -> 1 and
    b_{n+1} - b_n a_{n+1}/a_n -> 0, read off at the tail n = n_max.
    """
    if n_max < 10:
        raise ValueError('n_max must be at least 10, got %d' % n_max)
    a = norming.a
    b = norming.b
    a_tail = float(a(n_max))
    a_next = float(a(n_max + 1))
    decay = a_tail / float(a(1))
    ratio = a_next / a_tail
    drift = float(np.max(np.abs(np.asarray(b(n_max + 1)) -
                                np.asarray(b(n_max)) * ratio)))
    decay_pass = decay < decay_factor
    ratio_pass = abs(ratio - 1.0) < ratio_tolerance
    drift_pass = drift < drift_tolerance
    return NormingCheck(n_max, decay, abs(ratio - 1.0), drift, decay_pass,
                        ratio_pass, drift_pass,
                        decay_pass and ratio_pass and drift_pass)


def marginal_law(spec):
    """The stationary one-dimensional marginal law of X_k as a frozen
    ``scipy.stats`` distribution, when it has a closed form."""
    innovation = spec.innovation
    if spec.family == 'iid':
        return innovation.frozen()
    if not innovation.is_gaussian:
        return None
    if spec.family == 'ar1':
        return stats.norm(stationary_mean(spec),
                          innovation.scale / math.sqrt(1.0 - spec.phi ** 2))
    elif spec.family == 'ma_q':
        return stats.norm(stationary_mean(spec),
                          innovation.scale * np.linalg.norm(spec.weights))
    return None


def tail_function(spec, norming, seed=0, mc_size=200000):
    """The infinitesimality tail (n, delta) -> max_k P(a(n) |X_k| >= delta),
    vectorised over delta.

    Closed form for coordinate-1 Gaussian (and other continuous iid)
    families; for finite state chains the indicator bound
    1{a(n) max|f| >= delta}; otherwise a Monte Carlo estimate with its
    precision margin added, so the tail is never under-stated.
    """
    a = norming.a
    law = marginal_law(spec)
    if spec.family == 'constant':
        value = abs(spec.value) * math.sqrt(spec.dimension)

        def tail(n, delta):
            return (float(a(n)) * value >= np.asarray(delta)).astype(float)
        return tail
    if spec.dimension == 1 and law is not None:
        def tail(n, delta):
            threshold = np.asarray(delta, dtype=float) / float(a(n))
            return law.sf(threshold) + law.cdf(-threshold)
        return tail
    if spec.family == 'markov_function':
        largest = float(np.max(np.abs(spec.values))) * math.sqrt(
            spec.dimension)

        def tail(n, delta):
            return (float(a(n)) * largest >=
                    np.asarray(delta, dtype=float)).astype(float)
        return tail
    rng = streams.make_rng(seed, 'tail')
    draws = simulate_batch(spec, rng, 1, mc_size)[:, 0, :]
    norms = np.sort(np.linalg.norm(draws, axis=1))

    def tail(n, delta):
        threshold = np.asarray(delta, dtype=float) / float(a(n))
        p = 1.0 - np.searchsorted(norms, threshold, side='left') / float(
            norms.size)
        margin = 3.0 * np.sqrt(p * (1.0 - p) / norms.size) + 1.0 / norms.size
        return np.minimum(1.0, p + margin)
    return tail


def alpha_bound_for(spec, n_values):
    """Analytic upper bound on alpha(X; n) for each n.

    iid: 0. ma_q: 0 beyond lag q. Gaussian ar1: |phi|**n / 4 (the maximal
    correlation of a Gaussian sequence dominates 4 alpha). markov_function:
    the Doeblin bound. Anything else: 1/4.
    """
    n_values = [int(n) for n in n_values]
    if spec.family in ('iid', 'constant'):
        values = [(n, 0.0) for n in n_values]
        formula = 'independent: alpha(n) = 0'
    elif spec.family == 'ma_q':
        values = [(n, 0.0 if n > spec.q else TRIVIAL_BOUND)
                  for n in n_values]
        formula = 'q-dependent: alpha(n) = 0 for n > q'
    elif spec.family == 'ar1' and spec.innovation.is_gaussian:
        values = [(n, min(TRIVIAL_BOUND, abs(spec.phi) ** n / 4.0))
                  for n in n_values]
        formula = 'Gaussian: alpha(n) <= |phi|^n / 4'
    elif spec.family == 'markov_function':
        geometric = alpha_bound_geometric(spec.chain, n_max=max(n_values))
        values = [(n, geometric[n]) for n in n_values]
        formula = geometric.metadata['formula']
    else:
        values = [(n, TRIVIAL_BOUND) for n in n_values]
        formula = 'no certificate: alpha(n) <= 1/4'
    return AlphaProfile(values, ANALYTIC_BOUND, {'formula': formula})


def spec_from_dict(document):
    """Builds a ProcessSpec from its JSON form (see ``ProcessSpec.as_dict``).
    Keys are assumed validated by the caller."""
    document = dict(document)
    family = document.pop('family')
    innovation = document.pop('innovation', None)
    if innovation is not None:
        innovation = Innovation(**innovation)
    chain = document.pop('chain', None)
    if chain is not None:
        chain = MarkovChainSpec(**chain)
    return ProcessSpec(family, innovation=innovation, chain=chain,
                       **dict((str(k), v) for k, v in six.iteritems(document)))
