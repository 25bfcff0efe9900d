"""Strong mixing coefficients of finite state Markov chains.

Three kinds of numbers come out of this module and every profile says
which one it holds:

``exact-window``
    the exact coefficient between a finite past window and a finite future
    window. This is a LOWER bound for the coefficient over the whole past
    and future.
``analytic-bound``
    an UPPER bound valid for the untruncated coefficient.
``plug-in-estimate``
    a Monte Carlo estimate from discretised paths.
"""
from __future__ import absolute_import

import collections
import logging

import numpy as np
import six

from mixmonster.probability import (
    FiniteJointDistribution, alpha_exact, ENUMERATION_LIMIT)

logger = logging.getLogger("mixmonster")

STOCHASTIC_TOLERANCE = 1e-12
DOEBLIN_MAX_POWER = 8
J_SCAN_EXTRA = 10
TRIVIAL_BOUND = 0.25

EXACT_WINDOW = 'exact-window'
ANALYTIC_BOUND = 'analytic-bound'
PLUG_IN_ESTIMATE = 'plug-in-estimate'
PROFILE_KINDS = (EXACT_WINDOW, ANALYTIC_BOUND, PLUG_IN_ESTIMATE)

# Which side of the true coefficient each kind sits on.
KIND_SIDES = {
    EXACT_WINDOW: 'lower bound (window truncated)',
    ANALYTIC_BOUND: 'upper bound',
    PLUG_IN_ESTIMATE: 'estimate (no bound)',
}


class InvalidChainError(Exception):
    pass


class WindowTooLargeError(Exception):
    pass


class MarkovChainSpec(object):
    """A finite state, time homogeneous Markov chain X_1, X_2, ...

    :param states: real labels of the states
    :param transition: row stochastic matrix
    :param initial: law of X_1; defaults to the stationary law
    """
    def __init__(self, states, transition, initial=None):
        transition = np.array(transition, dtype=float)
        states = np.array(states, dtype=float).ravel()
        size = states.size
        if size == 0:
            raise InvalidChainError('A chain needs at least one state')
        if transition.shape != (size, size):
            raise InvalidChainError(
                'Transition matrix has shape %s for %d states' %
                (transition.shape, size))
        if np.any(transition < 0) or not np.all(np.isfinite(transition)):
            raise InvalidChainError('Transition matrix has invalid entries')
        row_error = np.max(np.abs(transition.sum(axis=1) - 1.0))
        if row_error > STOCHASTIC_TOLERANCE:
            raise InvalidChainError(
                'Transition matrix is not stochastic: a row sum is off by '
                '%.3e' % row_error)
        self.states = states
        self.transition = transition
        if initial is None:
            initial = self.stationary()
        initial = np.array(initial, dtype=float).ravel()
        if initial.shape != (size,) or np.any(initial < 0):
            raise InvalidChainError('Initial law is not a probability vector')
        if abs(initial.sum() - 1.0) > STOCHASTIC_TOLERANCE:
            raise InvalidChainError(
                'Initial law sums to %.15g, not 1' % initial.sum())
        self.initial = initial
        for array in (self.states, self.transition, self.initial):
            array.setflags(write=False)

    @property
    def size(self):
        return self.states.size

    def stationary(self):
        """The stationary law, solved from pi (P - I) = 0, sum(pi) = 1.

        Chains with several closed classes have many stationary laws; the
        least squares solution is returned for those.
        """
        size = self.size
        system = np.vstack([self.transition.T - np.eye(size),
                            np.ones((1, size))])
        target = np.zeros(size + 1)
        target[-1] = 1.0
        pi = np.linalg.lstsq(system, target, rcond=None)[0]
        pi = np.clip(pi, 0.0, None)
        return pi / pi.sum()

    def marginal(self, j):
        """Law of X_j (j >= 1)."""
        return self.initial.dot(np.linalg.matrix_power(self.transition, j - 1))

    def relabel(self, permutation):
        """The same chain with its states listed in another order."""
        permutation = np.asarray(permutation)
        return MarkovChainSpec(
            self.states[permutation],
            self.transition[np.ix_(permutation, permutation)],
            self.initial[permutation])

    def sample(self, rng, length, replications=1):
        """Samples ``replications`` state index paths of ``length`` steps.

        Returns an integer array of shape ``(replications, length)``.
        """
        cumulative = np.cumsum(self.transition, axis=1)
        cumulative[:, -1] = 1.0
        start = np.cumsum(self.initial)
        start[-1] = 1.0
        uniforms = rng.random((replications, length))
        paths = np.empty((replications, length), dtype=np.intp)
        paths[:, 0] = np.searchsorted(start, uniforms[:, 0], side='right')
        for k in six.moves.range(1, length):
            rows = cumulative[paths[:, k - 1]]
            paths[:, k] = (rows <= uniforms[:, k][:, None]).sum(axis=1)
        return paths

    def __repr__(self):
        return 'MarkovChainSpec(states=%d)' % self.size


class AlphaProfile(object):
    """A sequence of (n, alpha) pairs of one kind, plus the metadata that
    says how it was obtained."""
    def __init__(self, values, kind, metadata=None):
        if kind not in PROFILE_KINDS:
            raise ValueError('Unknown profile kind %r' % kind)
        self.values = [(int(n), float(alpha)) for n, alpha in values]
        self.kind = kind
        self.metadata = dict(metadata or {})
        self.metadata.setdefault('side', KIND_SIDES[kind])

    def as_dict(self):
        return dict(self.values)

    def __getitem__(self, n):
        return self.as_dict()[n]

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __repr__(self):
        return 'AlphaProfile(kind=%s, %s)' % (self.kind, self.values)


def _window_paths(chain, length, start):
    """State index paths of the given length that have positive probability
    when the first state is drawn from ``start``, as an array of shape
    ``(paths, length)``, together with the product of transition
    probabilities along each path."""
    paths = np.nonzero(np.asarray(start) > 0)[0].reshape(-1, 1)
    weights = np.ones(paths.shape[0])
    following = np.arange(chain.size)
    for _ in six.moves.range(1, length):
        paths = np.hstack([np.repeat(paths, chain.size, axis=0),
                           np.tile(following, paths.shape[0])[:, None]])
        weights = (np.repeat(weights, chain.size) *
                   chain.transition[paths[:, -2], paths[:, -1]])
        reachable = weights > 0
        paths = paths[reachable]
        weights = weights[reachable]
    return paths, weights


def window_joint(chain, j, n, past_window, future_window):
    """The exact joint law of (X_k, j - past_window < k <= j) and
    (X_k, j + n <= k < j + n + future_window), built by matrix propagation.
    The past window is clipped at index 1. Only paths of positive
    probability become atoms, so the enumeration limit counts those.
    """
    if j < 1 or n < 1 or past_window < 1 or future_window < 1:
        raise WindowTooLargeError(
            'Window indices must be positive: j=%d n=%d windows=(%d, %d)' %
            (j, n, past_window, future_window))
    past_length = min(past_window, j)
    first = j - past_length + 1
    start = chain.marginal(first)
    past, past_weights = _window_paths(chain, past_length, start)
    future, future_weights = _window_paths(chain, future_window,
                                           chain.marginal(j + n))
    smaller = min(past.shape[0], future.shape[0])
    if smaller > ENUMERATION_LIMIT:
        raise WindowTooLargeError(
            'Windows (%d, %d) over %d states give %d atoms on the enumerated '
            'side, the limit is %d' % (past_length, future_window, chain.size,
                                       smaller, ENUMERATION_LIMIT))
    past_mass = start[past[:, 0]] * past_weights
    bridge = np.linalg.matrix_power(chain.transition, n)
    pmf = (past_mass[:, None] *
           bridge[past[:, -1]][:, future[:, 0]] *
           future_weights[None, :])
    pmf = pmf / pmf.sum()
    return FiniteJointDistribution(
        pmf, chain.states[past], chain.states[future], tol=1e-9)


def alpha_window(chain, j, n, past_window=1, future_window=1):
    """Exact dependence coefficient between the past window ending at j and
    the future window starting at j + n. A lower bound for the coefficient
    over the full past and future.
    """
    return alpha_exact(window_joint(chain, j, n, past_window, future_window))


def alpha_sequence(chain, n_list, past_window=1, future_window=1,
                   j_values=None):
    """Window-truncated coefficient for each n in ``n_list``, maximised over
    the scanned j (default 1 .. past_window + 10).
    """
    if j_values is None:
        j_values = range(1, past_window + J_SCAN_EXTRA + 1)
    j_values = list(j_values)
    values = []
    for n in n_list:
        alpha = max(alpha_window(chain, j, n, past_window, future_window)
                    for j in j_values)
        values.append((n, alpha))
    return AlphaProfile(values, EXACT_WINDOW, {
        'past_window': past_window,
        'future_window': future_window,
        'j_values': [min(j_values), max(j_values)],
    })


def dobrushin_coefficient(transition):
    """Largest total variation distance between two rows."""
    transition = np.asarray(transition, dtype=float)
    gaps = np.abs(transition[:, None, :] - transition[None, :, :]).sum(axis=2)
    return 0.5 * float(np.max(gaps))


def doeblin_minorization(chain, max_power=DOEBLIN_MAX_POWER):
    """Finds the smallest power r <= max_power whose transition matrix has a
    strictly positive column. Returns ``(r, beta)`` with beta the
    minorisation mass sum_y min_x P^r(x, y), or ``(None, 0.0)``.
    """
    power = np.eye(chain.size)
    for r in six.moves.range(1, max_power + 1):
        power = power.dot(chain.transition)
        column_minimum = power.min(axis=0)
        if np.any(column_minimum > 0):
            return r, float(min(1.0, column_minimum.sum()))
    return None, 0.0


def alpha_bound_geometric(chain, n_max=20, max_power=DOEBLIN_MAX_POWER):
    """Upper bound alpha(n) <= min(1/4, C rho**n) from a Doeblin condition.

    With r the minorising power and beta its mass, the Dobrushin
    coefficient of P**n is at most (1 - beta)**floor(n / r), and for a
    Markov chain alpha(n) is at most a quarter of it. Hence
    rho = (1 - beta)**(1/r) and C = rho**-(r - 1) / 4. Without a
    minorisation the trivial bound 1/4 is returned.
    """
    r, beta = doeblin_minorization(chain, max_power)
    n_values = range(1, n_max + 1)
    if r is None:
        logger.debug('No Doeblin minorisation up to power %d', max_power)
        return AlphaProfile(
            [(n, TRIVIAL_BOUND) for n in n_values], ANALYTIC_BOUND,
            {'rho': None, 'C': None, 'power': None,
             'formula': 'alpha(n) <= 1/4 (no decay certificate)'})
    rho = (1.0 - beta) ** (1.0 / r)
    constant = TRIVIAL_BOUND / rho ** (r - 1) if rho > 0 else TRIVIAL_BOUND
    values = [(n, min(TRIVIAL_BOUND, constant * rho ** n)) for n in n_values]
    return AlphaProfile(values, ANALYTIC_BOUND, {
        'rho': rho, 'C': constant, 'power': r, 'beta': beta,
        'formula': 'alpha(n) <= min(1/4, C * rho**n), '
                   'rho = (1 - beta)**(1/r), C = rho**-(r-1) / 4',
    })


def alpha_plugin(x, z, bins=2):
    """Plug-in coefficient between two real samples, each discretised into
    ``bins`` quantile classes."""
    return alpha_exact(FiniteJointDistribution.from_pairs(
        quantile_classes(x, bins), quantile_classes(z, bins)))


def quantile_classes(values, bins):
    values = np.asarray(values, dtype=float)
    if bins < 2:
        raise ValueError('Need at least two classes, got %d' % bins)
    labels, classes = np.unique(values, return_inverse=True)
    if labels.size <= bins:
        # Few distinct values (a chain's states) are their own classes.
        return classes
    edges = np.quantile(values, np.linspace(0, 1, bins + 1)[1:-1])
    return np.searchsorted(edges, values, side='right')


def alpha_plugin_profile(values, lags, bins=2):
    """Plug-in coefficient between X_k and X_{k + lag} along one long path,
    for each lag."""
    values = np.asarray(values, dtype=float).ravel()
    result = []
    for lag in lags:
        if lag >= values.size:
            raise ValueError(
                'Lag %d needs a path longer than %d' % (lag, values.size))
        result.append((lag, alpha_plugin(values[:-lag], values[lag:], bins)))
    return AlphaProfile(result, PLUG_IN_ESTIMATE, {'bins': bins})


ProfileRow = collections.namedtuple(
    'ProfileRow', ['n', 'kind', 'alpha', 'side'])


def profile_rows(*profiles):
    """Flattens profiles into rows for the CSV report."""
    rows = []
    for profile in profiles:
        for n, alpha in profile:
            rows.append(ProfileRow(n, profile.kind, alpha,
                                   profile.metadata['side']))
    return rows
