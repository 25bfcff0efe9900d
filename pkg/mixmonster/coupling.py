"""Couplings of weakly dependent variables on finite spaces.

Given (X, Z) with strong mixing coefficient alpha and an epsilon-net of N
points covering all but delta of the mass of X, there is a Y independent
of Z with the law of X and

    P(|X - Y| > 2 epsilon) <= delta + 4 sqrt(N) alpha.

``solve_coupling`` finds the best such Y by linear programming over the
joint law of (X, Z, Y) and checks the inequality. The sum experiment
checks the consequence that weakly dependent summands converge to the
convolution of their limits.
"""
from __future__ import absolute_import

import collections
import logging
import math

import numpy as np
import six
from scipy import optimize, sparse, stats

from mixmonster import processes, streams, workers
from mixmonster.mixing import AlphaProfile, ANALYTIC_BOUND, TRIVIAL_BOUND
from mixmonster.probability import (
    FiniteJointDistribution, Sample, alpha_exact, ks_distance)

logger = logging.getLogger("mixmonster")

VARIABLE_LIMIT = 8000
RESIDUAL_TOLERANCE = 1e-9
BOUND_SLACK = 1e-12
LP_METHOD = 'highs-ds'

CONTROL_TOLERANCE = 0.05
KS_TOLERANCE = 0.02
ALPHA_CUTOFF = 0.05
SUM_MODES = ('independent', 'lagged', 'identical')

SUITE_FIELDS = ('case_id', 'objective', 'bound', 'alpha', 'N', 'delta',
                'residual_marginal', 'residual_independence', 'pass', 'claim')

SUITE_CLAIM = 'coupling error within delta + 4 sqrt(N) alpha'
SUM_CLAIMS = {
    'independent': 'independent sums converge to the convolution',
    'lagged': 'separated blocks of one path converge to the convolution',
    'identical': 'identical summands stay away from the convolution',
}


class InvalidCouplingProblemError(Exception):
    pass


class CouplingBoundViolation(Exception):
    pass


class CouplingSolverError(Exception):
    pass


def _distances(atoms_a, atoms_b):
    return np.linalg.norm(atoms_a[:, None, :] - atoms_b[None, :, :], axis=2)


class CouplingProblem(object):
    """A joint law of (X, Z), a tolerance epsilon and a net a_1..a_N.

    D is the set of atoms of X within epsilon of some net point; the
    problem is valid when P(X in D) >= 1 - delta.
    """
    def __init__(self, joint, epsilon, net, delta=0.0,
                 variable_limit=VARIABLE_LIMIT):
        if not isinstance(joint, FiniteJointDistribution):
            joint = FiniteJointDistribution(joint)
        if not epsilon > 0:
            raise InvalidCouplingProblemError(
                'epsilon must be positive, got %r' % epsilon)
        if not 0.0 <= delta < 1.0:
            raise InvalidCouplingProblemError(
                'delta must lie in [0, 1), got %r' % delta)
        net = np.array(net, dtype=float)
        if net.ndim == 1:
            net = net.reshape(-1, 1)
        if net.shape[0] == 0:
            raise InvalidCouplingProblemError('The net must not be empty')
        if net.shape[1] != joint.atoms_x.shape[1]:
            raise InvalidCouplingProblemError(
                'Net points have dimension %d but atoms of X have %d' %
                (net.shape[1], joint.atoms_x.shape[1]))
        nx, nz = joint.shape
        if nx * nz * nx > variable_limit:
            raise InvalidCouplingProblemError(
                'The coupling LP has %d variables, the limit is %d' %
                (nx * nz * nx, variable_limit))
        self.joint = joint
        self.epsilon = float(epsilon)
        self.net = net
        self.delta = float(delta)
        self.covered = _distances(joint.atoms_x, net).min(axis=1) <= epsilon
        missing = float(joint.marginal_x[~self.covered].sum())
        if missing > delta + 1e-12:
            raise InvalidCouplingProblemError(
                'The net leaves mass %.6g of X uncovered, more than delta = '
                '%.6g' % (missing, delta))
        self._alpha = None

    @property
    def N(self):
        return self.net.shape[0]

    @property
    def alpha(self):
        if self._alpha is None:
            self._alpha = alpha_exact(self.joint)
        return self._alpha

    @property
    def bound(self):
        return self.delta + 4.0 * math.sqrt(self.N) * self.alpha

    def cost(self):
        """1{|x - y| > 2 epsilon} over pairs of atoms of X."""
        atoms = self.joint.atoms_x
        return (_distances(atoms, atoms) > 2.0 * self.epsilon).astype(float)

    def relabel(self, x_permutation, z_permutation):
        joint = self.joint
        return CouplingProblem(
            FiniteJointDistribution(
                joint.pmf[np.ix_(x_permutation, z_permutation)],
                joint.atoms_x[x_permutation], joint.atoms_z[z_permutation]),
            self.epsilon, self.net, self.delta)


CouplingSolution = collections.namedtuple(
    'CouplingSolution',
    ['triple_pmf', 'objective', 'bound', 'alpha', 'residual_marginal',
     'residual_independence'])


def _residuals(problem, triple):
    joint = problem.joint
    target = np.outer(joint.marginal_z, joint.marginal_x)
    marginal = float(np.max(np.abs(triple.sum(axis=2) - joint.pmf)))
    independence = float(np.max(np.abs(triple.sum(axis=0) - target)))
    return marginal, independence


def solve_coupling(problem, check_bound=True):
    """Minimises P(|X - Y| > 2 epsilon) over laws of (X, Z, Y) with the
    given (X, Z) margin and Y independent of Z with the law of X.

    ``triple_pmf[x, z, y]`` is the optimal law. The residuals of both
    constraint families must stay below 1e-9; with ``check_bound`` an
    objective above delta + 4 sqrt(N) alpha raises
    ``CouplingBoundViolation``.
    """
    joint = problem.joint
    nx, nz = joint.shape
    cost = np.broadcast_to(problem.cost()[:, None, :], (nx, nz, nx)).ravel()
    # Variable (x, z, y) sits at (x * nz + z) * nx + y.
    keep_xz = sparse.kron(sparse.identity(nx * nz), np.ones((1, nx)))
    keep_zy = sparse.kron(np.ones((1, nx)), sparse.identity(nz * nx))
    A_eq = sparse.vstack([keep_xz, keep_zy]).tocsr()
    b_eq = np.concatenate([
        joint.pmf.ravel(),
        np.outer(joint.marginal_z, joint.marginal_x).ravel()])
    result = optimize.linprog(cost, A_eq=A_eq, b_eq=b_eq, bounds=(0, None),
                              method=LP_METHOD)
    if result.status != 0:
        raise CouplingSolverError(
            'linprog failed with status %d: %s' % (result.status,
                                                   result.message))
    triple = np.clip(result.x, 0.0, None).reshape(nx, nz, nx)
    marginal, independence = _residuals(problem, triple)
    if max(marginal, independence) > RESIDUAL_TOLERANCE:
        raise CouplingSolverError(
            'Coupling residuals %.3e / %.3e exceed %.0e' %
            (marginal, independence, RESIDUAL_TOLERANCE))
    objective = float(cost.dot(triple.ravel()))
    bound = problem.bound
    logger.debug('Coupling LP: %d variables, objective %.6g, bound %.6g',
                 cost.size, objective, bound)
    if check_bound and objective > bound + BOUND_SLACK:
        raise CouplingBoundViolation(
            'Coupling objective %.12g exceeds delta + 4 sqrt(N) alpha = '
            '%.12g' % (objective, bound))
    triple.setflags(write=False)
    return CouplingSolution(triple, objective, bound, problem.alpha,
                            marginal, independence)


def total_variation_objective(joint, epsilon=None):
    """The optimal objective when 2 epsilon is below the smallest distance
    between atoms of X: sum_z (1/2) sum_x |P(x, z) - P(z) P(x)|."""
    if epsilon is not None and joint.shape[0] > 1:
        distances = _distances(joint.atoms_x, joint.atoms_x)
        separation = distances[~np.eye(joint.shape[0], dtype=bool)].min()
        if 2.0 * epsilon >= separation:
            raise ValueError(
                '2 epsilon = %g is not below the atom separation %g' %
                (2.0 * epsilon, separation))
    product = np.outer(joint.marginal_x, joint.marginal_z)
    return 0.5 * float(np.abs(joint.pmf - product).sum())


def product_coupling_objective(problem):
    """Objective of the feasible baseline Y independent of (X, Z)."""
    p_x = problem.joint.marginal_x
    return float(p_x.dot(problem.cost()).dot(p_x))


def random_problems(count, size, seed, epsilon=0.25):
    """``count`` problems on a ``size`` x ``size`` grid with Dirichlet(1)
    joint laws, atoms 0..size-1 and the atoms themselves as the net."""
    problems = []
    for index in six.moves.range(count):
        rng = streams.make_rng(seed, 'coupling', index)
        pmf = rng.dirichlet(np.ones(size * size)).reshape(size, size)
        pmf /= pmf.sum()
        joint = FiniteJointDistribution(pmf)
        problems.append(CouplingProblem(joint, epsilon, joint.atoms_x))
    return problems


class SuiteReport(object):
    def __init__(self, rows):
        self.rows = list(rows)

    @property
    def passed(self):
        return all(row['pass'] for row in self.rows)


def verify_coupling_suite(cases, case_ids=None):
    """Solves every case and checks residuals and the bound.

    :param cases: list of ``CouplingProblem``
    :param case_ids: optional names, defaulting to ``case-<index>``
    """
    if case_ids is None:
        case_ids = ['case-%d' % index for index in range(len(cases))]
    rows = []
    for case_id, problem in zip(case_ids, cases):
        solution = solve_coupling(problem, check_bound=False)
        passed = (solution.objective <= solution.bound + BOUND_SLACK and
                  solution.residual_marginal <= RESIDUAL_TOLERANCE and
                  solution.residual_independence <= RESIDUAL_TOLERANCE)
        if not passed:
            logger.error('Coupling case %s breaks the bound: %.12g > %.12g',
                         case_id, solution.objective, solution.bound)
        rows.append({
            'case_id': case_id,
            'objective': solution.objective,
            'bound': solution.bound,
            'alpha': solution.alpha,
            'N': problem.N,
            'delta': problem.delta,
            'residual_marginal': solution.residual_marginal,
            'residual_independence': solution.residual_independence,
            'pass': passed,
            'claim': SUITE_CLAIM,
        })
    return SuiteReport(rows)


def convolution_law(mu, nu):
    """mu * nu for two frozen normal laws."""
    mean = mu.mean() + nu.mean()
    return stats.norm(mean, math.sqrt(mu.var() + nu.var()))


SumRow = collections.namedtuple(
    'SumRow', ['n', 'mode', 'ks', 'tolerance', 'alpha', 'informational',
               'passed', 'claim'])

SUM_COLUMNS = ('n', 'mode', 'ks', 'tolerance', 'alpha', 'informational',
               'pass', 'claim')


class SumReport(object):
    def __init__(self, rows, mode):
        self.rows = list(rows)
        self.mode = mode

    @property
    def passed(self):
        return all(row.passed for row in self.rows)

    def as_table(self):
        return [tuple(row) for row in self.rows]


def _block_sums(spec, norming, n, length, offsets, seed, stream,
                standardise=False):
    """A worker task returning the sums of X_{o+1}..X_{o+n} for every
    offset o, shape ``(size, len(offsets))``.

    Sums are normalised by a_n S + b_n or, with ``standardise``, by the
    exact mean and variance of a block sum.
    """
    if standardise:
        centre = n * processes.stationary_mean(spec)
        scale = 1.0 / math.sqrt(processes.partial_sum_variance(spec, n))
    else:
        scale = float(norming.a(n))
        centre = -float(norming.b(n)[0]) / scale

    def task(start, size):
        paths = processes.simulate_replications(
            spec, length, seed, start, size, stream)[:, :, 0]
        sums = np.stack([paths[:, offset:offset + n].sum(axis=1)
                         for offset in offsets], axis=1)
        return scale * (sums - centre)
    return task


def _run(task, replications, threads, label):
    return np.concatenate(
        workers.run_replications(task, replications, threads, label))


def sum_convergence_experiment(spec_x, spec_z=None, mode='independent',
                               n_grid=(16, 64, 256), replications=10000,
                               seed=0, alpha_decay=None,
                               ks_tolerance=KS_TOLERANCE,
                               control_tolerance=CONTROL_TOLERANCE,
                               alpha_cutoff=ALPHA_CUTOFF, threads=1):
    """KS distance of X_n + Z_n to the convolution of the two limits.

    ``independent`` sums independent paths of ``spec_x`` and ``spec_z``;
    ``lagged`` takes two blocks of length n of one ``spec_x`` path with a
    gap of n between them, standardised exactly; ``identical`` is the
    negative control X_n = Z_n, which passes when the fit fails by more
    than ``control_tolerance``.

    Lagged rows whose alpha bound at lag n + 1 exceeds ``alpha_cutoff`` are
    informational and always pass.
    """
    if mode not in SUM_MODES:
        raise ValueError('Unknown sum experiment mode %r' % mode)
    spec_z = spec_x if spec_z is None else spec_z
    norming_x = processes.norming_for(spec_x)
    norming_z = processes.norming_for(spec_z)
    target = convolution_law(processes.limit_law(spec_x),
                             processes.limit_law(spec_z))
    n_grid = sorted(int(n) for n in n_grid)
    if alpha_decay is None:
        if mode == 'lagged':
            alpha_decay = processes.alpha_bound_for(
                spec_x, [n + 1 for n in n_grid])
        else:
            value = 0.0 if mode == 'independent' else TRIVIAL_BOUND
            alpha_decay = AlphaProfile(
                [(n + 1, value) for n in n_grid], ANALYTIC_BOUND)

    rows = []
    for n in n_grid:
        label = '%s sum n=%d' % (mode, n)
        if mode == 'lagged':
            blocks = _run(_block_sums(spec_x, norming_x, n, 3 * n,
                                      (0, 2 * n), seed, 'sums-lagged',
                                      standardise=True),
                          replications, threads, label)
            total = blocks[:, 0] + blocks[:, 1]
        elif mode == 'independent':
            x = _run(_block_sums(spec_x, norming_x, n, n, (0,), seed,
                                 'sums-x'), replications, threads, label)
            z = _run(_block_sums(spec_z, norming_z, n, n, (0,), seed,
                                 'sums-z'), replications, threads, label)
            total = x[:, 0] + z[:, 0]
        else:
            x = _run(_block_sums(spec_x, norming_x, n, n, (0,), seed,
                                 'sums-x'), replications, threads, label)
            total = 2.0 * x[:, 0]
        ks = ks_distance(Sample(total), target.cdf)
        alpha = alpha_decay[n + 1]
        informational = mode == 'lagged' and alpha > alpha_cutoff
        if mode == 'identical':
            tolerance = control_tolerance
            passed = ks > control_tolerance
        else:
            tolerance = ks_tolerance
            passed = informational or ks <= ks_tolerance
        logger.info('%s sum n=%d: KS %.4g (alpha %.3g)', mode, n, ks, alpha)
        rows.append(SumRow(n, mode, ks, tolerance, alpha, informational,
                           passed, SUM_CLAIMS[mode]))
    return SumReport(rows, mode)
