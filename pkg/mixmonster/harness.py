"""Runs configured experiments and writes their reports.

Exit status: 0 when every pass flag holds, 2 when any does not (or a
correctness invariant raised), 1 for usage and configuration errors.
"""
from __future__ import absolute_import

import argparse
import json
import logging
import sys

import numpy as np

from mixmonster import (
    VERSION, blocking, config as config_module, coupling, mixing, probability,
    processes, reports, selfdecomp, workers)

logger = logging.getLogger("mixmonster")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2

ALPHA_COLUMNS = ('n', 'kind', 'alpha', 'side', 'pass', 'claim')
INTEGRAL_COLUMNS = ('metric_name', 'value', 'reference', 'tolerance', 'pass',
                    'claim')

ALPHA_CLAIMS = {
    mixing.EXACT_WINDOW: 'exact window alpha stays below the analytic bound',
    mixing.ANALYTIC_BOUND: 'alpha decays geometrically under minorisation',
    mixing.PLUG_IN_ESTIMATE: 'plug-in alpha estimate from one path',
}
INTEGRAL_CLAIMS = {
    'mean': 'random integral mean matches the closed form',
    'variance': 'random integral variance matches the closed form',
    'truncation_factor': 'integral truncated at T_max',
    'log_moment': 'driving process has a finite log moment',
    'log_moment_growth': 'truncated log moment stops growing',
    'log_moment_tail_index': 'tail index of the jump sizes',
}


def version_string():
    return '.'.join(str(part) for part in VERSION)


class Outcome(object):
    """Report files produced by a run, keyed by file name."""
    def __init__(self):
        self.csv = {}
        self.json = {}
        self.passed = True

    def add_csv(self, name, columns, rows):
        self.csv[name] = (columns, rows)

    def add_json(self, name, data):
        self.json[name] = data

    def require(self, passed):
        self.passed = self.passed and bool(passed)

    @property
    def names(self):
        return list(self.csv) + list(self.json)


def _alpha_profile(config, threads):
    params = config.params
    chain = mixing.MarkovChainSpec(**params['chain'])
    n_values = params['n_values']
    outcome = Outcome()
    exact = mixing.alpha_sequence(
        chain, n_values, params['past_window'], params['future_window'],
        params['j_values'])
    bound = mixing.alpha_bound_geometric(chain, n_max=max(n_values))
    profiles = [exact, bound]
    if params['plugin_length']:
        spec = processes.ProcessSpec('markov_function', chain=chain)
        path = processes.generate_path(spec, params['plugin_length'],
                                       config.seed, stream='alpha-plugin')
        profiles.append(mixing.alpha_plugin_profile(
            path.values[:, 0], n_values, params['bins']))
    rows = []
    for row in mixing.profile_rows(*profiles):
        passed = True
        if row.kind == mixing.EXACT_WINDOW:
            passed = row.alpha <= bound[row.n] + 1e-12
        outcome.require(passed)
        rows.append(tuple(row) + (passed, ALPHA_CLAIMS[row.kind]))
    outcome.add_csv('alpha-profile.csv', ALPHA_COLUMNS, rows)
    outcome.add_json('alpha-profile.json', dict(
        (profile.kind, profile.metadata) for profile in profiles))
    return outcome


def _blocking_verify(config, threads):
    params = config.params
    spec = processes.spec_from_dict(params['process'])
    outcome = Outcome()
    norming = processes.norming_for(spec)
    step = processes.validate_norming(norming, max(params['n_grid']))
    outcome.require(step.passed)
    outcome.add_json('norming.json', {
        'provenance': norming.provenance,
        'long_run_variance': norming.long_run_variance,
        'mean': norming.mean,
        'check': step._asdict(),
        'claim': 'norming constants match the long run variance',
    })
    report = blocking.verify_blocking(
        spec, params['c'], params['n_grid'], params['replications'],
        config.seed, params['epsilon'], params['grid_step'],
        params['tolerances']['ks'], threads)
    outcome.require(report.passed)
    outcome.add_csv('blocking.csv', blocking.COLUMNS, report.as_table())
    plan = report.plan
    outcome.add_json('blocking-plan.json', {
        'c': plan.c,
        'threshold': plan.threshold,
        'entries': [plan.entries[n]._asdict() for n in plan.n_values],
    })
    return outcome


def _selfdecomp_test(config, threads):
    params = config.params
    tolerances = params['tolerances']
    outcome = Outcome()
    if 'law' in params:
        law = dict(params['law'])
        kind = law.pop('kind')
        factory = {'normal': selfdecomp.gaussian_cf,
                   'exponential': selfdecomp.exponential_cf,
                   'uniform': selfdecomp.uniform_cf}[kind]
        cf = factory(*law.values())
        extra = {}
    else:
        bdlp = config_module.bdlp_from_dict(params['bdlp'])
        cf = selfdecomp.sample_random_integral(
            bdlp, params['T_max'], params['n_steps'], params['n_samples'],
            config.seed)
        extra = {'truncation_factor': float(np.exp(-params['T_max']))}
    report = selfdecomp.selfdecomp_test(
        cf, params['c_values'], params['grid_radius'], tolerances['psd'],
        tolerances['floor'], params['grid_size'])
    outcome.require(report.verdict == params['expected_verdict'])
    data = {
        'verdict': report.verdict,
        'expected_verdict': params['expected_verdict'],
        'source': report.source,
        'tolerance': report.tolerance,
        'floor': report.floor,
        'rows': report.as_rows(),
        'claim': 'phi(t) / phi(ct) is positive definite on the grid',
    }
    data.update(extra)
    outcome.add_json('selfdecomp.json', data)
    return outcome


def _integral_sample(config, threads):
    params = config.params
    tolerances = params['tolerances']
    bdlp = config_module.bdlp_from_dict(params['bdlp'])
    outcome = Outcome()
    rows = []
    if not (bdlp.has_jumps and bdlp.jump_law.heavy):
        sample = selfdecomp.sample_random_integral(
            bdlp, params['T_max'], params['n_steps'], params['n_samples'],
            config.seed).values()
        moments = selfdecomp.integral_moments(bdlp, params['T_max'])
        tolerance = tolerances['moment']
        mean = float(np.mean(sample))
        spread = max(1.0, abs(moments['mean']), np.sqrt(moments['variance']))
        rows.append(('mean', mean, moments['mean'], tolerance * spread,
                     abs(mean - moments['mean']) <= tolerance * spread))
        variance = float(np.var(sample))
        rows.append(('variance', variance, moments['variance'],
                     tolerance * moments['variance'],
                     abs(variance - moments['variance']) <=
                     tolerance * moments['variance']))
        rows.append(('truncation_factor', moments['truncation_factor'], None,
                     None, True))
    check = selfdecomp.log_moment_check(
        bdlp, params['log_moment_samples'], config.seed,
        tolerances['growth'], tolerances['tail_index'])
    expected = params['expected_log_moment']
    rows.append(('log_moment', check.estimate, None, None,
                 check.diagnostic == expected))
    rows.append(('log_moment_growth', check.growth, None,
                 tolerances['growth'], check.diagnostic == expected))
    rows.append(('log_moment_tail_index', check.tail_index, None,
                 tolerances['tail_index'], check.diagnostic == expected))
    for row in rows:
        outcome.require(row[-1])
    outcome.add_csv('integral.csv', INTEGRAL_COLUMNS,
                    [row + (INTEGRAL_CLAIMS[row[0]],) for row in rows])
    outcome.add_json('log-moment.json', dict(check._asdict(),
                                             expected=expected))
    return outcome


def _coupling_suite(config, threads):
    params = config.params
    cases = [config_module.problem_from_dict(case)
             for case in params['cases']]
    case_ids = [case['case_id'] for case in params['cases']]
    if params['random']:
        random = params['random']
        generated = coupling.random_problems(
            random['count'], random['size'], config.seed, random['epsilon'])
        cases.extend(generated)
        case_ids.extend('random-%d' % index
                        for index in range(len(generated)))
    report = coupling.verify_coupling_suite(cases, case_ids)
    outcome = Outcome()
    outcome.require(report.passed)
    outcome.add_json('coupling.json', [
        dict((field, row[field]) for field in coupling.SUITE_FIELDS)
        for row in report.rows])
    return outcome


def _sum_convergence(config, threads):
    params = config.params
    spec_x = processes.spec_from_dict(params['process_x'])
    spec_z = (processes.spec_from_dict(params['process_z'])
              if params['process_z'] else None)
    alpha_decay = None
    if params['alpha_decay']:
        alpha_decay = mixing.AlphaProfile(params['alpha_decay'],
                                          mixing.ANALYTIC_BOUND,
                                          {'source': 'config'})
    report = coupling.sum_convergence_experiment(
        spec_x, spec_z, params['mode'], params['n_grid'],
        params['replications'], config.seed, alpha_decay,
        ks_tolerance=params['tolerances']['ks'],
        control_tolerance=params['tolerances']['control'],
        alpha_cutoff=params['alpha_cutoff'], threads=threads)
    outcome = Outcome()
    outcome.require(report.passed)
    outcome.add_csv('sums.csv', coupling.SUM_COLUMNS, report.as_table())
    return outcome


RUNNERS = {
    'alpha-profile': _alpha_profile,
    'blocking-verify': _blocking_verify,
    'selfdecomp-test': _selfdecomp_test,
    'integral-sample': _integral_sample,
    'coupling-suite': _coupling_suite,
    'corollary-sum': _sum_convergence,
}

# Correctness invariants; a run that trips one fails like a failed row.
INVARIANT_ERRORS = (coupling.CouplingBoundViolation,
                    blocking.BlockingIdentityError)

# Inputs the configuration accepted but the experiment cannot work with.
RUNTIME_ERRORS = (
    mixing.InvalidChainError, mixing.WindowTooLargeError,
    blocking.NotInfinitesimalError, blocking.PreAsymptoticError,
    coupling.InvalidCouplingProblemError, coupling.CouplingSolverError,
    processes.InvalidProcessError, processes.DegenerateProcessError,
    probability.InvalidDistributionError, probability.GridError,
    probability.SizeLimitError, selfdecomp.InvalidBDLPError,
    selfdecomp.InvalidScaleError, workers.ReplicationError)


def _aborted(error, directory, config):
    """Exit status of a run stopped by ``error``. Worker threads wrap what
    they raise, so the wrapped cause decides."""
    cause = getattr(error, 'cause', None)
    if isinstance(error, INVARIANT_ERRORS) or isinstance(cause,
                                                         INVARIANT_ERRORS):
        logger.error('Correctness invariant violated: %s', cause or error)
        reports.write_manifest(directory, config, version_string(), [],
                               False)
        return EXIT_FAILED
    logger.error('Experiment cannot run: %s', error)
    return EXIT_USAGE


def run(path, out=None, threads=None):
    """Runs the experiment configured in the JSON file at ``path`` and
    returns the exit status."""
    try:
        config = config_module.load_config(path)
    except config_module.ConfigError as e:
        logger.error('Invalid configuration: %s', e)
        return EXIT_USAGE
    directory = config.resolve_output_dir(out)
    threads = threads or config.threads
    logger.info('Running %s (seed %d) into %s', config.kind, config.seed,
                directory)
    try:
        outcome = RUNNERS[config.kind](config, threads)
    except INVARIANT_ERRORS + RUNTIME_ERRORS as e:
        return _aborted(e, directory, config)
    for name, (columns, rows) in sorted(outcome.csv.items()):
        reports.write_csv(directory, name, columns, rows)
    for name, data in sorted(outcome.json.items()):
        reports.write_json(directory, name, data)
    reports.write_manifest(directory, config, version_string(),
                           outcome.names, outcome.passed)
    if not outcome.passed:
        logger.warning('%s finished with failed checks', config.kind)
        return EXIT_FAILED
    logger.info('%s finished, all checks passed', config.kind)
    return EXIT_OK


def list_experiments(as_json=False):
    """One line per experiment kind, or a JSON array."""
    if as_json:
        return json.dumps([
            {'kind': kind, 'description': description}
            for kind, description in config_module.KINDS.items()], indent=2)
    return '\n'.join('%s\t%s' % (kind, description)
                     for kind, description in config_module.KINDS.items())


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with status 1."""
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, '%s: error: %s\n' % (self.prog, message))


def build_parser():
    parser = ArgumentParser(prog='mixmonster')
    parser.add_argument('-v', '--verbose', action='store_true',
                        help='log debug messages')
    commands = parser.add_subparsers(dest='command')
    run_parser = commands.add_parser('run', help='run a configured experiment')
    run_parser.add_argument('config', help='path of the JSON config')
    run_parser.add_argument('--out', help='output directory')
    run_parser.add_argument('--threads', type=int,
                            help='worker threads for Monte Carlo replications')
    list_parser = commands.add_parser('list', help='list experiment kinds')
    list_parser.add_argument('--json', action='store_true',
                             help='print a JSON array')
    return parser


def main(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    if args.command == 'list':
        stdout.write(list_experiments(args.json) + '\n')
        return EXIT_OK
    elif args.command == 'run':
        if args.threads is not None and args.threads < 1:
            parser.error('--threads must be positive')
        return run(args.config, args.out, args.threads)
    parser.error('a command is required')
