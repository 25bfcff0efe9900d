"""Experiment configuration.

An experiment is described by one JSON document::

    {
        "kind": "blocking-verify",
        "seed": 12345,
        "process": {"family": "ar1", "phi": 0.5},
        "c": 0.5,
        "n_grid": [256, 512, 1024, 2048, 4096],
        "replications": 10000
    }

Unknown keys are errors at every level, ``seed`` is mandatory and every
tolerance must be positive. ``parse_config`` fills in defaults; the
resolved document is what the manifest records.
"""
from __future__ import absolute_import

import collections
import copy
import json
import logging
import os

import six

from mixmonster import blocking, coupling, mixing, processes, selfdecomp
from mixmonster.probability import (
    FiniteJointDistribution, InvalidDistributionError)
from mixmonster.streams import SEED_LIMIT

logger = logging.getLogger("mixmonster")

OUTPUT_DIR_VARIABLE = 'MIXMONSTER_OUTPUT_DIR'
DEFAULT_OUTPUT_DIR = 'mixmonster-reports'

KINDS = collections.OrderedDict([
    ('alpha-profile',
     'exact window, analytic bound and plug-in alpha profiles of a finite '
     'Markov chain'),
    ('blocking-verify',
     'Monte Carlo check of the blocking decomposition of normalised sums'),
    ('selfdecomp-test',
     'grid positive-definiteness test of phi(t) / phi(ct) for 0 < c < 1'),
    ('integral-sample',
     'random integrals of a background driving Levy process with a '
     'log-moment check'),
    ('coupling-suite',
     'optimal couplings checked against delta + 4 sqrt(N) alpha'),
    ('corollary-sum',
     'convergence of weakly dependent sums to the convolution of limits'),
])

COMMON_KEYS = ('kind', 'seed', 'output_dir', 'threads', 'description')

_DOMAIN_ERRORS = (
    InvalidDistributionError, mixing.InvalidChainError,
    processes.InvalidProcessError, processes.DegenerateProcessError,
    selfdecomp.InvalidBDLPError, selfdecomp.InvalidScaleError,
    coupling.InvalidCouplingProblemError, ValueError, TypeError)


class ConfigError(Exception):
    pass


def _join(path, key):
    return '%s.%s' % (path, key) if path else key


def _mapping(value, path):
    if not isinstance(value, dict):
        raise ConfigError('%s must be an object' % (path or 'config'))
    return value


def _check_keys(document, allowed, path):
    for key in sorted(document):
        if key not in allowed:
            raise ConfigError('Unknown key %r' % _join(path, key))


def _require(document, key, path):
    if key not in document:
        raise ConfigError('Missing required key %r' % _join(path, key))
    return document[key]


def _number(value, path, positive=False, minimum=None, maximum=None):
    if isinstance(value, bool) or not isinstance(
            value, six.integer_types + (float,)):
        raise ConfigError('%s must be a number, got %r' % (path, value))
    value = float(value)
    if positive and not value > 0:
        raise ConfigError('%s must be positive, got %r' % (path, value))
    if minimum is not None and value < minimum:
        raise ConfigError('%s must be at least %r, got %r' %
                          (path, minimum, value))
    if maximum is not None and value > maximum:
        raise ConfigError('%s must be at most %r, got %r' %
                          (path, maximum, value))
    return value


def _integer(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, six.integer_types):
        raise ConfigError('%s must be an integer, got %r' % (path, value))
    if minimum is not None and value < minimum:
        raise ConfigError('%s must be at least %d, got %r' %
                          (path, minimum, value))
    return int(value)


def _list(value, path, item, non_empty=True):
    if not isinstance(value, list):
        raise ConfigError('%s must be a list' % path)
    if non_empty and not value:
        raise ConfigError('%s must not be empty' % path)
    return [item(element, '%s[%d]' % (path, index))
            for index, element in enumerate(value)]


def _string(value, path, choices=None):
    if not isinstance(value, six.string_types):
        raise ConfigError('%s must be a string, got %r' % (path, value))
    if choices is not None and value not in choices:
        raise ConfigError('Unknown value %r for %s; expected one of %s' %
                          (value, path, ', '.join(choices)))
    return value


def _build(path, factory, *args, **kwargs):
    """Builds a domain object, reporting its validation errors as config
    errors located at ``path``."""
    try:
        return factory(*args, **kwargs)
    except _DOMAIN_ERRORS as e:
        raise ConfigError('%s: %s' % (path, e))


def _tolerances(document, path, allowed):
    """Resolves a ``tolerances`` object against ``allowed`` defaults."""
    values = _mapping(document.get('tolerances', {}), path)
    _check_keys(values, allowed, path)
    resolved = dict(allowed)
    for key, value in six.iteritems(values):
        resolved[key] = _number(value, _join(path, key), positive=True)
    return resolved


def _chain(document, path):
    document = _mapping(document, path)
    _check_keys(document, ('states', 'transition', 'initial'), path)
    matrix = _list(_require(document, 'transition', path),
                   _join(path, 'transition'),
                   lambda row, p: _list(row, p, _number))
    resolved = {
        'states': _list(_require(document, 'states', path),
                        _join(path, 'states'), _number),
        'transition': matrix,
    }
    if document.get('initial') is not None:
        resolved['initial'] = _list(document['initial'],
                                    _join(path, 'initial'), _number)
    _build(path, mixing.MarkovChainSpec, **resolved)
    return resolved


def _innovation(document, path):
    document = _mapping(document, path)
    _check_keys(document, ('law', 'mean', 'scale'), path)
    return {
        'law': _string(document.get('law', 'normal'), _join(path, 'law'),
                       processes.LAWS),
        'mean': _number(document.get('mean', 0.0), _join(path, 'mean')),
        'scale': _number(document.get('scale', 1.0), _join(path, 'scale'),
                         minimum=0.0),
    }


PROCESS_KEYS = {
    'iid': ('innovation',),
    'ar1': ('innovation', 'phi'),
    'ma_q': ('innovation', 'weights'),
    'markov_function': ('chain', 'values'),
    'constant': ('value',),
}


def _process(document, path):
    document = _mapping(document, path)
    family = _string(_require(document, 'family', path),
                     _join(path, 'family'), processes.FAMILIES)
    _check_keys(document, ('family', 'dimension') + PROCESS_KEYS[family],
                path)
    resolved = {
        'family': family,
        'dimension': _integer(document.get('dimension', 1),
                              _join(path, 'dimension'), minimum=1),
    }
    if 'innovation' in PROCESS_KEYS[family]:
        resolved['innovation'] = _innovation(
            document.get('innovation', {}), _join(path, 'innovation'))
    if family == 'ar1':
        resolved['phi'] = _number(_require(document, 'phi', path),
                                  _join(path, 'phi'))
    elif family == 'ma_q':
        resolved['weights'] = _list(_require(document, 'weights', path),
                                    _join(path, 'weights'), _number)
    elif family == 'markov_function':
        resolved['chain'] = _chain(_require(document, 'chain', path),
                                   _join(path, 'chain'))
        if document.get('values') is not None:
            resolved['values'] = _list(document['values'],
                                       _join(path, 'values'), _number)
    elif family == 'constant':
        resolved['value'] = _number(document.get('value', 0.0),
                                    _join(path, 'value'))
    _build(path, processes.spec_from_dict, resolved)
    return resolved


def _jump_law(document, path):
    document = _mapping(document, path)
    kind = _string(_require(document, 'kind', path), _join(path, 'kind'),
                   selfdecomp.JUMP_LAWS)
    keys = {
        'discrete': ('values', 'probabilities'),
        'normal': ('mean', 'scale'),
        'exponential': ('scale',),
        'doubly-exponential': (),
    }[kind]
    _check_keys(document, ('kind',) + keys, path)
    resolved = {'kind': kind}
    for key in keys:
        if key in ('values', 'probabilities'):
            resolved[key] = _list(_require(document, key, path),
                                  _join(path, key), _number)
        elif key == 'mean':
            resolved[key] = _number(document.get(key, 0.0), _join(path, key))
        else:
            resolved[key] = _number(document.get(key, 1.0), _join(path, key),
                                    positive=True)
    return resolved


def _bdlp(document, path):
    document = _mapping(document, path)
    _check_keys(document, ('drift', 'gaussian_sigma', 'jump_rate',
                           'jump_law'), path)
    resolved = {
        'drift': _number(document.get('drift', 0.0), _join(path, 'drift')),
        'gaussian_sigma': _number(document.get('gaussian_sigma', 0.0),
                                  _join(path, 'gaussian_sigma'), minimum=0.0),
        'jump_rate': _number(document.get('jump_rate', 0.0),
                             _join(path, 'jump_rate'), minimum=0.0),
        'jump_law': None,
    }
    if document.get('jump_law') is not None:
        resolved['jump_law'] = _jump_law(document['jump_law'],
                                         _join(path, 'jump_law'))
    _build(path, bdlp_from_dict, resolved)
    return resolved


def bdlp_from_dict(document):
    document = dict(document)
    law = document.pop('jump_law', None)
    if law is not None:
        law = dict(law)
        law = selfdecomp.JumpLaw(law.pop('kind'), **law)
    return selfdecomp.BDLPSpec(jump_law=law, **document)


def _c_values(document, key, path, default=None):
    value = document.get(key, default)
    if value is None:
        raise ConfigError('Missing required key %r' % _join(path, key))
    return _list(value, _join(path, key),
                 lambda c, p: _number(c, p, positive=True,
                                      maximum=1.0 - 1e-15))


def _n_grid(document, path, default):
    values = _list(document.get('n_grid', list(default)),
                   _join(path, 'n_grid'),
                   lambda n, p: _integer(n, p, minimum=2))
    if values != sorted(set(values)):
        raise ConfigError('%s must be strictly increasing' %
                          _join(path, 'n_grid'))
    return values


def _alpha_profile(document):
    _check_keys(document, COMMON_KEYS + (
        'chain', 'n_values', 'past_window', 'future_window', 'j_values',
        'plugin_length', 'bins'), '')
    n_values = _list(document.get('n_values', list(range(1, 11))),
                     'n_values', lambda n, p: _integer(n, p, minimum=1))
    params = {
        'chain': _chain(_require(document, 'chain', ''), 'chain'),
        'n_values': n_values,
        'past_window': _integer(document.get('past_window', 1),
                                'past_window', minimum=1),
        'future_window': _integer(document.get('future_window', 1),
                                  'future_window', minimum=1),
        'j_values': None,
        'plugin_length': _integer(document.get('plugin_length', 0),
                                  'plugin_length', minimum=0),
        'bins': _integer(document.get('bins', 2), 'bins', minimum=2),
    }
    if document.get('j_values') is not None:
        params['j_values'] = _list(document['j_values'], 'j_values',
                                   lambda j, p: _integer(j, p, minimum=1))
    if params['plugin_length'] and \
            params['plugin_length'] <= max(n_values):
        raise ConfigError('plugin_length must exceed the largest n')
    return params


def _blocking_verify(document):
    _check_keys(document, COMMON_KEYS + (
        'process', 'c', 'n_grid', 'replications', 'epsilon', 'grid_step',
        'tolerances'), '')
    params = {
        'process': _process(_require(document, 'process', ''), 'process'),
        'c': _number(_require(document, 'c', ''), 'c', positive=True,
                     maximum=1.0 - 1e-15),
        'n_grid': _n_grid(document, '', blocking.DEFAULT_N_GRID),
        'replications': _integer(
            document.get('replications', blocking.DEFAULT_REPLICATIONS),
            'replications', minimum=10),
        'epsilon': _number(document.get('epsilon', blocking.DEFAULT_EPSILON),
                           'epsilon', positive=True),
        'grid_step': _number(
            document.get('grid_step', blocking.DEFAULT_GRID_STEP),
            'grid_step', positive=True, maximum=1.0),
        'tolerances': _tolerances(document, 'tolerances',
                                  {'ks': blocking.KS_TOLERANCE}),
    }
    _build('process', processes.norming_for,
           processes.spec_from_dict(params['process']))
    return params


def _selfdecomp_test(document):
    _check_keys(document, COMMON_KEYS + (
        'law', 'bdlp', 'T_max', 'n_steps', 'n_samples', 'c_values',
        'grid_radius', 'grid_size', 'expected_verdict', 'tolerances'), '')
    if ('law' in document) == ('bdlp' in document):
        raise ConfigError('Exactly one of law and bdlp must be given')
    params = {
        'c_values': _c_values(document, 'c_values', '', [0.3, 0.5, 0.8]),
        'grid_radius': _number(
            document.get('grid_radius', selfdecomp.DEFAULT_GRID_RADIUS),
            'grid_radius', positive=True),
        'grid_size': _integer(
            document.get('grid_size', selfdecomp.DEFAULT_GRID_SIZE),
            'grid_size', minimum=3),
        'expected_verdict': _string(
            document.get('expected_verdict', selfdecomp.PASS),
            'expected_verdict',
            (selfdecomp.PASS, selfdecomp.FAIL, selfdecomp.INCONCLUSIVE)),
    }
    if params['grid_size'] % 2 == 0:
        raise ConfigError('grid_size must be odd')
    if 'law' in document:
        law = _mapping(document['law'], 'law')
        kind = _string(_require(law, 'kind', 'law'), 'law.kind',
                       ('normal', 'exponential', 'uniform'))
        parameter = {'normal': 'sigma', 'exponential': 'scale',
                     'uniform': 'half_width'}[kind]
        _check_keys(law, ('kind', parameter), 'law')
        params['law'] = {
            'kind': kind,
            parameter: _number(law.get(parameter, 1.0),
                               _join('law', parameter), positive=True),
        }
        defaults = {'psd': selfdecomp.CLOSED_FORM_TOLERANCE,
                    'floor': selfdecomp.CLOSED_FORM_FLOOR}
        for key in ('T_max', 'n_steps', 'n_samples'):
            if key in document:
                raise ConfigError('%r only applies to bdlp samples' % key)
    else:
        params['bdlp'] = _bdlp(document['bdlp'], 'bdlp')
        params['T_max'] = _number(document.get('T_max', 20.0), 'T_max',
                                  minimum=selfdecomp.MIN_T_MAX)
        params['n_steps'] = _integer(document.get('n_steps', 200), 'n_steps',
                                     minimum=1)
        params['n_samples'] = _integer(document.get('n_samples', 100000),
                                       'n_samples', minimum=100)
        defaults = {'psd': selfdecomp.EMPIRICAL_TOLERANCE,
                    'floor': selfdecomp.EMPIRICAL_FLOOR}
    params['tolerances'] = _tolerances(document, 'tolerances', defaults)
    return params


def _integral_sample(document):
    _check_keys(document, COMMON_KEYS + (
        'bdlp', 'T_max', 'n_steps', 'n_samples', 'log_moment_samples',
        'expected_log_moment', 'tolerances'), '')
    return {
        'bdlp': _bdlp(_require(document, 'bdlp', ''), 'bdlp'),
        'T_max': _number(document.get('T_max', 20.0), 'T_max',
                         minimum=selfdecomp.MIN_T_MAX),
        'n_steps': _integer(document.get('n_steps', 200), 'n_steps',
                            minimum=1),
        'n_samples': _integer(document.get('n_samples', 100000),
                              'n_samples', minimum=100),
        'log_moment_samples': _integer(
            document.get('log_moment_samples', 100000),
            'log_moment_samples', minimum=100),
        'expected_log_moment': _string(
            document.get('expected_log_moment', selfdecomp.FINITE),
            'expected_log_moment',
            (selfdecomp.FINITE, selfdecomp.SUSPECT_INFINITE)),
        'tolerances': _tolerances(document, 'tolerances', {
            'moment': 0.05,
            'growth': selfdecomp.LOG_MOMENT_GROWTH,
            'tail_index': selfdecomp.HILL_THRESHOLD,
        }),
    }


def _case(document, path):
    document = _mapping(document, path)
    _check_keys(document, ('case_id', 'pmf', 'atoms_x', 'atoms_z', 'epsilon',
                           'net', 'delta'), path)
    pmf = _list(_require(document, 'pmf', path), _join(path, 'pmf'),
                lambda row, p: _list(row, p, _number))
    resolved = {
        'case_id': _string(document.get('case_id', path), _join(path,
                                                                'case_id')),
        'pmf': pmf,
        'atoms_x': None,
        'atoms_z': None,
        'epsilon': _number(_require(document, 'epsilon', path),
                           _join(path, 'epsilon'), positive=True),
        'net': _list(_require(document, 'net', path), _join(path, 'net'),
                     _number),
        'delta': _number(document.get('delta', 0.0), _join(path, 'delta'),
                         minimum=0.0, maximum=1.0),
    }
    for key in ('atoms_x', 'atoms_z'):
        if document.get(key) is not None:
            resolved[key] = _list(document[key], _join(path, key), _number)
    _build(path, problem_from_dict, resolved)
    return resolved


def problem_from_dict(document):
    joint = FiniteJointDistribution(document['pmf'], document['atoms_x'],
                                    document['atoms_z'])
    return coupling.CouplingProblem(joint, document['epsilon'],
                                    document['net'], document['delta'])


def _coupling_suite(document):
    _check_keys(document, COMMON_KEYS + ('cases', 'random'), '')
    params = {
        'cases': _list(document.get('cases', []), 'cases', _case,
                       non_empty=False),
        'random': None,
    }
    if document.get('random') is not None:
        random = _mapping(document['random'], 'random')
        _check_keys(random, ('count', 'size', 'epsilon'), 'random')
        params['random'] = {
            'count': _integer(random.get('count', 10), 'random.count',
                              minimum=1),
            'size': _integer(random.get('size', 3), 'random.size',
                             minimum=1),
            'epsilon': _number(random.get('epsilon', 0.25), 'random.epsilon',
                               positive=True, maximum=0.49),
        }
        size = params['random']['size']
        if size ** 3 > coupling.VARIABLE_LIMIT:
            raise ConfigError(
                'random.size %d gives a coupling LP with %d variables, the '
                'limit is %d' % (size, size ** 3, coupling.VARIABLE_LIMIT))
    if not params['cases'] and not params['random']:
        raise ConfigError('A coupling suite needs cases or random problems')
    return params


def _alpha_pair(value, path):
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError('%s must be an [n, alpha] pair' % path)
    return [_integer(value[0], path + '[0]', minimum=1),
            _number(value[1], path + '[1]', minimum=0.0, maximum=0.25)]


def _alpha_decay(value, n_grid):
    """An alpha decay certificate: [n, alpha] pairs covering the lag n + 1
    of every n in the grid."""
    pairs = _list(value, 'alpha_decay', _alpha_pair)
    lags = set(n for n, _ in pairs)
    missing = [n + 1 for n in n_grid if n + 1 not in lags]
    if missing:
        raise ConfigError('alpha_decay has no value for lags %s' % (
            ', '.join(str(n) for n in missing)))
    return pairs


def _sum_convergence(document):
    _check_keys(document, COMMON_KEYS + (
        'process_x', 'process_z', 'mode', 'n_grid', 'replications',
        'alpha_cutoff', 'alpha_decay', 'tolerances'), '')
    params = {
        'process_x': _process(_require(document, 'process_x', ''),
                              'process_x'),
        'process_z': None,
        'mode': _string(document.get('mode', 'independent'), 'mode',
                        coupling.SUM_MODES),
        'n_grid': _n_grid(document, '', (16, 64, 256)),
        'replications': _integer(document.get('replications', 10000),
                                 'replications', minimum=10),
        'alpha_cutoff': _number(
            document.get('alpha_cutoff', coupling.ALPHA_CUTOFF),
            'alpha_cutoff', positive=True),
        'alpha_decay': None,
        'tolerances': _tolerances(document, 'tolerances', {
            'ks': coupling.KS_TOLERANCE,
            'control': coupling.CONTROL_TOLERANCE,
        }),
    }
    if document.get('alpha_decay') is not None:
        params['alpha_decay'] = _alpha_decay(document['alpha_decay'],
                                             params['n_grid'])
    if document.get('process_z') is not None:
        params['process_z'] = _process(document['process_z'], 'process_z')
    for key in ('process_x', 'process_z'):
        if params[key] is not None:
            _build(key, processes.norming_for,
                   processes.spec_from_dict(params[key]))
    return params


_PARSERS = {
    'alpha-profile': _alpha_profile,
    'blocking-verify': _blocking_verify,
    'selfdecomp-test': _selfdecomp_test,
    'integral-sample': _integral_sample,
    'coupling-suite': _coupling_suite,
    'corollary-sum': _sum_convergence,
}


class ExperimentConfig(object):
    def __init__(self, kind, seed, params, output_dir=None, threads=1,
                 description=None):
        self.kind = kind
        self.seed = seed
        self.params = params
        self.output_dir = output_dir
        self.threads = threads
        self.description = description

    def as_dict(self):
        """The resolved configuration, defaults included."""
        result = copy.deepcopy(self.params)
        result.update({
            'kind': self.kind,
            'seed': self.seed,
            'output_dir': self.output_dir,
            'threads': self.threads,
            'description': self.description,
        })
        return result

    def resolve_output_dir(self, override=None, environ=None):
        """``--out`` beats the config which beats the environment."""
        environ = os.environ if environ is None else environ
        return (override or self.output_dir or
                environ.get(OUTPUT_DIR_VARIABLE) or DEFAULT_OUTPUT_DIR)

    def __repr__(self):
        return 'ExperimentConfig(kind=%s, seed=%d)' % (self.kind, self.seed)


def parse_config(document):
    """Validates a config document and returns an ``ExperimentConfig``."""
    document = _mapping(document, '')
    kind = _string(_require(document, 'kind', ''), 'kind', list(KINDS))
    if 'seed' not in document:
        raise ConfigError('Missing required key \'seed\'; experiments never '
                          'draw implicit entropy')
    seed = _integer(document['seed'], 'seed', minimum=0)
    if seed >= SEED_LIMIT:
        raise ConfigError('seed must be below 2**64, got %d' % seed)
    params = _PARSERS[kind](document)
    output_dir = document.get('output_dir')
    if output_dir is not None:
        output_dir = _string(output_dir, 'output_dir')
    description = document.get('description')
    if description is not None:
        description = _string(description, 'description')
    threads = _integer(document.get('threads', 1), 'threads', minimum=1)
    return ExperimentConfig(kind, seed, params, output_dir, threads,
                            description)


def load_config(path):
    try:
        with open(path) as handle:
            document = json.load(handle)
    except IOError as e:
        raise ConfigError('Cannot read config %s: %s' % (path, e))
    except ValueError as e:
        raise ConfigError('Config %s is not valid JSON: %s' % (path, e))
    logger.debug('Loaded config %s', path)
    return parse_config(document)
