from __future__ import absolute_import

from mixmonster.blocking import build_plan, decompose, verify_blocking
from mixmonster.coupling import (
    CouplingProblem, sum_convergence_experiment, solve_coupling,
    verify_coupling_suite)
from mixmonster.mixing import (
    MarkovChainSpec, alpha_bound_geometric, alpha_sequence, alpha_window)
from mixmonster.probability import (
    FiniteJointDistribution, Sample, alpha_exact, empirical_cf, ks_distance,
    psd_check)
from mixmonster.processes import (
    ProcessSpec, generate_path, norming_for, validate_norming)
from mixmonster.selfdecomp import (
    BDLPSpec, log_moment_check, sample_random_integral, scale_sample,
    selfdecomp_test)

__all__ = [
    'BDLPSpec', 'CouplingProblem', 'FiniteJointDistribution',
    'MarkovChainSpec', 'ProcessSpec', 'Sample', 'alpha_bound_geometric',
    'alpha_exact', 'alpha_sequence', 'alpha_window', 'build_plan',
    'sum_convergence_experiment', 'decompose', 'empirical_cf',
    'generate_path', 'ks_distance', 'log_moment_check', 'norming_for',
    'psd_check', 'sample_random_integral', 'scale_sample', 'selfdecomp_test',
    'solve_coupling', 'validate_norming', 'verify_blocking',
    'verify_coupling_suite', 'VERSION',
]

VERSION = (0, 1, 0)
