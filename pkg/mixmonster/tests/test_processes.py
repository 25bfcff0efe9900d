from __future__ import absolute_import

import math

import numpy as np
from scipy import stats

from mixmonster import processes
from mixmonster.mixing import MarkovChainSpec
from mixmonster.probability import ks_distance
from mixmonster.processes import (
    DegenerateProcessError, Innovation, InvalidProcessError,
    NormingSequences, ProcessSpec, alpha_bound_for, expected_partial_sum,
    export_path_csv, generate_path, generate_paths, long_run_variance,
    norming_for, partial_sum_variance, simulate_replications,
    tail_function, validate_norming)
from mixmonster.tests import settings as test_settings
from mixmonster.tests.base import (
    StatisticalTestCase, TemporaryDirectoryTestCase)


def symmetric_chain_spec(initial=None):
    chain = MarkovChainSpec([-1.0, 1.0], [[0.75, 0.25], [0.25, 0.75]],
                            initial)
    return ProcessSpec('markov_function', chain=chain)


def _covariance_sum(gamma, n):
    """Var(S_n) from an autocovariance function by direct summation."""
    return sum(gamma(abs(i - j)) for i in range(n) for j in range(n))


class TestProcessSpec(StatisticalTestCase):
    def test_unknown_family_is_rejected(self):
        with self.assertRaises(InvalidProcessError) as catcher:
            ProcessSpec('garch')
        self.assertEqual(str(catcher.exception),
                         "Unknown process family 'garch'")

    def test_ar1_needs_a_stable_coefficient(self):
        with self.assertRaises(InvalidProcessError):
            ProcessSpec('ar1', phi=1.0)

    def test_values_must_match_the_chain(self):
        chain = MarkovChainSpec([0, 1], [[0.5, 0.5], [0.5, 0.5]])
        with self.assertRaises(InvalidProcessError):
            ProcessSpec('markov_function', chain=chain, values=[1, 2, 3])

    def test_spec_hash_is_stable_and_distinguishes_specs(self):
        self.assertEqual(ProcessSpec('ar1', phi=0.5).spec_hash(),
                         ProcessSpec('ar1', phi=0.5).spec_hash())
        self.assertNotEqual(ProcessSpec('ar1', phi=0.5).spec_hash(),
                            ProcessSpec('ar1', phi=0.25).spec_hash())
        self.assertEqual(len(ProcessSpec('iid').spec_hash()), 16)

    def test_spec_from_dict_reads_the_json_form(self):
        spec = symmetric_chain_spec()
        rebuilt = processes.spec_from_dict(spec.as_dict())
        self.assertEqual(rebuilt.spec_hash(), spec.spec_hash())


class TestGeneratePath(StatisticalTestCase):
    def test_same_seed_gives_the_same_path(self):
        spec = ProcessSpec('ar1', phi=0.5)
        first = generate_path(spec, 100, 42)
        second = generate_path(spec, 100, 42)
        np.testing.assert_array_equal(first.values, second.values)
        self.assertEqual(first.values.shape, (100, 1))

    def test_different_seeds_give_different_paths(self):
        spec = ProcessSpec('iid')
        self.assertFalse(np.array_equal(generate_path(spec, 10, 1).values,
                                        generate_path(spec, 10, 2).values))

    def test_replications_do_not_depend_on_the_batch_split(self):
        spec = ProcessSpec('ma_q', weights=[1.0, 0.5])
        blocks = dict(generate_paths(spec, 8, 503, 7))
        self.assertEqual(sorted(blocks), [0, 500])
        for replication in (3, 501):
            start = 500 if replication >= 500 else 0
            np.testing.assert_array_equal(
                blocks[start][replication - start],
                generate_path(spec, 8, 7, replication=replication).values)
        np.testing.assert_array_equal(
            simulate_replications(spec, 8, 7, 2, 3)[1],
            generate_path(spec, 8, 7, replication=3).values)

    def test_paths_are_read_only(self):
        path = generate_path(ProcessSpec('iid'), 5, 0)
        with self.assertRaises(ValueError):
            path.values[0, 0] = 1.0

    def test_constant_path(self):
        path = generate_path(ProcessSpec('constant', value=2.5), 4, 0)
        np.testing.assert_array_equal(path.values[:, 0], [2.5] * 4)
        np.testing.assert_array_equal(path.partial_sums()[:, 0],
                                      [0.0, 2.5, 5.0, 7.5, 10.0])

    def test_dimension_gives_independent_coordinates(self):
        path = generate_path(ProcessSpec('iid', dimension=3), 20000, 5)
        self.assertEqual(path.values.shape, (20000, 3))
        correlation = np.corrcoef(path.values.T)
        self.assertLess(np.max(np.abs(correlation - np.eye(3))), 0.04)

    def test_path_length_must_be_positive(self):
        with self.assertRaises(InvalidProcessError):
            generate_path(ProcessSpec('iid'), 0, 0)

    def test_ar1_path_has_the_stationary_variance(self):
        # phi = 1/2: Var X = 4/3 and the sample variance of a path of
        # length L has relative error about 1.3 sqrt(2 / L).
        path = generate_path(ProcessSpec('ar1', phi=0.5),
                             test_settings.MC_SAMPLES, 3).values[:, 0]
        self.assertClose(np.var(path), 4.0 / 3.0, rel=0.03)

    def test_ma_lag_covariances(self):
        path = generate_path(ProcessSpec('ma_q', weights=[1.0, 1.0]),
                             test_settings.MC_SAMPLES, 11).values[:, 0]
        lag1 = np.mean(path[:-1] * path[1:])
        lag2 = np.mean(path[:-2] * path[2:])
        self.assertClose(lag1, 1.0, abs_tol=0.05)
        self.assertClose(lag2, 0.0, abs_tol=0.05)

    def test_non_gaussian_ar1_is_centred_at_its_mean(self):
        spec = ProcessSpec('ar1', innovation=Innovation('uniform', 1.0, 1.0),
                           phi=0.5)
        path = generate_path(spec, test_settings.MC_SAMPLES, 4).values[:, 0]
        self.assertClose(np.mean(path), 2.0, abs_tol=0.03)


class TestLongRunVariance(StatisticalTestCase):
    def test_closed_forms(self):
        self.assertAlmostEqual(long_run_variance(ProcessSpec('iid')), 1.0)
        self.assertAlmostEqual(
            long_run_variance(ProcessSpec('ar1', phi=0.5)), 4.0)
        self.assertAlmostEqual(
            long_run_variance(ProcessSpec('ma_q', weights=[1.0, 1.0])), 4.0)
        self.assertAlmostEqual(long_run_variance(symmetric_chain_spec()), 3.0)

    def test_ar1_partial_sum_variance_matches_direct_summation(self):
        spec = ProcessSpec('ar1', phi=0.5)
        gamma0 = 4.0 / 3.0
        expected = _covariance_sum(lambda h: gamma0 * 0.5 ** h, 10)
        self.assertAlmostEqual(partial_sum_variance(spec, 10), expected)

    def test_ma_partial_sum_variance_matches_direct_summation(self):
        spec = ProcessSpec('ma_q', weights=[1.0, -0.5, 0.25])
        gamma = {0: 1.3125, 1: -0.625, 2: 0.25}
        expected = _covariance_sum(lambda h: gamma.get(h, 0.0), 7)
        self.assertAlmostEqual(partial_sum_variance(spec, 7), expected)

    def test_markov_partial_sum_variance_approaches_the_long_run_variance(
            self):
        spec = symmetric_chain_spec()
        expected = _covariance_sum(lambda h: 0.5 ** h, 6)
        self.assertAlmostEqual(partial_sum_variance(spec, 6), expected)
        self.assertClose(partial_sum_variance(spec, 2000) / 2000.0, 3.0,
                         rel=1e-2)

    def test_simulated_sums_have_the_exact_variance(self):
        spec = ProcessSpec('ar1', phi=0.5)
        n = 1024
        replications = test_settings.VARIANCE_REPLICATIONS
        sums = simulate_replications(spec, n, 9, 0, replications).sum(
            axis=1)[:, 0]
        expected = partial_sum_variance(spec, n)
        self.assertWithinErrors(np.var(sums), expected,
                                expected * math.sqrt(2.0 / replications))

    def test_non_stationary_chain_mean_matches_propagation(self):
        spec = symmetric_chain_spec(initial=[1.0, 0.0])
        self.assertFalse(spec.is_stationary)
        law = np.array([1.0, 0.0])
        expected = 0.0
        for _ in range(7):
            expected += law.dot(spec.values)
            law = law.dot(spec.chain.transition)
        self.assertAlmostEqual(expected_partial_sum(spec, 7), expected)


class TestNorming(StatisticalTestCase):
    def test_iid_norming(self):
        norming = norming_for(ProcessSpec('iid'))
        self.assertAlmostEqual(float(norming.a(100)), 0.1)
        np.testing.assert_array_equal(norming.b(100), [0.0])

    def test_ar1_norming(self):
        norming = norming_for(ProcessSpec('ar1', phi=0.5))
        self.assertAlmostEqual(float(norming.a(100)), 0.05)
        self.assertEqual(norming.long_run_variance, 4.0)

    def test_mean_is_removed(self):
        spec = ProcessSpec('iid', innovation=Innovation(mean=2.0))
        norming = norming_for(spec)
        self.assertAlmostEqual(float(norming.b(25)[0]), -10.0)
        self.assertEqual(norming.b(np.array([4, 9])).shape, (2, 1))

    def test_cancelling_weights_are_degenerate(self):
        with self.assertRaises(DegenerateProcessError):
            norming_for(ProcessSpec('ma_q', weights=[1.0, -1.0]))

    def test_constant_is_degenerate(self):
        with self.assertRaises(DegenerateProcessError):
            norming_for(ProcessSpec('constant', value=1.0))

    def test_validate_norming_accepts_square_root_norming(self):
        norming = NormingSequences(
            lambda n: 1.0 / np.sqrt(np.asarray(n, dtype=float)),
            lambda n: np.zeros(1), '', None, None)
        self.assertTrue(validate_norming(norming, 10000).passed)

    def test_validate_norming_rejects_geometric_norming(self):
        norming = NormingSequences(
            lambda n: 2.0 ** -np.asarray(n, dtype=float),
            lambda n: np.zeros(1), '', None, None)
        report = validate_norming(norming, 100)
        self.assertFalse(report.ratio_pass)
        self.assertFalse(report.passed)

    def test_validate_norming_rejects_constant_norming(self):
        norming = NormingSequences(
            lambda n: np.ones_like(np.asarray(n, dtype=float)),
            lambda n: np.zeros(1), '', None, None)
        report = validate_norming(norming, 100)
        self.assertFalse(report.decay_pass)

    def test_validate_norming_needs_a_tail(self):
        with self.assertRaises(ValueError):
            validate_norming(norming_for(ProcessSpec('iid')), 5)

    def test_normalised_sums_are_standard_normal(self):
        spec = ProcessSpec('ma_q', weights=[1.0, 1.0])
        norming = norming_for(spec)
        n = 512
        sums = simulate_replications(spec, n, 2, 0, 4000).sum(axis=1)[:, 0]
        normalised = float(norming.a(n)) * sums + norming.b(n)[0]
        self.assertLess(ks_distance(normalised, stats.norm.cdf),
                        0.05)


class TestTailsAndBounds(StatisticalTestCase):
    def test_gaussian_tail_is_closed_form(self):
        spec = ProcessSpec('iid')
        tail = tail_function(spec, norming_for(spec))
        self.assertAlmostEqual(float(tail(100, 0.15)),
                               2.0 * stats.norm.sf(1.5))

    def test_chain_tail_is_an_indicator(self):
        spec = symmetric_chain_spec()
        tail = tail_function(spec, norming_for(spec))
        a = 1.0 / math.sqrt(300.0)
        self.assertEqual(float(tail(100, a - 1e-6)), 1.0)
        self.assertEqual(float(tail(100, a + 1e-6)), 0.0)

    def test_monte_carlo_tail_never_understates(self):
        spec = ProcessSpec('iid', dimension=2)
        tail = tail_function(spec, norming_for(spec), seed=1,
                             mc_size=test_settings.MC_SAMPLES)
        # |X| for two standard normals is Rayleigh: P(|X| >= r) = e^-r^2/2.
        exact = math.exp(-0.5 * 1.5 ** 2)
        value = float(tail(100, 0.15))
        self.assertGreaterEqual(value, exact - 0.005)
        self.assertLess(value, exact + 0.01)

    def test_alpha_bounds(self):
        self.assertEqual(
            [alpha for _, alpha in alpha_bound_for(ProcessSpec('iid'),
                                                   [1, 5])], [0.0, 0.0])
        ma = alpha_bound_for(ProcessSpec('ma_q', weights=[1.0, 1.0]), [1, 2])
        self.assertEqual([alpha for _, alpha in ma], [0.25, 0.0])
        ar = alpha_bound_for(ProcessSpec('ar1', phi=0.5), [3])
        self.assertAlmostEqual(ar[3], 0.125 / 4)
        chain = alpha_bound_for(symmetric_chain_spec(), [3])
        self.assertAlmostEqual(chain[3], 0.03125)


class TestExportPath(TemporaryDirectoryTestCase):
    def test_writes_an_index_and_a_value_column(self):
        filename = self.path('path.csv')
        export_path_csv(generate_path(ProcessSpec('iid'), 3, 0), filename)
        lines = self.read('path.csv').decode('utf-8').splitlines()
        self.assertEqual(lines[0], 'index,value')
        self.assertEqual(len(lines), 4)
        self.assertTrue(lines[3].startswith('3,'))

    def test_vector_paths_get_one_column_per_coordinate(self):
        filename = self.path('path.csv')
        export_path_csv(generate_path(ProcessSpec('iid', dimension=2), 2, 0),
                        filename)
        lines = self.read('path.csv').decode('utf-8').splitlines()
        self.assertEqual(lines[0], 'index,value_1,value_2')
