from __future__ import absolute_import

import itertools

import numpy as np
from scipy import stats

from mixmonster.probability import (
    FiniteJointDistribution, GridError, InvalidDistributionError,
    NotHermitianError, Sample, SizeLimitError, alpha_exact,
    cf_grid_distance, check_symmetric_grid, difference_matrix, ecdf,
    empirical_cf, ks_distance, psd_check)
from mixmonster.tests.base import StatisticalTestCase


def _alpha_by_brute_force(pmf):
    """sup |P(A x B) - P(A)P(B)| over every pair of atom subsets."""
    rows, columns = pmf.shape
    best = 0.0
    for a in itertools.product([0, 1], repeat=rows):
        a = np.array(a, dtype=bool)
        for b in itertools.product([0, 1], repeat=columns):
            b = np.array(b, dtype=bool)
            joint = pmf[a][:, b].sum()
            gap = abs(joint - pmf[a].sum() * pmf[:, b].sum())
            best = max(best, gap)
    return best


class TestSample(StatisticalTestCase):
    def test_flat_list_is_one_dimensional(self):
        sample = Sample([1.0, 2.0, 3.0])
        self.assertEqual(sample.d, 1)
        self.assertEqual(sample.size, 3)
        self.assertEqual(list(sample.values()), [1.0, 2.0, 3.0])

    def test_points_are_read_only(self):
        sample = Sample([[1.0, 2.0], [3.0, 4.0]])
        with self.assertRaises(ValueError):
            sample.points[0, 0] = 5.0

    def test_empty_sample_is_rejected(self):
        with self.assertRaises(InvalidDistributionError) as catcher:
            Sample([])
        self.assertEqual(str(catcher.exception), 'Sample must not be empty')

    def test_values_refuses_vector_samples(self):
        with self.assertRaises(InvalidDistributionError):
            Sample([[1.0, 2.0]]).values()


class TestEmpiricalCF(StatisticalTestCase):
    def test_point_mass_at_zero_has_unit_cf(self):
        cf = empirical_cf(Sample([0.0] * 10), np.linspace(-3, 3, 7))
        np.testing.assert_allclose(cf.values, np.ones(7))

    def test_value_at_zero_and_conjugate_symmetry_are_exact(self):
        sample = Sample(self.rng().exponential(1.0, 1000))
        cf = empirical_cf(sample, np.linspace(-2, 2, 9))
        self.assertEqual(cf.values[4], 1.0)
        np.testing.assert_array_equal(cf.values[:4],
                                      np.conj(cf.values[::-1][:4]))

    def test_matches_closed_form_within_sampling_error(self):
        sample = Sample(self.rng().standard_normal(100000))
        grid = np.linspace(-2, 2, 5)
        cf = empirical_cf(sample, grid)
        np.testing.assert_allclose(cf.values, np.exp(-0.5 * grid ** 2),
                                   atol=0.02)

    def test_grid_must_be_odd_and_symmetric(self):
        with self.assertRaises(GridError):
            check_symmetric_grid([-1.0, 1.0])
        with self.assertRaises(GridError):
            check_symmetric_grid([-1.0, 0.0, 2.0])
        with self.assertRaises(GridError):
            check_symmetric_grid([1.0, 0.0, -1.0])

    def test_lookup_off_the_grid_is_an_error(self):
        cf = empirical_cf(Sample([0.5, 1.5]), np.linspace(-1, 1, 5))
        self.assertAlmostEqual(abs(cf.at(0.5)), abs(np.mean(
            np.exp(0.5j * np.array([0.5, 1.5])))))
        with self.assertRaises(GridError):
            cf.at(0.25)

    def test_grid_distance_needs_matching_grids(self):
        self.assertEqual(cf_grid_distance([1.0, 0.5], [1.0, 0.25]), 0.25)
        with self.assertRaises(GridError):
            cf_grid_distance([1.0, 0.5], [1.0])


class TestPSDCheck(StatisticalTestCase):
    def test_identity_is_psd(self):
        result = psd_check(np.eye(3))
        self.assertTrue(result.is_psd)
        self.assertAlmostEqual(result.worst_violation, 1.0)

    def test_indefinite_matrix_reports_smallest_eigenvalue(self):
        result = psd_check([[1.0, 2.0], [2.0, 1.0]])
        self.assertFalse(result.is_psd)
        self.assertAlmostEqual(result.worst_violation, -1.0)

    def test_agrees_with_eigvalsh_on_random_hermitian_matrices(self):
        rng = self.rng()
        for _ in range(20):
            raw = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
            matrix = raw + np.conj(raw.T)
            expected = np.linalg.eigvalsh(matrix)[0]
            result = psd_check(matrix)
            self.assertAlmostEqual(result.worst_violation, expected)
            self.assertEqual(result.is_psd, expected >= -1e-9)

    def test_non_hermitian_matrix_is_rejected(self):
        with self.assertRaises(NotHermitianError):
            psd_check([[1.0, 1.0], [0.0, 1.0]])

    def test_gaussian_difference_matrix_is_psd(self):
        grid = np.linspace(-8, 8, 41)
        matrix = difference_matrix(lambda d: np.exp(-0.5 * d ** 2), grid)
        self.assertEqual(matrix.shape, (41, 41))
        self.assertTrue(psd_check(matrix).is_psd)


class TestKSDistance(StatisticalTestCase):
    def test_single_point_against_uniform(self):
        distance = ks_distance([0.5], lambda x: np.clip(x, 0.0, 1.0))
        self.assertAlmostEqual(distance, 0.5)

    def test_point_mass_against_normal(self):
        self.assertAlmostEqual(ks_distance([0.0] * 5, stats.norm.cdf), 0.5)

    def test_sample_against_its_own_ecdf_is_zero(self):
        sample = Sample([3.0, 1.0, 2.0, 2.0])
        self.assertEqual(ks_distance(sample, ecdf(sample)), 0.0)

    def test_step_reference_uses_both_one_sided_limits(self):
        # Sample at 0, reference a point mass at 1: the gap is 1.
        self.assertEqual(
            ks_distance([0.0], lambda x: (np.asarray(x) >= 1.0) * 1.0), 1.0)

    def test_normal_sample_is_close_to_normal(self):
        sample = self.rng().standard_normal(20000)
        self.assertLess(ks_distance(sample, stats.norm.cdf), 0.02)


class TestFiniteJointDistribution(StatisticalTestCase):
    def test_pmf_must_sum_to_one(self):
        with self.assertRaises(InvalidDistributionError) as catcher:
            FiniteJointDistribution([[0.5, 0.4]])
        self.assertEqual(str(catcher.exception),
                         'Joint pmf sums to 0.9, not 1')

    def test_negative_entries_are_rejected(self):
        with self.assertRaises(InvalidDistributionError):
            FiniteJointDistribution([[1.5, -0.5]])

    def test_margins_and_product(self):
        joint = FiniteJointDistribution([[0.3, 0.2], [0.2, 0.3]])
        np.testing.assert_allclose(joint.marginal_x, [0.5, 0.5])
        np.testing.assert_allclose(joint.product().pmf, np.full((2, 2), 0.25))

    def test_from_pairs_counts_observations(self):
        joint = FiniteJointDistribution.from_pairs([0, 0, 1, 1], [5, 5, 5, 7])
        np.testing.assert_allclose(joint.pmf, [[0.5, 0.0], [0.25, 0.25]])
        self.assertEqual(joint.atoms_z[:, 0].tolist(), [5.0, 7.0])


class TestAlphaExact(StatisticalTestCase):
    def test_independent_law_has_zero_alpha(self):
        pmf = np.outer([0.2, 0.3, 0.5], [0.6, 0.4])
        self.assertAlmostEqual(alpha_exact(FiniteJointDistribution(pmf)), 0.0,
                               places=15)

    def test_identical_fair_bits_reach_the_maximum(self):
        joint = FiniteJointDistribution([[0.5, 0.0], [0.0, 0.5]])
        self.assertAlmostEqual(alpha_exact(joint), 0.25)

    def test_positively_dependent_bits(self):
        joint = FiniteJointDistribution([[0.3, 0.2], [0.2, 0.3]])
        self.assertAlmostEqual(alpha_exact(joint), 0.05)

    def test_agrees_with_brute_force_enumeration(self):
        rng = self.rng()
        for _ in range(10):
            pmf = rng.dirichlet(np.ones(12)).reshape(3, 4)
            self.assertAlmostEqual(alpha_exact(FiniteJointDistribution(pmf)),
                                   _alpha_by_brute_force(pmf), places=12)

    def test_is_symmetric_in_x_and_z(self):
        pmf = self.rng().dirichlet(np.ones(15)).reshape(3, 5)
        joint = FiniteJointDistribution(pmf)
        self.assertAlmostEqual(alpha_exact(joint),
                               alpha_exact(joint.transpose()), places=14)

    def test_is_invariant_under_relabelling(self):
        pmf = self.rng().dirichlet(np.ones(12)).reshape(4, 3)
        relabelled = pmf[[2, 0, 3, 1]][:, [1, 2, 0]]
        self.assertAlmostEqual(
            alpha_exact(FiniteJointDistribution(pmf)),
            alpha_exact(FiniteJointDistribution(relabelled)), places=14)

    def test_refuses_to_enumerate_too_many_atoms(self):
        joint = FiniteJointDistribution(np.full((21, 21), 1.0 / 441))
        with self.assertRaises(SizeLimitError) as catcher:
            alpha_exact(joint)
        self.assertEqual(
            str(catcher.exception),
            'alpha_exact would enumerate 21 atoms, the limit is 20')

    def test_null_atoms_do_not_count_towards_the_limit(self):
        pmf = np.zeros((25, 2))
        pmf[0, 0] = pmf[1, 1] = 0.5
        self.assertAlmostEqual(alpha_exact(FiniteJointDistribution(pmf)),
                               0.25)

    def test_single_atom_has_zero_alpha(self):
        self.assertEqual(alpha_exact(FiniteJointDistribution([[1.0]])), 0.0)
