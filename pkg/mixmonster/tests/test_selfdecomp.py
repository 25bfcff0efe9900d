from __future__ import absolute_import

import math

import numpy as np
from scipy import integrate, stats

from mixmonster.probability import (
    GridError, Sample, difference_matrix, ecdf, empirical_cf, ks_distance)
from mixmonster.selfdecomp import (
    BDLPSpec, FAIL, FINITE, INCONCLUSIVE, InvalidBDLPError,
    InvalidScaleError, JumpLaw, PASS, SUSPECT_INFINITE, default_grid,
    exponential_cf, gaussian_cf, hill_tail_index, integral_moments,
    log_moment_check, required_frequencies, sample_random_integral,
    scale_sample, selfdecomp_test, uniform_cf)
from mixmonster.tests import settings as test_settings
from mixmonster.tests.base import StatisticalTestCase, \
    standard_error_of_variance


class TestScaleSample(StatisticalTestCase):
    def test_identity_scale(self):
        sample = Sample([1.0, -2.0, 3.5])
        np.testing.assert_array_equal(scale_sample(sample, 1.0).points,
                                      sample.points)

    def test_point_mass_is_moved(self):
        np.testing.assert_array_equal(scale_sample([2.0], 0.25).values(),
                                      [0.5])

    def test_composition_and_distributivity(self):
        rng = self.rng()
        x = Sample(rng.standard_normal(1000))
        y = Sample(rng.standard_normal(1000))
        np.testing.assert_array_equal(
            scale_sample(scale_sample(x, 0.5), 0.25).points,
            scale_sample(x, 0.125).points)
        np.testing.assert_array_equal(
            scale_sample(Sample(x.points + y.points), 0.5).points,
            scale_sample(x, 0.5).points + scale_sample(y, 0.5).points)

    def test_scales_the_variance(self):
        sample = Sample(self.rng().standard_normal(test_settings.MC_SAMPLES))
        variance = np.var(scale_sample(sample, 0.5).values())
        self.assertWithinErrors(variance, 0.25, standard_error_of_variance(
            0.25, test_settings.MC_SAMPLES))

    def test_zero_scale_is_rejected(self):
        with self.assertRaises(InvalidScaleError) as catcher:
            scale_sample([1.0], 0)
        self.assertEqual(str(catcher.exception),
                         'T_c is only defined for c != 0')


class TestClosedFormSelfdecomp(StatisticalTestCase):
    def test_gaussian_passes_for_every_c(self):
        report = selfdecomp_test(gaussian_cf(), [0.3, 0.5, 0.8])
        self.assertEqual(report.verdict, PASS)
        self.assertEqual(report.c_values, [0.3, 0.5, 0.8])

    def test_gaussian_cofactor_is_gaussian(self):
        grid = default_grid()
        phi = gaussian_cf()
        for c in (0.3, 0.5, 0.8):
            ratio = difference_matrix(lambda d: phi(d) / phi(c * d), grid)
            cofactor = difference_matrix(gaussian_cf(math.sqrt(1 - c ** 2)),
                                         grid)
            np.testing.assert_allclose(ratio, cofactor, atol=1e-12)

    def test_exponential_passes(self):
        self.assertEqual(
            selfdecomp_test(exponential_cf(2.0), [0.3, 0.5, 0.8]).verdict,
            PASS)

    def test_uniform_fails(self):
        report = selfdecomp_test(uniform_cf(), [0.3, 0.5, 0.8])
        self.assertEqual(report.verdict, FAIL)
        self.assertFalse(report.rows[-1].psd_pass)
        self.assertLess(report.rows[-1].worst_violation, 0)

    def test_small_denominators_make_c_inconclusive(self):
        report = selfdecomp_test(gaussian_cf(), [0.5], floor=2.0)
        self.assertEqual(report.verdict, INCONCLUSIVE)
        self.assertEqual(report.rows[0].inconclusive_at, 0.0)
        self.assertIsNone(report.rows[0].worst_violation)

    def test_c_must_lie_strictly_between_zero_and_one(self):
        for c in (0.0, 1.0, 1.5):
            with self.assertRaises(InvalidScaleError):
                selfdecomp_test(gaussian_cf(), [c])

    def test_rows_have_the_report_fields(self):
        rows = selfdecomp_test(gaussian_cf(), [0.5]).as_rows()
        self.assertEqual(
            sorted(rows[0]),
            ['c', 'grid_radius', 'inconclusive_at', 'psd_pass',
             'worst_violation'])


class TestEmpiricalSelfdecomp(StatisticalTestCase):
    def test_normal_sample_passes_on_a_coarse_grid(self):
        sample = Sample(self.rng().standard_normal(test_settings.MC_SAMPLES))
        report = selfdecomp_test(sample, [0.3, 0.5, 0.8], grid_radius=1.0,
                                 grid_size=3)
        self.assertEqual(report.verdict, PASS)
        self.assertTrue(report.source.startswith('empirical'))
        self.assertEqual(report.tolerance, 1e-3)

    def test_precomputed_empirical_cf_must_cover_the_frequencies(self):
        sample = Sample(self.rng().standard_normal(1000))
        cf = empirical_cf(sample, np.linspace(-1, 1, 3))
        with self.assertRaises(GridError):
            selfdecomp_test(cf, [0.5], grid_radius=1.0, grid_size=3)

    def test_required_frequencies_form_a_symmetric_grid(self):
        frequencies = required_frequencies([0.5], default_grid(1.0, 3))
        np.testing.assert_allclose(frequencies,
                                   [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0])


def _gaussian_log_moment():
    """E log(1 + |Z|) for a standard normal Z."""
    value, _ = integrate.quad(
        lambda z: 2.0 * math.log1p(z) * stats.norm.pdf(z), 0, np.inf)
    return value


class TestRandomIntegral(StatisticalTestCase):
    def test_drift_only_integral_does_not_depend_on_the_partition(self):
        bdlp = BDLPSpec(drift=2.0)
        expected = 2.0 * -math.expm1(-20.0)
        for n_steps in (1, 7, 200):
            values = sample_random_integral(bdlp, 20.0, n_steps, 10, 0)
            np.testing.assert_array_equal(values.values(), [expected] * 10)
        self.assertAlmostEqual(expected, 2.0, places=8)

    def test_gaussian_driver_gives_variance_one_half(self):
        bdlp = BDLPSpec(gaussian_sigma=1.0)
        sample = sample_random_integral(bdlp, 20.0, 200,
                                        test_settings.MC_SAMPLES, 1)
        self.assertWithinErrors(np.var(sample.values()), 0.5,
                                standard_error_of_variance(
                                    0.5, test_settings.MC_SAMPLES))
        self.assertLess(ks_distance(sample, stats.norm(0, math.sqrt(0.5)).cdf),
                        0.01)

    def test_compound_poisson_moments(self):
        bdlp = BDLPSpec(jump_rate=1.0,
                        jump_law=JumpLaw('discrete', [-1.0, 1.0], [0.5, 0.5]))
        values = sample_random_integral(bdlp, 20.0, 200,
                                        test_settings.MC_SAMPLES, 2).values()
        moments = integral_moments(bdlp, 20.0)
        self.assertAlmostEqual(moments['variance'], 0.5)
        self.assertAlmostEqual(moments['mean'], 0.0)
        self.assertClose(np.mean(values), 0.0, abs_tol=0.01)
        self.assertClose(np.var(values), 0.5, rel=0.05)

    def test_exponential_jumps_match_their_moments(self):
        bdlp = BDLPSpec(drift=0.5, jump_rate=2.0,
                        jump_law=JumpLaw('exponential', scale=1.0))
        values = sample_random_integral(bdlp, 20.0, 50,
                                        test_settings.MC_SAMPLES, 3).values()
        moments = integral_moments(bdlp, 20.0)
        self.assertAlmostEqual(moments['mean'], 2.5)
        self.assertAlmostEqual(moments['variance'], 2.0)
        self.assertClose(np.mean(values), 2.5, abs_tol=0.03)
        self.assertClose(np.var(values), 2.0, rel=0.05)

    def test_refining_the_partition_keeps_the_law(self):
        bdlp = BDLPSpec(gaussian_sigma=1.0, jump_rate=1.0,
                        jump_law=JumpLaw('normal', scale=0.5))
        coarse = sample_random_integral(bdlp, 20.0, 100,
                                        test_settings.MC_SAMPLES, 4)
        fine = sample_random_integral(bdlp, 20.0, 200,
                                      test_settings.MC_SAMPLES, 4)
        self.assertLess(ks_distance(fine, ecdf(coarse)), 0.01)

    def test_sampled_integral_is_selfdecomposable(self):
        bdlp = BDLPSpec(gaussian_sigma=1.0, jump_rate=1.0,
                        jump_law=JumpLaw('exponential', scale=1.0))
        sample = sample_random_integral(bdlp, 20.0, 50,
                                        test_settings.MC_SAMPLES, 5)
        report = selfdecomp_test(sample, [0.5], grid_radius=1.0, grid_size=3)
        self.assertNotEqual(report.verdict, FAIL)

    def test_parameters_are_validated(self):
        bdlp = BDLPSpec(drift=1.0)
        with self.assertRaises(InvalidBDLPError):
            sample_random_integral(bdlp, 20.0, 0, 10, 0)
        with self.assertRaises(InvalidBDLPError) as catcher:
            sample_random_integral(bdlp, 1.0, 10, 10, 0)
        self.assertEqual(str(catcher.exception),
                         'T_max must be at least 5, got 1.0')
        with self.assertRaises(InvalidBDLPError):
            BDLPSpec(gaussian_sigma=-1.0)
        with self.assertRaises(InvalidBDLPError):
            BDLPSpec(jump_rate=1.0)
        with self.assertRaises(InvalidBDLPError):
            JumpLaw('discrete', [1.0, 2.0], [0.5, 0.6])


class TestLogMoment(StatisticalTestCase):
    def test_drift_only_log_moment_is_exact(self):
        report = log_moment_check(BDLPSpec(drift=1.0), 1000)
        self.assertAlmostEqual(report.estimate, math.log(2.0), places=12)
        self.assertEqual(report.diagnostic, FINITE)

    def test_gaussian_log_moment(self):
        report = log_moment_check(BDLPSpec(gaussian_sigma=1.0),
                                  test_settings.MC_SAMPLES, seed=1)
        self.assertClose(report.estimate, _gaussian_log_moment(),
                         abs_tol=0.02)
        self.assertEqual(report.diagnostic, FINITE)

    def test_doubly_exponential_jumps_are_suspect(self):
        bdlp = BDLPSpec(jump_rate=1.0, jump_law=JumpLaw('doubly-exponential'))
        report = log_moment_check(bdlp, test_settings.MC_SAMPLES, seed=2)
        self.assertEqual(report.diagnostic, SUSPECT_INFINITE)
        self.assertTrue(np.isfinite(report.estimate))

    def test_doubly_exponential_integrals_are_refused(self):
        bdlp = BDLPSpec(jump_rate=1.0, jump_law=JumpLaw('doubly-exponential'))
        with self.assertRaises(InvalidBDLPError):
            sample_random_integral(bdlp, 20.0, 10, 10, 0)

    def test_hill_index_of_a_flat_top_is_infinite(self):
        self.assertEqual(hill_tail_index(np.ones(100)), float('inf'))

    def test_hill_index_of_a_pareto_sample(self):
        values = stats.pareto(1.0).rvs(size=test_settings.MC_SAMPLES,
                                       random_state=self.rng())
        self.assertClose(hill_tail_index(values), 1.0, rel=0.2)

    def test_needs_enough_samples(self):
        with self.assertRaises(ValueError):
            log_moment_check(BDLPSpec(drift=1.0), 10)
