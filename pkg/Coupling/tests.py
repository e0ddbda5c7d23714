from django.test import SimpleTestCase

from qndsim.exceptions import InvalidParameterError
from .physics import (
    coupling_drift, coupling_reduction_factor, coupling_stats, coupling_weight,
    effective_projection_variance, empirical_coupling_stats, prior_variance_factor,
    sample_ensemble, thermal_velocity,
)

R_A = 390e-6
R_C = 310e-6
OMEGA_MAX = 1.0


class CouplingStatsTests(SimpleTestCase):

    def test_reduction_factor_for_reference_cloud(self):
        self.assertAlmostEqual(coupling_reduction_factor(R_A, R_C), 5.166, delta=0.001)

    def test_point_cloud_loses_only_axial_average(self):
        self.assertEqual(coupling_reduction_factor(0.0, R_C), 2.0)

    def test_stats_are_consistent(self):
        stats = coupling_stats(57000, 2.0, R_A, R_C)
        self.assertAlmostEqual(stats.omega_mean, 2.0 / stats.reduction_factor, places=12)
        self.assertAlmostEqual(
            stats.effective_projection_variance, 57000 * stats.omega_sq_mean / 4, places=6)

    def test_prior_factor_matches_definition(self):
        stats = coupling_stats(1000, 3.0, R_A, R_C)
        expected = stats.effective_projection_variance / (stats.omega_mean ** 2 * 1000 / 4)
        self.assertAlmostEqual(prior_variance_factor(R_A, R_C), expected, places=12)
        self.assertAlmostEqual(prior_variance_factor(R_A, R_C), 1.6014, places=4)

    def test_rejects_bad_radii(self):
        with self.assertRaises(InvalidParameterError):
            coupling_reduction_factor(R_A, 0.0)
        with self.assertRaises(InvalidParameterError):
            effective_projection_variance(0, 1.0, R_A, R_C)


class SampleEnsembleTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.ensemble = sample_ensemble(1_000_000, R_A, 14.5e-6, seed=7)

    def test_sampler_reproduces_mean_coupling(self):
        stats = empirical_coupling_stats(self.ensemble, OMEGA_MAX, R_C)
        expected = OMEGA_MAX / coupling_reduction_factor(R_A, R_C)
        self.assertLess(abs(stats['omega_mean'] - expected), 3 * stats['omega_mean_se'])

    def test_sampler_reproduces_projection_variance(self):
        stats = empirical_coupling_stats(self.ensemble, OMEGA_MAX, R_C, n_atoms=57000)
        expected = effective_projection_variance(57000, OMEGA_MAX, R_A, R_C)
        self.assertLess(abs(stats['projection_variance'] - expected), 3 * stats['projection_variance_se'])

    def test_same_seed_same_cloud(self):
        again = sample_ensemble(1000, R_A, 14.5e-6, seed=3)
        self.assertEqual(sample_ensemble(1000, R_A, 14.5e-6, seed=3), again)

    def test_expansion_velocity_is_thermal(self):
        self.assertAlmostEqual(self.ensemble.expansion_velocity, thermal_velocity(14.5e-6), places=12)
        self.assertAlmostEqual(thermal_velocity(14.5e-6), 0.037, delta=0.001)

    def test_weights_bounded_by_peak(self):
        weights = coupling_weight(self.ensemble, OMEGA_MAX, R_C)
        self.assertTrue(((weights > 0) & (weights <= OMEGA_MAX / 2)).all())

    def test_drift_is_zero_at_time_zero(self):
        atom = self.ensemble.atom(0)
        self.assertEqual(coupling_drift(atom, 0.0, R_C), 0.0)

    def test_rejects_empty_cloud(self):
        with self.assertRaises(InvalidParameterError):
            sample_ensemble(0, R_A, 14.5e-6, seed=0)

    def test_rejects_negative_drift_time(self):
        with self.assertRaises(InvalidParameterError):
            coupling_drift(self.ensemble.atom(0), -1.0, R_C)
