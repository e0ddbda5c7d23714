import math
import warnings

import numpy as np
from django.test import SimpleTestCase

from qndsim.exceptions import InvalidParameterError, ShortTimeValidityWarning
from .physics import (
    LEAKY, SHORT, SpinMoments,
    antisqueezed_variance, antisqueezing_slope, atom_number_scaling, conditional_variance,
    metrological_squeezing_db, probe_phase, scattering_g_sq, scattering_probability,
    squeezing_headroom, squeezing_parameter,
)


class ConditionalVarianceTests(SimpleTestCase):

    def test_leaky_product_is_projection_noise_squared(self):
        rng = np.random.default_rng(2024)
        for _ in range(10_000):
            N = int(rng.integers(1, 10 ** 6))
            n_bar = rng.uniform(0, 100)
            omega = rng.uniform(0, 10)
            t = rng.uniform(0, 1e-3)
            tau = rng.uniform(1e-6, 1e-4)
            product = (conditional_variance(N, n_bar, omega, t, tau, LEAKY)
                       * antisqueezed_variance(N, n_bar, omega, t, tau))
            self.assertAlmostEqual(product / (N / 4) ** 2, 1, delta=1e-12)

    def test_no_light_leaves_projection_noise(self):
        self.assertEqual(conditional_variance(1000, 0.0, 1.0, 1e-5, 2e-5), 250)

    def test_short_time_formula(self):
        q = squeezing_parameter(100, 2.0, 3.0, 0.01, mode=SHORT)
        self.assertAlmostEqual(q, 100 * 2.0 * 9.0 * 1e-4 / 2, places=12)

    def test_short_time_formula_warns_outside_validity(self):
        with self.assertLogs('Backaction.physics', level='WARNING'):
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter('always')
                squeezing_parameter(100, 10.0, 10.0, 1.0, mode=SHORT)
        self.assertTrue(any(issubclass(w.category, ShortTimeValidityWarning) for w in caught))

    def test_leaky_mode_needs_lifetime(self):
        with self.assertRaises(InvalidParameterError):
            squeezing_parameter(100, 1.0, 1.0, 1e-5, tau_cav=None, mode=LEAKY)

    def test_prior_variance_adds_precision(self):
        N, prior = 1000, 400.0
        q = squeezing_parameter(N, 1.0, 2.0, 1e-4, 2e-5)
        expected = 1 / (1 / prior + q / (N / 4))
        self.assertAlmostEqual(
            conditional_variance(N, 1.0, 2.0, 1e-4, 2e-5, prior_variance=prior), expected, places=9)

    def test_slope_is_antisqueezing_per_atom(self):
        N, n_bar, omega, t, tau = 57000, 3.0, 0.4, 60e-6, 21.7e-6
        slope = antisqueezing_slope(n_bar, omega, t, tau)
        self.assertAlmostEqual(antisqueezed_variance(N, n_bar, omega, t, tau) / (N / 4), 1 + slope * N, places=9)

    def test_negative_time_rejected(self):
        with self.assertRaises(InvalidParameterError):
            probe_phase(1.0, 1.0, -1.0)


class SpinMomentsTests(SimpleTestCase):

    def test_coherent_state(self):
        m = SpinMoments.coherent(1000)
        self.assertEqual((m.mean_x, m.var_y, m.var_z, m.n_atoms), (500, 250, 250, 1000))

    def test_contrast_shrinks_mean_spin(self):
        m = SpinMoments.coherent(1000).with_contrast(0.5)
        self.assertEqual(m.mean_x, 250)

    def test_rejects_zero_variance(self):
        with self.assertRaises(InvalidParameterError):
            SpinMoments(j_length=1, mean_x=1, mean_y=0, mean_z=0, var_y=0, var_z=1)


class ScatteringTests(SimpleTestCase):

    def test_probability_formula(self):
        gamma = 2 * math.pi * 6.0666e6
        delta = 2 * math.pi * 1.5e9
        report = scattering_probability(5.0, 1e9, gamma, delta, 60e-6, N=1000, omega_bar=2.0)
        p = 5.0 * 1e9 * gamma * 60e-6 / delta ** 2
        self.assertAlmostEqual(report.p_scatter, p, places=15)
        self.assertAlmostEqual(report.expected_scattered, 1000 * p, places=12)
        self.assertAlmostEqual(report.contrast_multiplier, 1 - p, places=15)

    def test_requires_far_detuning(self):
        with self.assertRaises(InvalidParameterError):
            scattering_probability(1.0, 1.0, 1.0, 5.0, 1.0)

    def test_upper_state_weighting(self):
        self.assertAlmostEqual(scattering_g_sq(2.0, 4.0), 0.5, places=15)


class SqueezingHeadroomTests(SimpleTestCase):

    def test_projection_noise_is_zero_db(self):
        self.assertAlmostEqual(metrological_squeezing_db(250, 1.0, 1000), 0.0, places=12)

    def test_contrast_penalty(self):
        self.assertAlmostEqual(
            metrological_squeezing_db(250, 0.5, 1000), 20 * math.log10(2), places=12)

    def test_reference_budget_reaches_ten_db(self):
        db = squeezing_headroom(57000, 39.9, p_scatter=0.06)
        self.assertGreaterEqual(db, -14)
        self.assertLessEqual(db, -8)

    def test_headroom_improves_with_atom_number(self):
        rows = atom_number_scaling([10 ** 4, 10 ** 5, 10 ** 6], 7e-4, p_scatter=0.01)
        values = [db for _, db in rows]
        self.assertEqual(values, sorted(values, reverse=True))

    def test_rejects_zero_efficiency(self):
        with self.assertRaises(InvalidParameterError):
            squeezing_headroom(1000, 10.0, detection_efficiency=0.0)
