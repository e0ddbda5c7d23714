import math

from django.test import SimpleTestCase
from scipy import integrate

from qndsim.exceptions import InvalidParameterError
from .physics import (
    CavitySpec, ProbeSpec, PhotonDrive, HYPERFINE_SPLITTING,
    buildup_fraction, derive_cavity, dispersive_shift_rate, photon_drive, photons_between,
    stark_shift, steady_state_photons, time_averaged_photons,
)
from .serializers import CavitySerializer, ProbeSerializer

REFERENCE_CAVITY = CavitySpec(length=0.10, finesse=205000, mode_waist=310e-6, g_max=2 * math.pi * 53e3)


def reference_probe(**kwargs):
    params = dict(input_power=2.5e-9, wavelength=780.241e-9, eta_in=0.35)
    params.update(kwargs)
    return ProbeSpec.red_of_upper(-2 * math.pi * 1.5e9, **params)


class DeriveCavityTests(SimpleTestCase):

    def test_reference_cavity_matches_quoted_values(self):
        derived = derive_cavity(REFERENCE_CAVITY)
        self.assertAlmostEqual(derived.fsr / 1.505e9, 1, delta=0.02)
        self.assertAlmostEqual(derived.hwhm / 3.7e3, 1, delta=0.02)
        self.assertAlmostEqual(derived.tau_cav / 21.5e-6, 1, delta=0.02)

    def test_lifetime_is_half_inverse_kappa(self):
        derived = derive_cavity(REFERENCE_CAVITY)
        self.assertAlmostEqual(derived.tau_cav * 2 * derived.kappa, 1, places=12)

    def test_rejects_non_positive_length(self):
        with self.assertRaises(InvalidParameterError):
            CavitySpec(length=0, finesse=205000, mode_waist=310e-6, g_max=1.0)


class ProbeSpecTests(SimpleTestCase):

    def test_detunings_must_differ_by_hyperfine_splitting(self):
        with self.assertRaises(InvalidParameterError):
            ProbeSpec(delta_1=-2 * math.pi * 3e9, delta_2=-2 * math.pi * 1.5e9,
                      input_power=1e-9, wavelength=780e-9)

    def test_red_of_upper_places_lower_transition(self):
        probe = reference_probe()
        self.assertAlmostEqual(probe.delta_2 - probe.delta_1, HYPERFINE_SPLITTING, places=0)

    def test_shift_rate_positive_for_red_detuning_between_lines(self):
        probe = reference_probe()
        self.assertNotEqual(dispersive_shift_rate(REFERENCE_CAVITY.g_max, probe.delta_1, probe.delta_2), 0)


class PhotonNumberTests(SimpleTestCase):

    def test_steady_state_is_linear_in_power(self):
        derived = derive_cavity(REFERENCE_CAVITY)
        low = steady_state_photons(reference_probe(input_power=1.2e-9), derived)
        high = steady_state_photons(reference_probe(input_power=2.5e-9), derived)
        self.assertAlmostEqual(high / low, 2.5 / 1.2, places=12)

    def test_buildup_fraction_matches_quadrature(self):
        tau = 21.7e-6
        for duration in (1e-7, 20e-6, 60e-6, 400e-6):
            expected, _ = integrate.quad(
                lambda t: (1 - math.exp(-t / (2 * tau))) ** 2, 0, duration)
            self.assertAlmostEqual(buildup_fraction(duration, tau), expected / duration, places=9)

    def test_buildup_fraction_tends_to_one(self):
        self.assertGreater(buildup_fraction(1.0, 21.7e-6), 0.999)

    def test_photons_between_telescopes(self):
        n_ss, tau = 7.3, 21.7e-6
        bounds = [0.0, 21.7e-6, 43.4e-6, 60e-6]
        pieces = sum(photons_between(n_ss, a, b, tau) for a, b in zip(bounds, bounds[1:]))
        whole = time_averaged_photons(n_ss, 60e-6, tau) * 60e-6
        self.assertAlmostEqual(pieces / whole, 1, places=12)

    def test_empty_interval_has_no_photons(self):
        self.assertEqual(photons_between(5.0, 1e-5, 1e-5, 2e-5), 0.0)

    def test_drive_rejects_mean_above_steady_state(self):
        with self.assertRaises(InvalidParameterError):
            PhotonDrive(n_ss=1.0, n_bar=2.0)

    def test_photon_drive_mean_below_steady_state(self):
        drive = photon_drive(reference_probe(), derive_cavity(REFERENCE_CAVITY), 60e-6)
        self.assertLess(drive.n_bar, drive.n_ss)

    def test_stark_shift_scales_inversely_with_detuning(self):
        near = stark_shift(10.0, 1e9, 2 * math.pi * 1e9)
        far = stark_shift(10.0, 1e9, 2 * math.pi * 2e9)
        self.assertAlmostEqual(near / far, 2, places=12)


class CavitySerializerTests(SimpleTestCase):

    def test_rejects_unknown_key(self):
        serializer = CavitySerializer(data={
            'length_cm': 10, 'finesse': 205000, 'mode_waist_um': 310, 'g_max_khz': 53, 'length_m': 0.1,
        })
        self.assertFalse(serializer.is_valid())
        self.assertIn('length_m', serializer.errors)

    def test_probe_fills_lower_detuning(self):
        serializer = ProbeSerializer(data={'delta_2_ghz': -1.5, 'power_nw': 2.5})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertAlmostEqual(serializer.validated_data['delta_1_ghz'], -1.5 - 6.834682610904, places=9)
        self.assertEqual(serializer.validated_data['eta_in'], 0.35)

    def test_probe_accepts_auto_eta(self):
        serializer = ProbeSerializer(data={'delta_2_ghz': -1.5, 'power_nw': 2.5, 'eta_in': 'auto'})
        self.assertTrue(serializer.is_valid(), serializer.errors)

    def test_probe_rejects_eta_out_of_range(self):
        serializer = ProbeSerializer(data={'delta_2_ghz': -1.5, 'power_nw': 2.5, 'eta_in': 1.5})
        self.assertFalse(serializer.is_valid())
        self.assertIn('eta_in', serializer.errors)
