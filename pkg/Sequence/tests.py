import math

import numpy as np
from django.test import SimpleTestCase
from rest_framework.exceptions import ValidationError

from Backaction.physics import SpinMoments
from Cavity.physics import PhotonDrive
from Coupling.physics import sample_ensemble
from qndsim.exceptions import InvalidParameterError, SequenceValidationError
from .physics import (
    NoiseCurveParams, PulseSegment, PulseSequence,
    atom_number_readout, difference_of_means, echo_contrast, measurement_windows,
    no_echo_sequence, echo_sequence, rotate_moments, rotation_noise_curve,
)
from .serializers import SequenceField, build_sequence


class PulseSequenceTests(SimpleTestCase):

    def test_echo_sequence_layout(self):
        seq = echo_sequence()
        self.assertTrue(seq.well_formed)
        self.assertTrue(seq.has_echo())
        self.assertEqual(len(seq.squeezing_pulses()), 2)
        self.assertAlmostEqual(seq.total_duration, 490e-6, places=12)
        index, start, segment = seq.readout_pulse()
        self.assertEqual(index, 6)
        self.assertAlmostEqual(start, 290e-6, places=12)
        self.assertTrue(segment.readout)

    def test_no_echo_control_has_no_echo(self):
        self.assertFalse(no_echo_sequence().has_echo())

    def test_adjacent_probe_pulses_rejected(self):
        with self.assertRaises(SequenceValidationError) as ctx:
            PulseSequence((PulseSegment.probe(1e-5), PulseSegment.probe(1e-5)))
        self.assertEqual(ctx.exception.index, 1)

    def test_microwave_inside_probe_window_rejected(self):
        with self.assertRaises(SequenceValidationError) as ctx:
            PulseSequence((PulseSegment.probe(1e-5), PulseSegment.microwave(5e-5, math.pi)))
        self.assertEqual(ctx.exception.index, 1)

    def test_negative_duration_rejected(self):
        with self.assertRaises(SequenceValidationError) as ctx:
            PulseSequence((PulseSegment.dark(1e-5), PulseSegment.dark(-1e-6)))
        self.assertEqual(ctx.exception.index, 1)

    def test_transit_limit(self):
        with self.assertRaises(SequenceValidationError):
            PulseSequence((PulseSegment.probe(2e-3), PulseSegment.dark(2e-3)))

    def test_readout_must_be_last_probe(self):
        with self.assertRaises(SequenceValidationError):
            PulseSequence((
                PulseSegment.probe(1e-4, readout=True), PulseSegment.dark(1e-5), PulseSegment.probe(1e-4),
            ))

    def test_final_rotation_replaces_last_microwave(self):
        seq = echo_sequence().with_final_rotation(0.63)
        segment = seq.segments[5]
        self.assertEqual(segment.rotation_angle, 0.63)
        self.assertEqual(segment.duration, 0.0)
        self.assertEqual(seq.segments[2].rotation_angle, math.pi)

    def test_final_rotation_with_pi_time(self):
        seq = echo_sequence().with_final_rotation(math.pi / 2, tau_pi=50e-6)
        self.assertAlmostEqual(seq.segments[5].duration, 25e-6, places=15)


class RotationTests(SimpleTestCase):

    def test_quarter_turn_swaps_variances(self):
        m = SpinMoments(j_length=500, mean_x=500, mean_y=0, mean_z=3.0, var_y=900, var_z=40)
        rotated = rotate_moments(m, math.pi / 2)
        self.assertAlmostEqual(rotated.var_z, 900, places=9)
        self.assertAlmostEqual(rotated.var_y, 40, places=9)
        self.assertAlmostEqual(rotated.mean_x, 500, places=9)

    def test_pi_pulse_flips_jz(self):
        m = SpinMoments(j_length=500, mean_x=500, mean_y=0, mean_z=3.0, var_y=900, var_z=40)
        self.assertAlmostEqual(rotate_moments(m, math.pi).mean_z, -3.0, places=9)

    def test_noise_curve_is_monotone_with_expected_endpoints(self):
        params = NoiseCurveParams(var_z=0.04, var_y=41.0, v_floor=0.5)
        thetas = np.linspace(0, math.pi / 2, 33)
        values = [v for _, v in rotation_noise_curve(params, thetas)]
        self.assertAlmostEqual(values[0], 0.54, places=12)
        self.assertAlmostEqual(values[-1], 41.5, places=12)
        self.assertTrue(all(b >= a for a, b in zip(values, values[1:])))


class EchoContrastTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.ensemble = sample_ensemble(20000, 390e-6, 14.5e-6, seed=1, drift_velocity=0.029)
        cls.common = dict(tau_cav=21.7e-6, omega_max=2 * math.pi * 20.0, r_c=310e-6)

    def test_no_light_keeps_full_contrast(self):
        drive = PhotonDrive(n_ss=0.0, n_bar=0.0)
        self.assertAlmostEqual(echo_contrast(self.ensemble, drive, echo_sequence(), **self.common), 1, places=9)

    def test_scattering_scales_contrast(self):
        drive = PhotonDrive(n_ss=0.0, n_bar=0.0)
        contrast = echo_contrast(self.ensemble, drive, echo_sequence(), p_scatter=0.1, **self.common)
        self.assertAlmostEqual(contrast, 0.9, places=9)

    def test_echo_beats_single_long_pulse(self):
        drive = PhotonDrive(n_ss=2000.0, n_bar=0.0)
        echoed = echo_contrast(self.ensemble, drive, echo_sequence(), **self.common)
        single = echo_contrast(self.ensemble, drive, no_echo_sequence(tau_pulse=120e-6),
                               require_echo=False, **self.common)
        self.assertGreater(echoed, single)

    def test_requires_echo_by_default(self):
        drive = PhotonDrive(n_ss=1.0, n_bar=0.0)
        with self.assertRaises(SequenceValidationError):
            echo_contrast(self.ensemble, drive, no_echo_sequence(), **self.common)


class TraceTests(SimpleTestCase):

    def test_difference_of_means(self):
        times = np.arange(10.0)
        phases = np.array([1, 1, 1, 1, 1, 3, 3, 3, 3, 3], dtype=float)
        self.assertEqual(difference_of_means((times, phases), (0, 5), (5, 10)), 2.0)

    def test_pairs_are_accepted(self):
        pairs = [(0.0, 1.0), (1.0, 2.0)]
        self.assertEqual(difference_of_means(pairs, (0, 0.5), (0.5, 1.5)), 1.0)

    def test_empty_window_rejected(self):
        with self.assertRaises(InvalidParameterError):
            difference_of_means(([0.0], [1.0]), (0, 1), (5, 6))

    def test_atom_number_from_echo_halves(self):
        # J_z flips sign across the π pulse; N-dependent offset of 4.0 per pulse
        self.assertAlmostEqual(atom_number_readout(4.3, 3.7, phase_per_atom=2e-4), 20000.0, places=6)

    def test_windows_skip_dead_time(self):
        windows = measurement_windows(echo_sequence(), 20e-6)
        self.assertEqual(len(windows['squeeze']), 2)
        start, end = windows['readout']
        self.assertAlmostEqual(start, 310e-6, places=12)
        self.assertAlmostEqual(end, 490e-6, places=12)

    def test_dead_time_longer_than_pulse_rejected(self):
        with self.assertRaises(SequenceValidationError):
            measurement_windows(echo_sequence(), 100e-6)


class SequenceFieldTests(SimpleTestCase):

    def test_preset_expands_to_segments(self):
        items = SequenceField().run_validation('echo')
        seq = build_sequence(items)
        self.assertEqual([s.kind for s in seq.segments], [s.kind for s in echo_sequence().segments])
        self.assertAlmostEqual(seq.total_duration, echo_sequence().total_duration, places=12)
        self.assertEqual(SequenceField().run_validation(items), items)

    def test_error_points_at_segment(self):
        field = SequenceField()
        with self.assertRaises(ValidationError) as ctx:
            field.run_validation([
                {'kind': 'probe_on', 'duration_us': 60},
                {'kind': 'probe_on', 'duration_us': 60},
            ])
        self.assertIn(1, ctx.exception.detail)

    def test_rotation_fields_rejected_on_probe(self):
        with self.assertRaises(ValidationError) as ctx:
            SequenceField().run_validation([{'kind': 'probe_on', 'duration_us': 60, 'angle_rad': 1.0}])
        self.assertIn('angle_rad', ctx.exception.detail[0])
