import math

import numpy as np
from django.test import SimpleTestCase, TestCase
from django.urls import reverse
from rest_framework import status
from rest_framework.test import APIClient

from Backaction.physics import SpinMoments, squeezing_parameter
from Cavity.physics import time_averaged_photons
from Sequence.physics import PulseSegment, PulseSequence, atom_number_readout, echo_sequence
from qndsim.exceptions import InvalidParameterError, SequenceValidationError
from .engine import (
    BINOMIAL, SHOT_TABLE_HEADERS, ProbeStep, ShotConfig, SliceParams,
    draw_prior, fit_antisqueezing_slope, outcome_variance_model, run_ensemble, run_shot,
    shot_rng, shot_table, slice_schedule, slice_update, variance_interval,
)
from .admin import ShotResultResource
from .models import EnsembleRun, ShotResult

TAU_CAV = 21.7e-6


def make_config(theta=0.0, **kwargs):
    params = dict(
        n_atoms=2000,
        n_ss=1.0,
        omega_bar=1000.0,
        tau_cav=TAU_CAV,
        sequence=echo_sequence(theta=theta),
    )
    params.update(kwargs)
    return ShotConfig(**params)


class SliceRecursionTests(SimpleTestCase):

    def test_repeated_slices_match_closed_forms(self):
        N, q_s = 5000, 0.037
        sp = SliceParams(q=q_s, meas_noise_var=(N / 4) / q_s, phase_noise_sd=0.0)
        m = SpinMoments.coherent(N)
        for slices in range(1, 201):
            m, _ = slice_update(m, sp, 0.0, 0.0)
            self.assertAlmostEqual(m.var_z / ((N / 4) / (1 + slices * q_s)), 1, delta=1e-12)
            self.assertAlmostEqual(m.var_y / ((N / 4) * (1 + slices * q_s)), 1, delta=1e-12)

    def test_schedule_sums_to_leaky_squeezing(self):
        cfg = make_config()
        for step in slice_schedule(cfg):
            if not isinstance(step, ProbeStep):
                continue
            n_bar = time_averaged_photons(cfg.n_ss, step.duration, TAU_CAV)
            expected = squeezing_parameter(cfg.n_atoms, n_bar, cfg.omega_bar, step.duration, TAU_CAV)
            self.assertAlmostEqual(step.q_total / expected, 1, delta=1e-9)

    def test_slices_last_one_photon_lifetime(self):
        cfg = make_config()
        first = slice_schedule(cfg)[0]
        self.assertEqual(len(first.slices), math.ceil(60e-6 / TAU_CAV))

    def test_dark_slice_leaves_moments(self):
        m = SpinMoments.coherent(1000)
        sp = SliceParams(q=0.0, meas_noise_var=0.0, phase_noise_sd=0.0, phase_scale=2.0, offset=0.5)
        updated, phase = slice_update(m, sp, 3.0, 1.7)
        self.assertIs(updated, m)
        self.assertEqual(phase, 6.5)


class PriorTests(SimpleTestCase):

    def test_binomial_prior_has_projection_variance(self):
        draws = draw_prior(shot_rng(11, 0), 1000, BINOMIAL, size=100_000)
        self.assertAlmostEqual(np.var(draws) / 250, 1, delta=0.02)

    def test_streams_depend_on_shot_index(self):
        self.assertNotEqual(shot_rng(5, 0).random(), shot_rng(5, 1).random())
        self.assertEqual(shot_rng(5, 3).random(), shot_rng(5, 3).random())

    def test_binomial_prior_needs_uniform_coupling(self):
        with self.assertRaises(InvalidParameterError):
            make_config(prior=BINOMIAL, prior_factor=1.6)

    def test_sequence_needs_readout(self):
        seq = PulseSequence((PulseSegment.probe(60e-6), PulseSegment.dark(60e-6)))
        with self.assertRaises(SequenceValidationError):
            make_config(sequence=seq)


class ShotTests(SimpleTestCase):

    def test_same_seed_same_shot(self):
        cfg = make_config(theta=0.63, scatter_rate=1e3)
        self.assertEqual(run_shot(cfg, 42, 7), run_shot(cfg, 42, 7))

    def test_trace_covers_every_probe_slice(self):
        cfg = make_config()
        record = run_shot(cfg, 1, 0)
        times, phases = record.phase_trace
        expected = sum(len(step.slices) for step in slice_schedule(cfg) if isinstance(step, ProbeStep))
        self.assertEqual(len(times), expected)
        self.assertEqual(len(phases), expected)

    def test_no_scattering_without_rate(self):
        record = run_shot(make_config(), 3, 0)
        self.assertEqual(record.scattered_count, 0)
        self.assertEqual(record.contrast_multiplier, 1)

    def test_scattering_draws_binomially_per_segment(self):
        cfg = make_config(scatter_rate=2e3)
        schedule = slice_schedule(cfg)
        unscattered = 1.0
        for s in schedule:
            if isinstance(s, ProbeStep) and not s.readout:
                unscattered *= 1 - s.p_scatter
        expected = cfg.n_atoms * (1 - unscattered)
        counts = [run_shot(cfg, 9, i, schedule).scattered_count for i in range(400)]
        self.assertAlmostEqual(np.mean(counts) / expected, 1, delta=0.1)

    def test_atoms_scatter_at_most_once(self):
        cfg = make_config(scatter_rate=4e4, sequence=echo_sequence(tau_meas=30e-6))
        schedule = slice_schedule(cfg)
        p = [s.p_scatter for s in schedule if isinstance(s, ProbeStep) and not s.readout]
        self.assertGreater(min(p), 0.5)
        records = [run_shot(cfg, 13, i, schedule) for i in range(200)]
        for record in records:
            self.assertLessEqual(record.scattered_count, cfg.n_atoms)
            self.assertGreaterEqual(record.contrast_multiplier, 0)
            self.assertLessEqual(record.contrast_multiplier, 1)
        expected = np.prod([1 - x for x in p])
        self.assertAlmostEqual(np.mean([r.contrast_multiplier for r in records]), expected, delta=0.01)

    def test_pulse_must_leave_a_sample_after_dead_time(self):
        with self.assertRaises(SequenceValidationError) as ctx:
            make_config(sequence=echo_sequence(tau_sq=21e-6))
        self.assertEqual(ctx.exception.index, 0)
        record = run_shot(make_config(sequence=echo_sequence(tau_sq=30e-6)), 1, 0)
        self.assertIn(0, record.window_means)

    def test_zero_photons_leave_bare_projection_noise(self):
        cfg = make_config(theta=math.pi / 2, n_ss=0.0)
        bare = cfg.phase_scale ** 2 * cfg.n_atoms / 2
        self.assertAlmostEqual(outcome_variance_model(cfg) / bare, 1, places=12)
        stats = run_ensemble(cfg, 3000, master_seed=17)
        self.assertAlmostEqual(stats.mean_conditional_var, cfg.n_atoms / 4, places=9)
        self.assertLess(abs(stats.variance_of_outcome - bare), 3 * bare * math.sqrt(2 / 2999))


class EnsembleTests(SimpleTestCase):

    def test_law_of_total_variance(self):
        cfg = make_config()
        stats = run_ensemble(cfg, 5000, master_seed=2024)
        total = stats.var_conditional_mean + stats.mean_conditional_var
        se = stats.var_conditional_mean * math.sqrt(2 / 4999)
        self.assertLess(abs(total - cfg.n_atoms / 4), 3 * se)

    def test_conditional_variance_matches_precision_sum(self):
        cfg = make_config()
        stats = run_ensemble(cfg, 10, master_seed=0)
        q = sum(s.q_total for s in slice_schedule(cfg) if isinstance(s, ProbeStep) and not s.readout)
        self.assertAlmostEqual(stats.mean_conditional_var / ((cfg.n_atoms / 4) / (1 + q)), 1, delta=1e-9)

    def test_results_do_not_depend_on_workers(self):
        cfg = make_config(theta=0.63, scatter_rate=1e3)
        serial = run_ensemble(cfg, 40, master_seed=5, workers=1)
        pooled = run_ensemble(cfg, 40, master_seed=5, workers=4)
        self.assertEqual(serial.records, pooled.records)
        self.assertEqual(shot_table(serial).export('csv'), shot_table(pooled).export('csv'))

    def test_outcome_variance_matches_model(self):
        cfg = make_config(theta=math.pi / 4, scatter_rate=1e3)
        stats = run_ensemble(cfg, 2000, master_seed=77)
        model = outcome_variance_model(cfg)
        self.assertEqual(stats.model_variance, model)
        self.assertLess(abs(stats.variance_of_outcome - model), 3 * model * math.sqrt(2 / 1999))

    def test_model_grows_with_rotation_angle(self):
        values = [outcome_variance_model(make_config(theta=t)) for t in (0.0, 0.63, math.pi / 2)]
        self.assertEqual(values, sorted(values))

    def test_scattering_adds_outcome_variance(self):
        sequence = echo_sequence(tau_meas=30e-6)
        clean = make_config(n_ss=100.0, sequence=sequence)
        noisy = make_config(n_ss=100.0, sequence=sequence, scatter_rate=4e2)
        self.assertGreater(outcome_variance_model(noisy), outcome_variance_model(clean))
        without = run_ensemble(clean, 4000, master_seed=21)
        with_scattering = run_ensemble(noisy, 4000, master_seed=21)
        se = math.hypot(without.variance_se, with_scattering.variance_se)
        self.assertGreater(with_scattering.variance_of_outcome - without.variance_of_outcome, 3 * se)

    def test_atom_number_readout_ignores_prior_width(self):
        readout_var, difference_var = {}, {}
        for factor in (1.0, 4.0):
            cfg = make_config(prior_factor=factor, phase_per_atom=1e-3)
            first, second = (i for i, _, _ in cfg.sequence.squeezing_pulses())
            records = run_ensemble(cfg, 1000, master_seed=8).records
            readout_var[factor] = np.var([
                atom_number_readout(r.window_means[first], r.window_means[second], cfg.phase_per_atom)
                for r in records
            ], ddof=1)
            difference_var[factor] = np.var(
                [r.window_means[second] - r.window_means[first] for r in records], ddof=1)
        self.assertAlmostEqual(readout_var[4.0] / readout_var[1.0], 1, places=6)
        self.assertGreater(difference_var[4.0], 1.5 * difference_var[1.0])

    def test_needs_two_shots(self):
        with self.assertRaises(InvalidParameterError):
            run_ensemble(make_config(), 1, master_seed=0)

    def test_histogram_counts_every_shot(self):
        stats = run_ensemble(make_config(), 50, master_seed=3, bins=5)
        self.assertEqual(sum(stats.histogram['counts']), 50)
        self.assertEqual(len(stats.histogram['edges']), 6)


class StatisticsTests(SimpleTestCase):

    def test_exact_line_fit(self):
        fit = fit_antisqueezing_slope([1e4, 3e4, 5e4], [1 + 2e-4 * n for n in (1e4, 3e4, 5e4)])
        self.assertAlmostEqual(fit['slope'], 2e-4, places=15)
        self.assertAlmostEqual(fit['r_squared'], 1, places=12)

    def test_interval_brackets_estimate(self):
        values = shot_rng(0, 0).normal(0, 2, 500)
        variance, se, (low, high) = variance_interval(values)
        self.assertLess(low, variance)
        self.assertGreater(high, variance)
        self.assertGreater(se, 0)

    def test_shot_table_headers(self):
        stats = run_ensemble(make_config(), 3, master_seed=1)
        table = shot_table(stats)
        self.assertEqual(tuple(table.headers), SHOT_TABLE_HEADERS)
        self.assertEqual(table.height, 3)


class EnsembleRunApiTests(TestCase):

    @classmethod
    def setUpTestData(cls):
        stats = run_ensemble(make_config(theta=0.63), 6, master_seed=8)
        cls.ensemble_run = EnsembleRun.record(stats, {'ensemble': {'n_atoms': 2000}}, preset='fig2d', theta_rad=0.63)
        EnsembleRun.record(run_ensemble(make_config(), 4, master_seed=9), {'ensemble': {'n_atoms': 2000}})

    def setUp(self):
        self.client = APIClient()

    def test_record_stores_every_shot(self):
        self.assertTrue(self.ensemble_run.run_id.startswith('RUN-'))
        self.assertEqual(ShotResult.objects.filter(run=self.ensemble_run).count(), 6)

    def test_list_filters_by_preset(self):
        response = self.client.get(reverse('run-list'), {'preset': 'fig2d'})
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['count'], 1)
        self.assertEqual(response.data['results'][0]['run_id'], self.ensemble_run.run_id)

    def test_detail_includes_shots(self):
        response = self.client.get(reverse('run-detail', args=[self.ensemble_run.run_id]))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(len(response.data['shots_data']), 6)
        self.assertEqual(len(response.data['variance_ci']), 2)

    def test_unknown_run_is_404(self):
        response = self.client.get(reverse('run-detail', args=['RUN-NOPE']))
        self.assertEqual(response.status_code, status.HTTP_404_NOT_FOUND)

    def test_admin_export_has_shot_columns(self):
        dataset = ShotResultResource().export()
        self.assertEqual(dataset.height, 10)
        for header in SHOT_TABLE_HEADERS:
            self.assertIn(header, dataset.headers)
