import copy
import json
import math
import tempfile
from io import StringIO
from pathlib import Path

import tablib
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase
from django.urls import reverse
from rest_framework import status
from rest_framework.test import APIClient

from MonteCarlo.engine import SHOT_TABLE_HEADERS, outcome_variance_model
from MonteCarlo.models import EnsembleRun
from qndsim.exceptions import ConfigValidationError
from .config import read_config, validate_config
from .emit import render
from .presets import ECHO_SEQUENCE
from .services import (
    antisqueezing_mc, antisqueezing_table, contrasts, derive_table, mc_run,
    noise_curve_params, rotation_noise_table, slope_ratio, sweep_table,
)


def quantities(table):
    return {row['quantity']: row['value'] for row in table.dict}


class ConfigValidationTests(SimpleTestCase):

    def test_empty_file_lists_required_sections(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'empty.json'
            path.write_text('')
            with self.assertRaises(ConfigValidationError) as ctx:
                validate_config(str(path))
        paths = {p for p, _ in ctx.exception.errors}
        self.assertTrue({'/cavity', '/probe', '/ensemble'} <= paths)

    def test_fig2d_preset_resolves(self):
        cfg = validate_config({'preset': 'fig2d'})
        self.assertEqual(cfg.n_atoms, 57000)
        self.assertEqual(cfg.data['probe']['power_nw'], 2.5)
        durations = [item['duration_us'] for item in cfg.data['sequence']]
        self.assertEqual(durations[:3], [60.0, 60.0, 50.0])
        self.assertEqual(durations[3], 60.0)
        self.assertAlmostEqual(cfg.theta, 0.63)

    def test_negative_atom_number_is_single_error(self):
        with self.assertRaises(ConfigValidationError) as ctx:
            validate_config({'preset': 'fig2d', 'ensemble': {'n_atoms': -5}})
        self.assertEqual(ctx.exception.errors, [('/ensemble/n_atoms', 'Atom number must be at least 1')])

    def test_unknown_key_rejected(self):
        with self.assertRaises(ConfigValidationError) as ctx:
            validate_config({'preset': 'fig2d', 'cavity': {'length_m': 0.1}})
        self.assertIn(('/cavity/length_m', 'Unknown key.'), ctx.exception.errors)

    def test_unknown_preset(self):
        with self.assertRaises(ConfigValidationError) as ctx:
            validate_config({'preset': 'fig9'})
        self.assertEqual(ctx.exception.errors[0][0], '/preset')

    def test_malformed_sequence_points_at_segment(self):
        with self.assertRaises(ConfigValidationError) as ctx:
            validate_config({'preset': 'fig2d', 'sequence': [
                {'kind': 'probe_on', 'duration_us': 60},
                {'kind': 'microwave', 'duration_us': 50, 'angle_rad': math.pi},
                {'kind': 'probe_on', 'duration_us': 400, 'readout': True},
            ]})
        self.assertEqual(ctx.exception.errors[0][0], '/sequence/1')

    def test_resolved_config_round_trips(self):
        cfg = validate_config({'preset': 'fig2d'})
        again = validate_config(json.loads(json.dumps(cfg.to_dict())))
        self.assertEqual(cfg, again)

    def test_auto_eta_is_resolved(self):
        cfg = validate_config({'preset': 'fig2d'})
        eta = cfg.data['probe']['eta_in']
        self.assertIsInstance(eta, float)
        self.assertAlmostEqual(eta, 0.9985, delta=0.001)

    def test_zero_theta_resets_final_rotation(self):
        sequence = copy.deepcopy(ECHO_SEQUENCE)
        sequence[5]['angle_rad'] = 1.0
        own = validate_config({'preset': 'fig2d', 'sequence': sequence, 'model': {'theta_rad': None}})
        self.assertEqual(own.theta, 1.0)
        self.assertEqual(own.sequence.segments[5].rotation_angle, 1.0)
        reset = validate_config({'preset': 'fig2d', 'sequence': sequence, 'model': {'theta_rad': 0.0}})
        self.assertEqual(reset.theta, 0.0)
        self.assertEqual(reset.sequence.segments[5].rotation_angle, 0.0)

    def test_antisqueezing_presets_share_reference_calibration(self):
        reference = validate_config({'preset': 'fig2d'}).data['probe']['eta_in']
        for name in ('fig3_low', 'fig3_high'):
            self.assertEqual(validate_config({'preset': name}).data['probe']['eta_in'], reference)

    def test_overrides_use_dotted_paths(self):
        cfg = validate_config({'preset': 'fig2d'}, {'mc.shots': 10, 'model.theta_rad': 0.0})
        self.assertEqual(cfg.mc['shots'], 10)
        self.assertEqual(cfg.theta, 0.0)

    def test_binomial_prior_requires_uniform_coupling(self):
        with self.assertRaises(ConfigValidationError) as ctx:
            validate_config({'preset': 'fig2d', 'model': {'prior': 'binomial'}})
        self.assertEqual(ctx.exception.errors[0][0], '/model/prior')

    def test_invalid_json(self):
        with self.assertRaises(ConfigValidationError):
            read_config('{"cavity": ')


class DeriveTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.cfg = validate_config({'preset': 'fig2d'})
        cls.values = quantities(derive_table(cls.cfg))

    def test_cavity_rows(self):
        self.assertAlmostEqual(self.values['fsr'] / 1.505e9, 1, delta=0.02)
        self.assertAlmostEqual(self.values['hwhm'] / 3.7e3, 1, delta=0.02)
        self.assertAlmostEqual(self.values['tau_cav'] / 21.5, 1, delta=0.02)
        self.assertAlmostEqual(self.values['reduction_factor'], 5.166, delta=0.001)

    def test_calibration_hits_scattering_bound(self):
        self.assertAlmostEqual(self.values['p_scatter_prep'], 0.06, places=9)

    def test_readout_scattering_band(self):
        self.assertGreaterEqual(self.values['p_scatter_readout'], 0.20)
        self.assertLessEqual(self.values['p_scatter_readout'], 0.40)

    def test_headroom_band(self):
        self.assertGreaterEqual(self.values['squeezing_headroom'], -14)
        self.assertLessEqual(self.values['squeezing_headroom'], -8)

    def test_conditional_and_antisqueezed_rows(self):
        q = self.values['q_total']
        self.assertAlmostEqual(self.values['conditional_var_norm'] * self.values['antisqueezed_var_norm'], 1,
                               places=12)
        self.assertGreater(q, 1)


class ContrastTests(SimpleTestCase):

    def test_echo_contrast_band_and_control(self):
        cfg = validate_config({'preset': 'contrast73'})
        echo, control = contrasts(cfg)
        self.assertGreaterEqual(echo, 0.60)
        self.assertLessEqual(echo, 0.85)
        self.assertLess(abs(control - echo) / echo, 0.10)


class CurveTests(SimpleTestCase):

    def test_analytic_slope_ratio_is_power_ratio(self):
        rows, slopes = antisqueezing_table(validate_config({'preset': 'fig3_high'}))
        self.assertAlmostEqual(slope_ratio(slopes), 2.5 / 1.2, places=12)
        self.assertEqual(rows.height, 6)

    def test_monte_carlo_slope_ratio(self):
        cfg = validate_config({'preset': 'fig3_high', 'model': {'coupling': 'uniform', 'scattering': False}})
        _, slopes = antisqueezing_mc(cfg, shots=10000, master_seed=31)
        self.assertAlmostEqual(slope_ratio(slopes) / (2.5 / 1.2), 1, delta=0.10)

    def test_rotation_noise_endpoints(self):
        cfg = validate_config({'preset': 'fig2d'})
        params = noise_curve_params(cfg)
        table = rotation_noise_table(cfg, [0.0, 0.63, math.pi / 2])
        values = table['variance_norm']
        self.assertAlmostEqual(values[0], params.var_z + params.v_floor, places=12)
        self.assertAlmostEqual(values[-1], params.var_y + params.v_floor, places=9)
        self.assertEqual(values, sorted(values))

    def test_fig2d_ensemble_between_bounds(self):
        cfg = validate_config({'preset': 'fig2d'})
        stats = mc_run(cfg)
        self.assertEqual(stats.shots, 87)
        low = outcome_variance_model(cfg.shot_config(theta=0.0))
        high = outcome_variance_model(cfg.shot_config(theta=math.pi / 2))
        self.assertLess(low, stats.model_variance)
        self.assertLess(stats.model_variance, high)
        sigma = stats.model_variance * math.sqrt(2 / 86)
        self.assertLess(abs(stats.variance_of_outcome - stats.model_variance), 3 * sigma)


class SweepTests(SimpleTestCase):

    def test_one_row_per_point(self):
        cfg = validate_config({'preset': 'fig2d', 'sweep': {'probe.power_nw': [1.2, 2.5]}})
        table = sweep_table(cfg)
        self.assertEqual(table.height, 2)
        q = table['q_total']
        self.assertAlmostEqual(q[1] / q[0], 2.5 / 1.2, places=9)

    def test_rejects_unknown_path(self):
        with self.assertRaises(ConfigValidationError) as ctx:
            validate_config({'preset': 'fig2d', 'sweep': {'photons': [1, 2]}})
        self.assertEqual(ctx.exception.errors[0][0], '/sweep/photons')


class EmitTests(SimpleTestCase):

    def test_databook_csv_has_sections(self):
        first = tablib.Dataset(headers=['a'], title='rows')
        first.append((1,))
        second = tablib.Dataset(headers=['b'], title='slopes')
        second.append((2,))
        text = render(tablib.Databook((first, second)), 'csv')
        self.assertIn('# rows', text)
        self.assertIn('# slopes', text)

    def test_summary_is_json_only(self):
        with self.assertRaises(ValueError):
            render({'a': 1}, 'csv')
        self.assertEqual(json.loads(render({'a': 1}, 'json')), {'a': 1})


class CommandTests(TestCase):

    def call(self, *args, **options):
        out, err = StringIO(), StringIO()
        call_command(*args, stdout=out, stderr=err, **options)
        return out.getvalue(), err.getvalue()

    def test_derive_prints_table(self):
        out, _ = self.call('derive', preset='fig2d')
        self.assertTrue(out.startswith('quantity,value,unit'))
        self.assertIn('reduction_factor', out)

    def test_mc_run_is_identical_across_worker_counts(self):
        with tempfile.TemporaryDirectory() as tmp:
            one, four = Path(tmp) / 'one.csv', Path(tmp) / 'four.csv'
            self.call('mc', 'run', preset='fig2d', shots=30, seed=4, workers=1, out=str(one), format='csv')
            self.call('mc', 'run', preset='fig2d', shots=30, seed=4, workers=4, out=str(four), format='csv')
            self.assertEqual(one.read_bytes(), four.read_bytes())
            header = one.read_text().splitlines()[0]
        self.assertEqual(header, ','.join(SHOT_TABLE_HEADERS))

    def test_mc_run_json_summary(self):
        out, _ = self.call('mc', 'run', preset='fig2d', theta=0.63, format='json')
        payload = json.loads(out)
        self.assertEqual(payload['shots'], 87)
        self.assertIn('histogram', payload)
        self.assertIn('variance_of_outcome', payload)

    def test_mc_run_save(self):
        self.call('mc', 'run', '--save', preset='fig2d', shots=5, format='json')
        run = EnsembleRun.objects.get()
        self.assertEqual(run.preset, 'fig2d')
        self.assertEqual(run.shot_results.count(), 5)

    def test_curve_antisqueezing_reports_ratio(self):
        out, _ = self.call('curve', 'antisqueezing', preset='fig3_high', format='json')
        summary = json.loads(out)['summary']
        self.assertAlmostEqual(summary[0]['value'], 2.5 / 1.2, places=12)

    def test_validation_error_exits_with_two(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'bad.json'
            path.write_text(json.dumps({'preset': 'fig2d', 'ensemble': {'n_atoms': -1}}))
            with self.assertRaises(CommandError) as ctx:
                self.call('derive', config=str(path))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_missing_config_exits_with_two(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('derive')
        self.assertEqual(ctx.exception.returncode, 2)

    def test_pulse_without_trace_sample_exits_with_two(self):
        sequence = copy.deepcopy(ECHO_SEQUENCE)
        sequence[0]['duration_us'] = 21.0
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'short.json'
            path.write_text(json.dumps({'preset': 'fig2d', 'sequence': sequence}))
            with self.assertRaises(CommandError) as ctx:
                self.call('mc', 'run', config=str(path), shots=5)
        self.assertEqual(ctx.exception.returncode, 2)

    def test_runtime_error_exits_with_three(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('sweep', preset='fig2d')
        self.assertEqual(ctx.exception.returncode, 3)


class SimulationApiTests(SimpleTestCase):

    def setUp(self):
        self.client = APIClient()

    def test_api_root_lists_endpoints(self):
        response = self.client.get('/api/')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertIn('runs', response.json()['endpoints'])

    def test_presets(self):
        response = self.client.get(reverse('preset-list'))
        names = [p['name'] for p in response.data['presets']]
        self.assertEqual(names, ['contrast73', 'fig2d', 'fig3_high', 'fig3_low'])

    def test_derive(self):
        response = self.client.post(reverse('derive'), {'preset': 'fig2d'}, format='json')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertTrue(response.data['success'])
        names = [row['quantity'] for row in response.data['quantities']]
        self.assertIn('tau_cav', names)

    def test_invalid_config_envelope(self):
        response = self.client.post(
            reverse('derive'), {'preset': 'fig2d', 'ensemble': {'n_atoms': 0}}, format='json')
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertFalse(response.data['success'])
        self.assertEqual(response.data['error'][0]['path'], '/ensemble/n_atoms')

    def test_non_object_body_is_rejected(self):
        response = self.client.post(reverse('derive'), [{'preset': 'fig2d'}], format='json')
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertFalse(response.data['success'])
        self.assertEqual(response.data['error'][0]['path'], '/')

    def test_antisqueezing_curve(self):
        response = self.client.post(reverse('curve-antisqueezing'), {'preset': 'fig3_low'}, format='json')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertAlmostEqual(response.data['slope_ratio'], 2.5 / 1.2, places=12)

    def test_rotation_noise_curve(self):
        response = self.client.post(reverse('curve-rotation-noise'), {'preset': 'fig2d'}, format='json')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(len(response.data['curve']), 17)
