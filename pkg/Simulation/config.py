"""
Run-configuration ingestion: JSON in, validated ``RunConfig`` out.

Errors are reported as (JSON pointer, message) pairs, e.g.
('/ensemble/n_atoms', 'Atom number must be at least 1').
"""
import copy
import json
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

from Backaction.physics import scattering_g_sq, scattering_probability
from Cavity.physics import (
    derive_cavity, dispersive_shift_rate, common_shift_rate, photon_drive, steady_state_photons,
)
from Cavity.serializers import CavitySerializer, ProbeSerializer
from Coupling.physics import coupling_stats, prior_variance_factor, sample_ensemble
from MonteCarlo.engine import ShotConfig
from Sequence.serializers import build_sequence
from qndsim.exceptions import ConfigValidationError, InvalidParameterError, QndsimError
from .presets import PRESETS, get_preset, deep_merge
from .serializers import RunConfigSerializer, OPTIONAL_SECTIONS

logger = logging.getLogger(__name__)


def flatten_errors(detail, prefix=''):
    """DRF error detail -> [(pointer, message), ...] in input order."""
    if isinstance(detail, dict):
        errors = []
        for key, value in detail.items():
            if key == 'non_field_errors':
                errors.extend(flatten_errors(value, prefix))
            else:
                errors.extend(flatten_errors(value, f"{prefix}/{key}"))
        return errors
    if isinstance(detail, list):
        errors = []
        for item in detail:
            if isinstance(item, (dict, list)):
                errors.extend(flatten_errors(item, prefix))
            else:
                errors.append((prefix or '/', str(item)))
        return errors
    return [(prefix or '/', str(detail))]


def set_path(data, dotted, value):
    """Set ``data['a']['b'] = value`` for ``dotted='a.b'``, creating sections."""
    *parents, leaf = dotted.split('.')
    node = data
    for key in parents:
        node = node.setdefault(key, {})
    node[leaf] = value


def read_config(source):
    """Load a config from a path, a file object, a JSON string or a dict."""
    if isinstance(source, dict):
        return copy.deepcopy(source)
    if hasattr(source, 'read'):
        text = source.read()
    elif isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith('{')):
        try:
            text = Path(source).read_text()
        except OSError as e:
            raise ConfigValidationError([('/', f"cannot read config file: {e}")])
    else:
        text = source
    if not text.strip():
        return {}
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigValidationError([('/', f"invalid JSON: {e}")])
    if not isinstance(data, dict):
        raise ConfigValidationError([('/', "config must be a JSON object")])
    return data


def prep_scattering(cavity, probe_data, items, reduction, eta_in, power_nw=None):
    """Per-atom scattering probability summed over the squeezing pulses."""
    spec = CavitySerializer.to_spec(cavity)
    derived = derive_cavity(spec)
    probe = ProbeSerializer.to_spec(probe_data, eta_in=eta_in, power_nw=power_nw)
    g_sq = scattering_g_sq(spec.g_max, reduction)
    seq = build_sequence(items)
    total = 0.0
    for _, _, seg in seq.squeezing_pulses():
        if seg.duration == 0:
            continue
        drive = photon_drive(probe, derived, seg.duration)
        total += scattering_probability(
            drive.n_bar, g_sq, probe.linewidth_gamma, probe.delta_2, seg.duration).p_scatter
    return total


def calibrate_eta_in(cavity, probe_data, items, reduction):
    """
    Largest η_in ≤ 1 keeping the preparation pulses' scattering at or below
    ``max_prep_scattering`` at ``calibration_power_nw`` (default: the probe
    power). Scattering is linear in η_in.
    """
    per_unit = prep_scattering(cavity, probe_data, items, reduction, eta_in=1.0,
                               power_nw=probe_data.get('calibration_power_nw'))
    target = probe_data['max_prep_scattering']
    if per_unit <= 0:
        logger.warning("no preparation scattering at eta_in=1; using eta_in=1")
        return 1.0
    eta = target / per_unit
    if eta > 1:
        logger.warning("eta_in calibration capped at 1 (would be %.3g)", eta)
        eta = 1.0
    logger.info("calibrated eta_in=%.6g for preparation scattering %.3g", eta, target)
    return eta


def _check_physics(data):
    """Cross-section checks; returns a list of (pointer, message)."""
    errors = []
    try:
        cavity = CavitySerializer.to_spec(data['cavity'])
        derive_cavity(cavity)
    except InvalidParameterError as e:
        errors.append(('/cavity', str(e)))
        return errors

    reduction = coupling_stats(
        data['ensemble']['n_atoms'], 1.0, data['ensemble']['radius_um'] * 1e-6, cavity.mode_waist,
    ).reduction_factor
    probe = data['probe']
    try:
        if probe['eta_in'] == 'auto':
            probe['eta_in'] = calibrate_eta_in(data['cavity'], probe, data['sequence'], reduction)
        ProbeSerializer.to_spec(probe)
        prep_scattering(data['cavity'], probe, data['sequence'], reduction, probe['eta_in'])
    except InvalidParameterError as e:
        errors.append(('/probe', str(e)))

    theta = data['model']['theta_rad']
    if theta is not None:
        try:
            build_sequence(data['sequence']).with_final_rotation(theta)
        except QndsimError as e:
            errors.append(('/model/theta_rad', str(e)))
    return errors


def validate_config(source, overrides=None):
    """
    Parse, merge over the named preset, apply dotted ``overrides`` and
    validate. Returns a ``RunConfig`` or raises ``ConfigValidationError``.
    """
    raw = read_config(source)
    preset = raw.get('preset')
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigValidationError([('/preset', f'Unknown preset "{preset}".')])
        raw = deep_merge(get_preset(preset), raw)
        logger.info("config based on preset '%s'", preset)
    for dotted, value in (overrides or {}).items():
        set_path(raw, dotted, value)
    for section in OPTIONAL_SECTIONS:
        raw.setdefault(section, {})
    raw.setdefault('sequence', 'echo')

    serializer = RunConfigSerializer(data=raw)
    if not serializer.is_valid():
        raise ConfigValidationError(flatten_errors(serializer.errors))
    data = json.loads(json.dumps(serializer.validated_data))
    errors = _check_physics(data)
    if errors:
        raise ConfigValidationError(errors)
    return RunConfig(data)


@dataclass(frozen=True, eq=False)
class RunConfig:
    """A resolved configuration plus the physics objects derived from it."""
    data: dict

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.data == other.data

    def to_dict(self):
        return copy.deepcopy(self.data)

    def with_overrides(self, overrides):
        return validate_config(self.to_dict(), overrides)

    @property
    def preset(self):
        return self.data.get('preset') or ''

    @property
    def n_atoms(self):
        return self.data['ensemble']['n_atoms']

    @property
    def model(self):
        return self.data['model']

    @property
    def theta(self):
        """Final rotation angle the run uses: the configured one, else the sequence's own."""
        if self.data['model']['theta_rad'] is not None:
            return self.data['model']['theta_rad']
        index = self.sequence.final_rotation_index()
        return self.sequence.segments[index].rotation_angle if index is not None else 0.0

    @cached_property
    def cavity(self):
        return CavitySerializer.to_spec(self.data['cavity'])

    @cached_property
    def derived(self):
        return derive_cavity(self.cavity)

    def probe(self, power_nw=None):
        return ProbeSerializer.to_spec(self.data['probe'], power_nw=power_nw)

    @property
    def r_c(self):
        return self.cavity.mode_waist

    @property
    def r_a(self):
        return self.data['ensemble']['radius_um'] * 1e-6

    @cached_property
    def omega_max(self):
        probe = self.probe()
        return dispersive_shift_rate(self.cavity.g_max, probe.delta_1, probe.delta_2)

    def coupling(self, n_atoms=None):
        return coupling_stats(n_atoms or self.n_atoms, self.omega_max, self.r_a, self.r_c)

    @property
    def omega_bar(self):
        return self.coupling().omega_mean

    @property
    def prior_factor(self):
        if self.model['coupling'] == 'uniform':
            return 1.0
        return prior_variance_factor(self.r_a, self.r_c)

    @property
    def phase_per_atom(self):
        """Atom-number phase per slice divided by N, from the coupling-averaged common shift."""
        probe = self.probe()
        common = common_shift_rate(self.cavity.g_max, probe.delta_1, probe.delta_2)
        return common / self.coupling().reduction_factor * self.derived.tau_cav / 2

    @cached_property
    def sequence(self):
        seq = build_sequence(self.data['sequence'])
        if self.data['model']['theta_rad'] is not None:
            seq = seq.with_final_rotation(self.data['model']['theta_rad'])
        return seq

    def sequence_at(self, theta):
        return build_sequence(self.data['sequence']).with_final_rotation(theta)

    def n_ss(self, power_nw=None):
        return steady_state_photons(self.probe(power_nw), self.derived)

    def scatter_rate(self):
        """Per-atom scattering probability per photon-second at Δ₂ (0 if disabled)."""
        if not self.model['scattering']:
            return 0.0
        probe = self.probe()
        g_sq = scattering_g_sq(self.cavity.g_max, self.coupling().reduction_factor)
        return g_sq * probe.linewidth_gamma / probe.delta_2 ** 2

    def shot_config(self, theta=None, n_atoms=None, power_nw=None):
        """ShotConfig for the Monte Carlo engine, optionally at another θ, N or power."""
        seq = self.sequence if theta is None else self.sequence_at(theta)
        return ShotConfig(
            n_atoms=n_atoms or self.n_atoms,
            n_ss=self.n_ss(power_nw),
            omega_bar=self.omega_bar,
            tau_cav=self.derived.tau_cav,
            sequence=seq,
            prior=self.model['prior'],
            prior_factor=self.prior_factor,
            scatter_rate=self.scatter_rate(),
            dead_time=self.model['dead_time_us'] * 1e-6,
            phase_per_atom=self.phase_per_atom,
        )

    def ensemble_sample(self):
        ens = self.data['ensemble']
        return sample_ensemble(
            ens['sample_size'], self.r_a, ens['temperature_uk'] * 1e-6, ens['seed'],
            drift_velocity=ens['drift_velocity_cm_s'] * 1e-2,
            wavelength=self.data['probe']['wavelength_nm'] * 1e-9,
        )

    @property
    def mc(self):
        return self.data['mc']

    @property
    def output(self):
        return self.data['output']


def config_error_response(exc):
    """Envelope used by the HTTP views for a ConfigValidationError."""
    return {
        'success': False,
        'message': 'Invalid configuration',
        'error': [{'path': path, 'message': msg} for path, msg in exc.errors],
    }
