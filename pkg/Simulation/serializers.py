import math

from django.conf import settings
from rest_framework import serializers

from Cavity.serializers import CavitySerializer, ProbeSerializer
from Coupling.serializers import EnsembleSerializer
from Sequence.serializers import SequenceField
from qndsim.serializers import StrictSerializer
from .presets import PRESETS

HISTOGRAM_ESTIMATORS = ('fd', 'auto', 'sturges', 'scott', 'sqrt', 'doane', 'rice', 'stone')

# Config sections whose keys all have defaults
OPTIONAL_SECTIONS = ('model', 'mc', 'curves', 'sweep', 'output')

SWEEPABLE_SECTIONS = ('cavity', 'probe', 'ensemble', 'model', 'mc')


def default_bins():
    return getattr(settings, 'QNDSIM_HISTOGRAM_BINS', 'fd')


def default_workers():
    return getattr(settings, 'QNDSIM_DEFAULT_WORKERS', 1)


def default_thetas():
    return [i * math.pi / 32 for i in range(17)]


class BinsField(serializers.Field):
    """Histogram bins: a positive integer or a numpy estimator name."""

    default_error_messages = {
        'invalid': 'Must be a positive integer or one of: {choices}.',
    }

    def to_internal_value(self, data):
        if isinstance(data, str) and data in HISTOGRAM_ESTIMATORS:
            return data
        if isinstance(data, int) and not isinstance(data, bool) and data > 0:
            return data
        self.fail('invalid', choices=', '.join(HISTOGRAM_ESTIMATORS))

    def to_representation(self, value):
        return value


class ModelSerializer(StrictSerializer):
    """Modelling switches of a run config."""
    coupling = serializers.ChoiceField(choices=['inhomogeneous', 'uniform'], default='inhomogeneous')
    prior = serializers.ChoiceField(choices=['gaussian', 'binomial'], default='gaussian')
    scattering = serializers.BooleanField(default=True)
    noise_floor = serializers.FloatField(default=0.0, min_value=0)
    dead_time_us = serializers.FloatField(default=20.0, min_value=0)
    theta_rad = serializers.FloatField(default=None, allow_null=True)

    def validate(self, attrs):
        if attrs['prior'] == 'binomial' and attrs['coupling'] != 'uniform':
            raise serializers.ValidationError({'prior': "The binomial prior requires uniform coupling"})
        return attrs


class McSerializer(StrictSerializer):
    shots = serializers.IntegerField(default=200, min_value=2)
    master_seed = serializers.IntegerField(default=0, min_value=0)
    bins = BinsField(default=default_bins)
    workers = serializers.IntegerField(default=default_workers, min_value=1)


class CurvesSerializer(StrictSerializer):
    thetas_rad = serializers.ListField(child=serializers.FloatField(), default=default_thetas, allow_empty=False)
    atom_numbers = serializers.ListField(
        child=serializers.IntegerField(min_value=1), default=lambda: [10000, 30000, 50000], allow_empty=False)
    powers_nw = serializers.ListField(
        child=serializers.FloatField(min_value=0), default=lambda: [1.2, 2.5], allow_empty=False)


class OutputSerializer(StrictSerializer):
    format = serializers.ChoiceField(choices=['csv', 'json'], default='csv')
    path = serializers.CharField(allow_null=True, default=None)


class RunConfigSerializer(StrictSerializer):
    """
    A whole run configuration. Section serializers come from the app that
    owns the physics; cross-section checks live in ``Simulation.config``.
    """
    preset = serializers.ChoiceField(choices=sorted(PRESETS), required=False, allow_null=True)
    cavity = CavitySerializer()
    probe = ProbeSerializer()
    lock_power_nw = serializers.FloatField(default=0.0, min_value=0)
    ensemble = EnsembleSerializer()
    model = ModelSerializer()
    sequence = SequenceField()
    mc = McSerializer()
    curves = CurvesSerializer()
    sweep = serializers.DictField(
        child=serializers.ListField(child=serializers.JSONField(), allow_empty=False), default=dict)
    output = OutputSerializer()

    def validate_sweep(self, value):
        errors = {}
        for path in value:
            section, _, key = path.partition('.')
            nested = section in SWEEPABLE_SECTIONS and key
            if not (nested or path == 'lock_power_nw'):
                errors[path] = [f"'{path}' is not a dotted config path like 'ensemble.n_atoms'"]
        if errors:
            raise serializers.ValidationError(errors)
        return value
