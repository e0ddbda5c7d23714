import math

from rest_framework import serializers

from qndsim.serializers import StrictSerializer

from .physics import CavitySpec, ProbeSpec, HYPERFINE_SPLITTING, DETUNING_TOLERANCE


class CavitySerializer(StrictSerializer):
    """Cavity section of a run config (unit-suffixed keys)."""
    length_cm = serializers.FloatField()
    finesse = serializers.FloatField()
    mode_waist_um = serializers.FloatField()
    g_max_khz = serializers.FloatField(min_value=0)

    def validate_length_cm(self, value):
        if value <= 0:
            raise serializers.ValidationError("Cavity length must be greater than 0")
        return value

    def validate_finesse(self, value):
        if value <= 1:
            raise serializers.ValidationError("Finesse must be greater than 1")
        return value

    def validate_mode_waist_um(self, value):
        if value <= 0:
            raise serializers.ValidationError("Mode waist must be greater than 0")
        return value

    @staticmethod
    def to_spec(data):
        return CavitySpec(
            length=data['length_cm'] * 1e-2,
            finesse=data['finesse'],
            mode_waist=data['mode_waist_um'] * 1e-6,
            g_max=2 * math.pi * data['g_max_khz'] * 1e3,
        )


class EtaInField(serializers.Field):
    """Input-coupling efficiency: a number in [0, 1] or "auto" (calibrated later)."""

    default_error_messages = {
        'invalid': 'Must be a number in [0, 1] or "auto".',
    }

    def to_internal_value(self, data):
        if data == 'auto':
            return data
        if isinstance(data, bool):
            self.fail('invalid')
        try:
            value = float(data)
        except (TypeError, ValueError):
            self.fail('invalid')
        if not 0 <= value <= 1:
            self.fail('invalid')
        return value

    def to_representation(self, value):
        return value


class ProbeSerializer(StrictSerializer):
    """Probe section of a run config. Detunings are Δ/2π in GHz, signed."""
    delta_2_ghz = serializers.FloatField()
    delta_1_ghz = serializers.FloatField(required=False)
    power_nw = serializers.FloatField(min_value=0)
    wavelength_nm = serializers.FloatField(default=780.241)
    eta_in = EtaInField(default=0.35)
    max_prep_scattering = serializers.FloatField(default=0.06, min_value=0, max_value=1)
    # power the "auto" calibration runs at; power_nw when absent
    calibration_power_nw = serializers.FloatField(required=False, min_value=0)
    linewidth_mhz = serializers.FloatField(default=6.0666)
    detection_efficiency = serializers.FloatField(default=1.0, min_value=0, max_value=1)

    def validate_delta_2_ghz(self, value):
        if value == 0:
            raise serializers.ValidationError("Detuning must be non-zero")
        return value

    def validate_wavelength_nm(self, value):
        if value <= 0:
            raise serializers.ValidationError("Wavelength must be greater than 0")
        return value

    def validate_linewidth_mhz(self, value):
        if value <= 0:
            raise serializers.ValidationError("Linewidth must be greater than 0")
        return value

    def validate(self, attrs):
        splitting_ghz = HYPERFINE_SPLITTING / (2 * math.pi) / 1e9
        if 'delta_1_ghz' not in attrs:
            attrs['delta_1_ghz'] = attrs['delta_2_ghz'] - splitting_ghz
        mismatch = abs(abs(attrs['delta_1_ghz'] - attrs['delta_2_ghz']) - splitting_ghz)
        if mismatch * 1e9 > DETUNING_TOLERANCE / (2 * math.pi):
            raise serializers.ValidationError(
                {'delta_1_ghz': f"|delta_1 - delta_2| must equal the clock splitting ({splitting_ghz:.6f} GHz)"}
            )
        if attrs['delta_1_ghz'] == 0:
            raise serializers.ValidationError({'delta_1_ghz': "Detuning must be non-zero"})
        return attrs

    @staticmethod
    def to_spec(data, eta_in=None, power_nw=None):
        eta = data['eta_in'] if eta_in is None else eta_in
        if eta == 'auto':
            raise ValueError("eta_in must be calibrated before building a ProbeSpec")
        return ProbeSpec(
            delta_1=2 * math.pi * data['delta_1_ghz'] * 1e9,
            delta_2=2 * math.pi * data['delta_2_ghz'] * 1e9,
            input_power=(data['power_nw'] if power_nw is None else power_nw) * 1e-9,
            wavelength=data['wavelength_nm'] * 1e-9,
            eta_in=eta,
            linewidth_gamma=2 * math.pi * data['linewidth_mhz'] * 1e6,
        )
