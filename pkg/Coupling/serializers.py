from rest_framework import serializers

from qndsim.serializers import StrictSerializer


class EnsembleSerializer(StrictSerializer):
    """Cloud parameters of a run config."""
    n_atoms = serializers.IntegerField()
    radius_um = serializers.FloatField()
    temperature_uk = serializers.FloatField(default=14.5, min_value=0)
    drift_velocity_cm_s = serializers.FloatField(default=2.9)
    sample_size = serializers.IntegerField(default=100000, min_value=1)
    seed = serializers.IntegerField(default=0, min_value=0)

    def validate_n_atoms(self, value):
        if value < 1:
            raise serializers.ValidationError("Atom number must be at least 1")
        return value

    def validate_radius_um(self, value):
        if value <= 0:
            raise serializers.ValidationError("Cloud radius must be greater than 0")
        return value
