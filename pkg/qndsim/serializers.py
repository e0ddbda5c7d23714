from django.conf import settings
from rest_framework import serializers


class StrictSerializer(serializers.Serializer):
    """Rejects keys the serializer does not declare (when QNDSIM_STRICT_CONFIG is on)."""

    def to_internal_value(self, data):
        if isinstance(data, dict) and getattr(settings, 'QNDSIM_STRICT_CONFIG', True):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ["Unknown key."] for key in unknown})
        return super().to_internal_value(data)
