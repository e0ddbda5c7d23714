from rest_framework import serializers

from qndsim.exceptions import SequenceValidationError
from qndsim.serializers import StrictSerializer
from .physics import (
    PulseSegment, PulseSequence, KINDS, MICROWAVE, echo_sequence, no_echo_sequence,
)

SEQUENCE_PRESETS = {
    'echo': echo_sequence,
    'no_echo': no_echo_sequence,
}


class SegmentSerializer(StrictSerializer):
    """One entry of a sequence file."""
    kind = serializers.ChoiceField(choices=KINDS)
    duration_us = serializers.FloatField()
    angle_rad = serializers.FloatField(required=False)
    axis_phase_rad = serializers.FloatField(required=False)
    readout = serializers.BooleanField(default=False)

    def validate_duration_us(self, value):
        if value < 0:
            raise serializers.ValidationError("Duration must be non-negative")
        return value

    def validate(self, attrs):
        if attrs['kind'] == MICROWAVE:
            if 'angle_rad' not in attrs:
                raise serializers.ValidationError({'angle_rad': "Microwave segments need a rotation angle"})
            attrs.setdefault('axis_phase_rad', 0.0)
        else:
            extra = [key for key in ('angle_rad', 'axis_phase_rad') if key in attrs]
            if extra:
                raise serializers.ValidationError(
                    {extra[0]: "Rotation fields are only allowed on microwave segments"})
        return attrs


def segment_from_data(data):
    return PulseSegment(
        kind=data['kind'],
        duration=data['duration_us'] * 1e-6,
        rotation_angle=data.get('angle_rad'),
        axis_phase=data.get('axis_phase_rad'),
        readout=data.get('readout', False),
    )


def segment_to_data(segment):
    data = {'kind': segment.kind, 'duration_us': round(segment.duration * 1e6, 9)}
    if segment.kind == MICROWAVE:
        data['angle_rad'] = segment.rotation_angle
        data['axis_phase_rad'] = segment.axis_phase
    if segment.readout:
        data['readout'] = True
    return data


def build_sequence(items):
    return PulseSequence(tuple(segment_from_data(item) for item in items))


def dump_sequence(seq):
    return [segment_to_data(segment) for segment in seq.segments]


class SequenceField(serializers.Field):
    """
    A sequence preset name or a list of segment objects. Always resolves to
    the expanded list so a resolved config re-validates to itself.
    """

    default_error_messages = {
        'unknown_preset': 'Unknown sequence preset "{name}". Choices: {choices}.',
        'not_a_list': 'Expected a sequence preset name or a list of segments.',
        'empty': 'Sequence must contain at least one segment.',
    }

    def to_internal_value(self, data):
        if isinstance(data, str):
            if data not in SEQUENCE_PRESETS:
                self.fail('unknown_preset', name=data, choices=', '.join(sorted(SEQUENCE_PRESETS)))
            data = dump_sequence(SEQUENCE_PRESETS[data]())
        if not isinstance(data, list):
            self.fail('not_a_list')
        if not data:
            self.fail('empty')

        items, errors = [], {}
        for index, raw in enumerate(data):
            serializer = SegmentSerializer(data=raw)
            if serializer.is_valid():
                items.append(dict(serializer.validated_data))
            else:
                errors[index] = serializer.errors
        if errors:
            raise serializers.ValidationError(errors)

        try:
            build_sequence(items)
        except SequenceValidationError as e:
            if e.index is None:
                raise serializers.ValidationError(str(e))
            raise serializers.ValidationError({e.index: [e.detail]})
        return items

    def to_representation(self, value):
        return value
