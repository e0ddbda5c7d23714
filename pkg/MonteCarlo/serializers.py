from rest_framework import serializers

from .models import EnsembleRun, ShotResult


class ShotResultSerializer(serializers.ModelSerializer):

    class Meta:
        model = ShotResult
        fields = ['shot', 'true_jz', 'cond_mean', 'cond_var', 'outcome', 'scattered']


class EnsembleRunListSerializer(serializers.ModelSerializer):
    """Lightweight serializer for run lists"""
    variance_ci = serializers.SerializerMethodField()

    class Meta:
        model = EnsembleRun
        fields = [
            'run_id', 'preset', 'n_atoms', 'shots', 'theta_rad', 'master_seed',
            'variance_of_outcome', 'variance_se', 'variance_ci', 'model_variance',
            'mean_conditional_var', 'created_at'
        ]

    def get_variance_ci(self, obj):
        return [obj.variance_ci_low, obj.variance_ci_high]


class EnsembleRunDetailSerializer(EnsembleRunListSerializer):
    shots_data = ShotResultSerializer(source='shot_results', many=True, read_only=True)

    class Meta(EnsembleRunListSerializer.Meta):
        fields = EnsembleRunListSerializer.Meta.fields + [
            'config', 'histogram', 'mean_outcome', 'var_conditional_mean',
            'mean_contrast_multiplier', 'shots_data'
        ]
