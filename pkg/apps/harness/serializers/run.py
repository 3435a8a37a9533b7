"""
Serializers for ExperimentRun.
"""
from rest_framework import serializers
from apps.harness.models import ExperimentRun


class ExperimentRunListSerializer(serializers.ModelSerializer):
    """Compact run listing."""
    class Meta:
        model = ExperimentRun
        fields = [
            'id', 'uuid', 'name', 'network', 'mode', 'lambda_scale', 'impedance_factor', 'days', 'seed',
            'status', 'final_test_reward', 'final_test_violation', 'created_at',
        ]
        read_only_fields = fields


class ExperimentRunDetailSerializer(serializers.ModelSerializer):
    """Full run record including the configuration it ran with."""
    class Meta:
        model = ExperimentRun
        fields = [
            'id', 'uuid', 'name', 'config_hash', 'network', 'mode', 'lambda_scale', 'impedance_factor',
            'days', 'seed', 'status', 'config', 'metrics_path', 'steps', 'final_train_reward',
            'final_test_reward', 'final_test_ploss', 'final_test_violation', 'final_critic_loss',
            'clamp_events', 'error_message', 'created_at', 'updated_at',
        ]
        read_only_fields = fields
