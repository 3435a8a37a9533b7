"""
Models for the experiment harness.
"""
import math

from django.db import models

from apps.gridflow.network import CASE_NAMES
from apps.harness.config import MODES
from apps.shared.models import BaseModel


def _finite_or_none(value):
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


class ExperimentRun(BaseModel):
    """One execution of an experiment configuration."""

    class Status(models.TextChoices):
        RUNNING = 'running', 'Running'
        COMPLETED = 'completed', 'Completed'
        FAILED = 'failed', 'Failed'

    name = models.CharField(max_length=200)
    config_hash = models.CharField(max_length=64, db_index=True)
    network = models.CharField(max_length=20, choices=[(name, name) for name in CASE_NAMES])
    mode = models.CharField(max_length=20, choices=[(mode, mode) for mode in MODES])
    lambda_scale = models.FloatField(null=True, blank=True)
    impedance_factor = models.FloatField()
    days = models.PositiveIntegerField()
    seed = models.IntegerField()
    status = models.CharField(max_length=20, choices=Status.choices, default=Status.RUNNING)
    config = models.JSONField(default=dict)
    metrics_path = models.CharField(max_length=500, blank=True)
    steps = models.PositiveIntegerField(default=0)
    final_train_reward = models.FloatField(null=True, blank=True)
    final_test_reward = models.FloatField(null=True, blank=True)
    final_test_ploss = models.FloatField(null=True, blank=True)
    final_test_violation = models.FloatField(null=True, blank=True)
    final_critic_loss = models.FloatField(null=True, blank=True)
    clamp_events = models.PositiveIntegerField(default=0)
    error_message = models.TextField(blank=True)

    class Meta:
        db_table = 'experiment_runs'
        ordering = ['-created_at']
        indexes = [
            models.Index(fields=['-created_at'], name='experiment_runs_created_idx'),
            models.Index(fields=['network', 'mode'], name='experiment_runs_case_mode_idx'),
        ]

    def __str__(self):
        return f"{self.name} ({self.status})"

    @classmethod
    def start(cls, cfg, metrics_path) -> 'ExperimentRun':
        return cls.objects.create(
            name=cfg.run_name,
            config_hash=cfg.config_hash(),
            network=cfg.network,
            mode=cfg.mode,
            lambda_scale=cfg.lambda_scale,
            impedance_factor=cfg.impedance_factor,
            days=cfg.days,
            seed=cfg.seed,
            config=cfg.to_dict(),
            metrics_path=str(metrics_path),
        )

    def mark_completed(self, result):
        summary = result.summary
        self.status = self.Status.COMPLETED
        self.steps = result.steps
        self.metrics_path = str(result.metrics_path)
        self.final_train_reward = _finite_or_none(summary.get('train_reward'))
        self.final_test_reward = _finite_or_none(summary.get('test_reward'))
        self.final_test_ploss = _finite_or_none(summary.get('test_ploss'))
        self.final_test_violation = _finite_or_none(summary.get('test_violation'))
        self.final_critic_loss = _finite_or_none(summary.get('critic_loss'))
        self.clamp_events = result.clamp_events
        self.save()

    def mark_failed(self, exc: Exception):
        self.status = self.Status.FAILED
        self.error_message = str(exc)
        self.save(update_fields=['status', 'error_message', 'updated_at'])
