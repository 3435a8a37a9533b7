"""
Admin configuration for harness app.
"""
from django.contrib import admin
from .models import ExperimentRun


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ['name', 'network', 'mode', 'lambda_scale', 'seed', 'status', 'final_test_reward', 'created_at']
    search_fields = ['name', 'config_hash', 'error_message']
    list_filter = ['network', 'mode', 'status', 'created_at']
    readonly_fields = ['uuid', 'config_hash', 'config', 'created_at', 'updated_at']
