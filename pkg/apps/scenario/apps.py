from django.apps import AppConfig


class ScenarioConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.scenario'
    verbose_name = 'Load and PV scenarios'
