from django.apps import AppConfig


class SacAgentConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.sac_agent'
    verbose_name = 'Soft actor-critic agent'
