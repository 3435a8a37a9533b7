from django.apps import AppConfig


class VvcEnvConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.vvc_env'
    verbose_name = 'Volt-Var environment'
