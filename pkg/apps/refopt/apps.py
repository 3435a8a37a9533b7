from django.apps import AppConfig


class RefoptConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.refopt'
    verbose_name = 'Model-based reactive dispatch'
