from django.apps import AppConfig


class ActionspaceConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.actionspace'
