from django.apps import AppConfig


class GridflowConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.gridflow'
    verbose_name = 'Distribution network power flow'
