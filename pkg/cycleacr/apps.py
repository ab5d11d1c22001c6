from django.apps import AppConfig


class CycleacrConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "cycleacr"
    verbose_name = "Cycle actor-context relation modeling"
