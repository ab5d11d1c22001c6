from django.apps import AppConfig


class InteractionHeadConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "interaction_head"
    verbose_name = "Memory bank and instance interaction"
