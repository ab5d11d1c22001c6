from django.apps import AppConfig


class FeatureFrontendConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "feature_frontend"
    verbose_name = "Actor and context feature frontend"
