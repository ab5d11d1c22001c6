from django.urls import path, include
from rest_framework.routers import DefaultRouter

from harness.views import EvaluationReportViewSet, ExperimentRunViewSet

router = DefaultRouter()
router.register("runs", ExperimentRunViewSet)
router.register("reports", EvaluationReportViewSet)

app_name = "harness"

urlpatterns = [
    path("", include(router.urls)),
]
