from typing import Type

from django.db.models import Count, QuerySet
from drf_spectacular.types import OpenApiTypes
from drf_spectacular.utils import OpenApiParameter, extend_schema
from rest_framework import viewsets

from harness.models import EvaluationReport, ExperimentRun
from harness.pagination import ReportsPagination, RunsPagination
from harness.serializers import (
    EvaluationReportListSerializer,
    EvaluationReportSerializer,
    ExperimentRunListSerializer,
    ExperimentRunSerializer
)


class ExperimentRunViewSet(viewsets.ReadOnlyModelViewSet):
    queryset = ExperimentRun.objects.all()
    serializer_class = ExperimentRunSerializer
    pagination_class = RunsPagination

    def get_queryset(self) -> QuerySet:
        queryset = self.queryset
        status = self.request.query_params.get("status", None)
        name = self.request.query_params.get("name", None)
        if self.action == "list":
            queryset = queryset.annotate(reports_count=Count("reports"))
        if status:
            queryset = queryset.filter(status=status)
        if name:
            queryset = queryset.filter(name__icontains=name)
        return queryset

    def get_serializer_class(self) -> Type[
        ExperimentRunListSerializer | ExperimentRunSerializer
    ]:
        if self.action == "list":
            return ExperimentRunListSerializer
        return ExperimentRunSerializer

    @extend_schema(
        parameters=[
            OpenApiParameter(
                "status",
                type=OpenApiTypes.STR,
                description="Filter by run status (ex. ?status=finished)",
            ),
            OpenApiParameter(
                "name",
                type=OpenApiTypes.STR,
                description="Filter by run name (ex. ?name=cycle)",
            ),
        ]
    )
    def list(self, request, *args, **kwargs):
        return super().list(request, *args, **kwargs)


class EvaluationReportViewSet(viewsets.ReadOnlyModelViewSet):
    queryset = EvaluationReport.objects.select_related("run")
    serializer_class = EvaluationReportSerializer
    pagination_class = ReportsPagination

    def get_queryset(self) -> QuerySet:
        queryset = self.queryset
        run = self.request.query_params.get("run", None)
        if run and run.isdigit():
            queryset = queryset.filter(run_id=int(run))
        return queryset

    def get_serializer_class(self) -> Type[
        EvaluationReportListSerializer | EvaluationReportSerializer
    ]:
        if self.action == "list":
            return EvaluationReportListSerializer
        return EvaluationReportSerializer

    @extend_schema(
        parameters=[
            OpenApiParameter(
                "run",
                type=OpenApiTypes.INT,
                description="Filter by run id (ex. ?run=2)",
            ),
        ]
    )
    def list(self, request, *args, **kwargs):
        return super().list(request, *args, **kwargs)
