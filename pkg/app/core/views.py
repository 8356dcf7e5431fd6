"""
Views for the run registry API.
"""

from core.models import RunRecord
from core.serializers import RunRecordSerializer
from django.db.models import QuerySet
from drf_spectacular.types import OpenApiTypes
from drf_spectacular.utils import OpenApiParameter, extend_schema, extend_schema_view
from rest_framework.viewsets import ReadOnlyModelViewSet


@extend_schema_view(
    list=extend_schema(
        parameters=[
            OpenApiParameter(
                "command",
                OpenApiTypes.STR,
                enum=RunRecord.Command.values,
                description="Only runs of this command.",
            ),
            OpenApiParameter(
                "status",
                OpenApiTypes.STR,
                enum=RunRecord.Status.values,
                description="Only runs with this status.",
            ),
            OpenApiParameter(
                "config_hash",
                OpenApiTypes.STR,
                description="Only runs whose config hash starts with this prefix.",
            ),
        ]
    )
)
class RunRecordViewSet(ReadOnlyModelViewSet):
    """View for browsing recorded runs."""

    serializer_class = RunRecordSerializer
    queryset = RunRecord.objects.all()

    def get_queryset(self) -> QuerySet[RunRecord]:
        """Retrieve runs, filtered by the query parameters."""
        queryset = self.queryset
        command = self.request.query_params.get("command")
        status = self.request.query_params.get("status")
        config_hash = self.request.query_params.get("config_hash")

        if command:
            queryset = queryset.filter(command=command)
        if status:
            queryset = queryset.filter(status=status)
        if config_hash:
            queryset = queryset.filter(config_hash__startswith=config_hash)

        return queryset.order_by("-created_at", "-id")
