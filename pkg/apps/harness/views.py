"""
Read-only views over recorded experiment runs.
"""
import math
from pathlib import Path

from django_filters.rest_framework import DjangoFilterBackend
from rest_framework import generics, permissions
from rest_framework.filters import OrderingFilter
from rest_framework.views import APIView

from apps.harness.metrics import daily_aggregates, read_metrics
from apps.harness.models import ExperimentRun
from apps.harness.serializers import ExperimentRunDetailSerializer, ExperimentRunListSerializer
from apps.shared.utils.custom_response import CustomResponse


class ExperimentRunListView(generics.ListAPIView):
    """List runs with filtering by network, mode, status and seed."""
    serializer_class = ExperimentRunListSerializer
    permission_classes = [permissions.AllowAny]
    filter_backends = [DjangoFilterBackend, OrderingFilter]
    filterset_fields = ['network', 'mode', 'status', 'seed']
    ordering_fields = ['created_at', 'lambda_scale']
    ordering = ['-created_at']

    def get_queryset(self):
        return ExperimentRun.objects.all()

    def list(self, request, *args, **kwargs):
        queryset = self.filter_queryset(self.get_queryset())
        page = self.paginate_queryset(queryset)

        if page is not None:
            serializer = self.get_serializer(page, many=True)
            return self.get_paginated_response(serializer.data)

        serializer = self.get_serializer(queryset, many=True)
        return CustomResponse.success(
            message_key="SUCCESS_MESSAGE",
            request=request,
            data=serializer.data
        )


class ExperimentRunDetailView(generics.RetrieveAPIView):
    """Get one run by id."""
    serializer_class = ExperimentRunDetailSerializer
    permission_classes = [permissions.AllowAny]
    queryset = ExperimentRun.objects.all()

    def retrieve(self, request, *args, **kwargs):
        serializer = self.get_serializer(self.get_object())
        return CustomResponse.success(
            message_key="SUCCESS_MESSAGE",
            request=request,
            data=serializer.data
        )


class ExperimentDailyView(APIView):
    """Daily aggregates of a run, read from its metrics file."""
    permission_classes = [permissions.AllowAny]

    def get(self, request, pk):
        run = ExperimentRun.objects.filter(pk=pk).first()
        if run is None or not run.metrics_path or not Path(run.metrics_path).exists():
            return CustomResponse.not_found(request=request)
        frame, header = read_metrics(run.metrics_path)
        records = daily_aggregates(frame).to_dict(orient='records')
        # JSON has no NaN
        days = [{key: (None if isinstance(value, float) and math.isnan(value) else value)
                 for key, value in record.items()} for record in records]
        return CustomResponse.success(
            message_key="SUCCESS_MESSAGE",
            request=request,
            data={'run': run.name, 'config_hash': header.get('config_hash'), 'days': days}
        )
