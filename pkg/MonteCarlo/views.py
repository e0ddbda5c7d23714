from django_filters.rest_framework import DjangoFilterBackend
from rest_framework import generics, filters
from rest_framework.pagination import PageNumberPagination
from rest_framework.permissions import AllowAny

from .models import EnsembleRun
from .serializers import EnsembleRunListSerializer, EnsembleRunDetailSerializer


class RunPagination(PageNumberPagination):
    page_size = 20
    page_size_query_param = 'page_size'
    max_page_size = 100


class EnsembleRunListView(generics.ListAPIView):
    """
    GET: List stored Monte Carlo runs
    Supports query parameters:
    - preset, theta_rad, n_atoms: exact filters
    - ordering: created_at, variance_of_outcome
    """
    serializer_class = EnsembleRunListSerializer
    permission_classes = [AllowAny]
    pagination_class = RunPagination
    filter_backends = [DjangoFilterBackend, filters.OrderingFilter]
    filterset_fields = ['preset', 'theta_rad', 'n_atoms']
    ordering_fields = ['created_at', 'variance_of_outcome']
    ordering = ['-created_at']
    queryset = EnsembleRun.objects.all()


class EnsembleRunDetailView(generics.RetrieveAPIView):
    """GET: One run with its per-shot records"""
    serializer_class = EnsembleRunDetailSerializer
    permission_classes = [AllowAny]
    lookup_field = 'run_id'
    queryset = EnsembleRun.objects.prefetch_related('shot_results')
