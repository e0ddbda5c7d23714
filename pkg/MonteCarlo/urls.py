from django.urls import path
from .views import EnsembleRunListView, EnsembleRunDetailView

urlpatterns = [
    path('', EnsembleRunListView.as_view(), name='run-list'),
    path('<str:run_id>/', EnsembleRunDetailView.as_view(), name='run-detail'),
]
