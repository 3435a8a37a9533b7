"""
URL configuration for harness app v1.
"""
from django.urls import path
from .. import views

app_name = 'harness'

urlpatterns = [
    path('', views.ExperimentRunListView.as_view(), name='run-list'),
    path('<int:pk>/', views.ExperimentRunDetailView.as_view(), name='run-detail'),
    path('<int:pk>/daily/', views.ExperimentDailyView.as_view(), name='run-daily'),
]
