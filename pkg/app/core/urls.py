"""
URL mappings for the run registry.
"""

from core.views import RunRecordViewSet
from django.urls import include, path
from rest_framework.routers import DefaultRouter

router = DefaultRouter()

router.register(r"runs", RunRecordViewSet, basename="run")

app_name = "core"

urlpatterns = [
    path("", include(router.urls)),
]
