"""
Tests for the run registry API.
"""

from core.models import RunRecord
from core.serializers import RunRecordSerializer
from core.tests.test_models import create_run
from django.test import TestCase
from django.urls import reverse
from rest_framework import status
from rest_framework.test import APIClient

RUNS_URL = reverse("core:run-list")


def detail_url(run_id):
    """Create and return a run detail url."""
    return reverse("core:run-detail", args=[run_id])


class RunsApiTests(TestCase):
    """Test the read-only run registry."""

    def setUp(self) -> None:
        self.client = APIClient()

    def test_retrieve_runs(self):
        """Test retrieving a list of runs."""
        create_run()
        create_run(command=RunRecord.Command.PLAN, config_hash="cd" * 32)

        response = self.client.get(RUNS_URL)

        runs = RunRecord.objects.all().order_by("-created_at", "-id")
        serializer = RunRecordSerializer(runs, many=True)
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data, serializer.data)

    def test_filter_by_command_and_status(self):
        """Test filtering runs by command and status."""
        scan = create_run()
        create_run(command=RunRecord.Command.PLAN)
        create_run(status=RunRecord.Status.FAILED, error="crossing: coupling must be positive")

        response = self.client.get(RUNS_URL, {"command": "scan", "status": "succeeded"})

        self.assertEqual([run["id"] for run in response.data], [scan.id])

    def test_filter_by_hash_prefix(self):
        """Test filtering runs by the start of their config hash."""
        wanted = create_run(config_hash="fe" * 32)
        create_run()

        response = self.client.get(RUNS_URL, {"config_hash": "fefe"})

        self.assertEqual([run["id"] for run in response.data], [wanted.id])

    def test_run_detail(self):
        """Test retrieving one run."""
        run = create_run()

        response = self.client.get(detail_url(run.id))

        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data, RunRecordSerializer(run).data)

    def test_registry_is_read_only(self):
        """Test runs cannot be created, changed or deleted through the API."""
        run = create_run()

        response = self.client.post(RUNS_URL, {"command": "scan"})
        self.assertEqual(response.status_code, status.HTTP_405_METHOD_NOT_ALLOWED)
        self.assertEqual(
            self.client.patch(detail_url(run.id), {"status": "failed"}).status_code,
            status.HTTP_405_METHOD_NOT_ALLOWED,
        )
        self.assertEqual(self.client.delete(detail_url(run.id)).status_code, status.HTTP_405_METHOD_NOT_ALLOWED)
        self.assertTrue(RunRecord.objects.filter(id=run.id).exists())

    def test_schema_documents_filters(self):
        """Test the API schema lists the filter parameters."""
        response = self.client.get(reverse("api-schema"), {"format": "json"})

        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertIn(b"config_hash", response.content)
