"""
Test for the django admin modifications
"""

from core.tests.test_models import create_run
from django.contrib.auth import get_user_model
from django.test import Client, TestCase
from django.urls import reverse


class AdminSiteTests(TestCase):
    """Tests for Django admin."""

    def setUp(self) -> None:
        """Create user, client and a recorded run"""
        self.client = Client()
        User = get_user_model()

        self.admin_user = User.objects.create_superuser(
            username="admin",
            email="admin@example.com",
            password="testpass123",
        )

        self.client.force_login(self.admin_user)

        self.run = create_run(config_hash="0123456789abcdef" * 4)

    def test_runs_list(self):
        """Test that runs are listed with their short hash."""
        url = reverse("admin:core_runrecord_changelist")
        response = self.client.get(url)

        self.assertContains(response, "0123456789ab")
        self.assertContains(response, "scan")

    def test_filter_runs_by_status(self):
        """Test the list can be filtered by status."""
        url = reverse("admin:core_runrecord_changelist")
        response = self.client.get(url, {"status__exact": "failed"})

        self.assertEqual(response.status_code, 200)
        self.assertNotContains(response, "0123456789ab")

    def test_run_page(self):
        """Test the run page works."""
        url = reverse("admin:core_runrecord_change", args=[self.run.id])

        response = self.client.get(url)
        self.assertEqual(response.status_code, 200)
        self.assertContains(response, "peak_mhz")

    def test_runs_cannot_be_added(self):
        """Test runs are only created by the command line."""
        url = reverse("admin:core_runrecord_add")
        res = self.client.get(url)

        self.assertEqual(res.status_code, 403)
