"""
Tests for plan documents.
"""

import json
import tempfile
from pathlib import Path

from core.exceptions import PlanningError
from django.test import SimpleTestCase
from manifold.loader import fixture_path, load_manifold
from planner.documents import load_plan, plan_from_document, plan_to_document, save_plan
from planner.plan import plan_path
from planner.policy import TransportPolicy


class PlanDocumentTests(SimpleTestCase):
    """Test writing and reading plans."""

    def setUp(self) -> None:
        manifold = load_manifold(fixture_path("fig1_path.cfg"))
        self.plan = plan_path(manifold, "feshbach", "nu-5", TransportPolicy(adiabatic_turns={"K"}))

    def test_document_lists_actions(self):
        """Test the document carries every action with its parameters and the summary."""
        document = plan_to_document(self.plan)

        self.assertEqual(len(document["actions"]), 11)
        first = document["actions"][0]
        self.assertEqual(first["crossing_id"], "A")
        self.assertEqual(first["b_rf_g"], 0.05)
        self.assertEqual(document["survival"], self.plan.survival)
        self.assertEqual(document["policy"]["adiabatic_turns"], ["K"])

    def test_file_round_trip(self):
        """Test a saved plan loads back with the same schedule."""
        with tempfile.TemporaryDirectory() as directory:
            path = save_plan(self.plan, Path(directory) / "plan.json")

            loaded = load_plan(path)

        self.assertEqual(loaded, self.plan)
        self.assertEqual(loaded.schedule, self.plan.schedule)

    def test_route_must_match_actions(self):
        """Test a document whose route disagrees with its actions is rejected."""
        document = json.loads(json.dumps(plan_to_document(self.plan)))
        document["route"] = document["route"][::-1]

        with self.assertRaisesMessage(PlanningError, "route"):
            plan_from_document(document)

    def test_unknown_keys_rejected(self):
        """Test unknown keys in an action are rejected."""
        document = json.loads(json.dumps(plan_to_document(self.plan)))
        document["actions"][0]["phase_rad"] = 0.0

        with self.assertRaisesMessage(PlanningError, "phase_rad"):
            plan_from_document(document)

    def test_unreadable_file(self):
        """Test a missing file is a planning error."""
        with self.assertRaises(PlanningError):
            load_plan("/nonexistent/plan.json")
