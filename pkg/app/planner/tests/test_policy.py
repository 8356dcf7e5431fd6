"""
Tests for planner policies.
"""

from core.exceptions import PlanningError
from django.test import SimpleTestCase, override_settings
from planner.policy import SURVIVAL, TransportPolicy
from planner.serializers import TransportPolicySerializer


class TransportPolicyTests(SimpleTestCase):
    """Test policy defaults and validation."""

    def test_defaults(self):
        """Test the defaults match the documented transport settings."""
        policy = TransportPolicy()

        self.assertEqual(policy.b_rf_g, 0.05)
        self.assertEqual(policy.atac_ramp_g_per_ms, 1.0)
        self.assertEqual(policy.jump_threshold_mhz, 0.2)
        self.assertEqual(policy.adiabatic_turns, frozenset())

    def test_blue_detuned_frequency(self):
        """Test the rf sits 2% above every crossing by default."""
        policy = TransportPolicy()

        self.assertAlmostEqual(policy.blue_detuned_frequency(13.3321), 13.598742, places=6)
        self.assertAlmostEqual(policy.blue_detuned_frequency(2.36), 2.4072, places=9)
        self.assertAlmostEqual(policy.blue_detuned_frequency(1.0), 1.02, places=12)

    def test_minimum_blue_detuning(self):
        """Test an explicit minimum detuning lifts the rf above narrow crossings only."""
        policy = TransportPolicy(min_blue_detuning_mhz=0.25)

        self.assertEqual(policy.blue_detuned_frequency(1.0), 1.25)
        self.assertAlmostEqual(policy.blue_detuned_frequency(13.3321), 13.598742, places=6)

    def test_invalid_values_rejected(self):
        """Test negative amplitudes, zero speeds and unknown routings are rejected."""
        for overrides in ({"b_rf_g": -0.01}, {"atac_ramp_g_per_ms": 0.0}, {"routing": "random"}, {"lifetime_ms": 0}):
            with self.subTest(overrides=overrides):
                with self.assertRaises(PlanningError):
                    TransportPolicy(**overrides)

    @override_settings(RF_TRANSPORT={"PLANNER_POLICY": {"b_rf_g": 0.08, "routing": SURVIVAL}})
    def test_from_settings(self):
        """Test settings overrides apply and explicit arguments win."""
        policy = TransportPolicy.from_settings(routing="bfs")

        self.assertEqual(policy.b_rf_g, 0.08)
        self.assertEqual(policy.routing, "bfs")

    def test_unknown_keys_rejected(self):
        """Test keys that are not policy fields are rejected."""
        with self.assertRaisesMessage(PlanningError, "unknown policy keys"):
            TransportPolicy.from_settings(rf_power=1.0)

    def test_document(self):
        """Test a policy document keeps omitted defaults and turns a list into the turn set."""
        serializer = TransportPolicySerializer(data={"b_rf_g": 0.07, "adiabatic_turns": ["K"]})

        self.assertTrue(serializer.is_valid(), serializer.errors)
        policy = serializer.save()
        self.assertEqual(policy.b_rf_g, 0.07)
        self.assertEqual(policy.adiabatic_turns, frozenset({"K"}))
        self.assertEqual(policy.travel_ramp_g_per_ms, 13.0)
        self.assertEqual(TransportPolicySerializer(policy).data["adiabatic_turns"], ["K"])

    def test_invalid_document(self):
        """Test invalid values and unknown keys make the document invalid."""
        self.assertFalse(TransportPolicySerializer(data={"success_floor": 2.0}).is_valid())
        self.assertFalse(TransportPolicySerializer(data={"rf_power": 1.0}).is_valid())
