"""
Tests for routing, action selection, detours and survival estimates.
"""

import itertools
import math
from dataclasses import replace

from core.exceptions import AmbiguousGeometryError, NoWindowError, UnreachableGoalError
from django.test import SimpleTestCase
from dynamics.schedule import PulseSchedule, RampSegment, schedule_from_rows, schedule_rows
from dynamics.state import LOWER
from hypothesis import given, settings
from hypothesis import strategies as st
from manifold.levels import AvoidedCrossing, BareLevel, LevelManifold, QuantumLabels
from manifold.loader import fixture_path, load_manifold
from planner.plan import (
    ADIABATIC_TURN,
    ATAC,
    DIABATIC_JUMP,
    CrossingAction,
    TransportPlan,
    detour_check,
    plan_path,
    survival_estimate,
)
from planner.policy import SURVIVAL, TransportPolicy

LABELS = QuantumLabels(l=0, F_tot=2, m_Ftot=2, F=2, f1=1, f2=1, nu=-2)


def make_manifold(moments, crossings, lifetime_ms=None):
    """Create and return a manifold from level moments and (id, lower, upper, omega, b0) tuples."""
    levels = {
        level_id: BareLevel(id=level_id, labels=LABELS, energy_at_zero=0.0, magnetic_moment=moment)
        for level_id, moment in moments.items()
    }
    return LevelManifold(
        levels=tuple(levels.values()),
        crossings=tuple(
            AvoidedCrossing(
                id=crossing_id,
                level_lower=levels[lower],
                level_upper=levels[upper],
                coupling_omega=omega,
                crossing_field_b0=b0,
            )
            for crossing_id, lower, upper, omega, b0 in crossings
        ),
        lifetime_ms=lifetime_ms,
    )


def detour_manifold(omega_c=44.756):
    """Create and return a manifold where crossing B sits on the level travelled towards crossing C."""
    return make_manifold(
        {"feshbach": 0.0, "s-nu-2": 2.8, "d-nu-2": 1.4, "s-nu-3": 5.6},
        [
            ("A", "feshbach", "s-nu-2", 13.3321, 1001.4),
            ("B", "d-nu-2", "s-nu-2", 7.0, 874.0),
            ("C", "s-nu-2", "s-nu-3", omega_c, 845.8),
        ],
        lifetime_ms=280.0,
    )


def fixed_plan(durations_ms, successes):
    """Create and return a plan holding for ``durations_ms`` with actions of the given successes."""
    actions = tuple(
        CrossingAction(
            crossing_id=f"X{index}",
            kind=ATAC,
            from_level="a",
            to_level="b",
            b_from=10.0,
            b_to=9.0,
            b_x=9.5,
            ramp_speed_g_per_ms=1.0,
            predicted_success=success,
            f_rf_mhz=1.0,
        )
        for index, success in enumerate(successes)
    )
    segments = [RampSegment.hold(0.0, durations_ms)] if durations_ms else []
    return TransportPlan(
        start_level="a",
        goal_level="b",
        route=tuple(action.crossing_id for action in actions),
        actions=actions,
        schedule=PulseSchedule(segments=tuple(segments), b_initial=0.0),
        policy=TransportPolicy(),
    )


class PlanPathTests(SimpleTestCase):
    """Test routes and actions."""

    def setUp(self) -> None:
        self.fig1 = load_manifold(fixture_path("fig1_path.cfg"))

    def test_single_crossing(self):
        """Test a one-crossing manifold gives one ATAC with the default drive."""
        manifold = load_manifold(fixture_path("crossing_a.cfg"))

        plan = plan_path(manifold, "feshbach", "s-nu-2")

        self.assertEqual(len(plan.actions), 1)
        action = plan.actions[0]
        self.assertEqual(action.kind, ATAC)
        self.assertEqual(action.b_rf_g, 0.05)
        self.assertAlmostEqual(action.f_rf_mhz, 13.598742, places=6)
        self.assertEqual(action.b_to, 1001.4)
        self.assertEqual(action.start_branch, LOWER)
        self.assertGreater(action.predicted_success, 0.999)

    def test_full_path(self):
        """Test the street map compiles to ten transfers and one jump at G."""
        plan = plan_path(self.fig1, "feshbach", "nu-5")

        self.assertEqual(plan.route, tuple("ABCDEFGHIJK"))
        kinds = {action.crossing_id: action.kind for action in plan.actions}
        self.assertEqual(kinds.pop("G"), DIABATIC_JUMP)
        self.assertEqual(set(kinds.values()), {ATAC})
        self.assertEqual(len(kinds), 10)
        self.assertEqual(plan.actions[-1].to_level, "nu-5")

    def test_full_path_survival(self):
        """Test about 90 ms of transport with a 280 ms lifetime leaves between 50 and 75 percent."""
        plan = plan_path(self.fig1, "feshbach", "nu-5")

        self.assertGreater(plan.total_duration_ms, 85.0)
        self.assertLess(plan.total_duration_ms, 100.0)
        self.assertEqual(plan.lifetime_ms, 280.0)
        self.assertGreaterEqual(plan.survival, 0.50)
        self.assertLessEqual(plan.survival, 0.75)
        self.assertEqual(plan.schedule.b_final, 0.0)

    def test_schedule_continuity(self):
        """Test segments join exactly and every action window is one run of rf segments."""
        plan = plan_path(self.fig1, "feshbach", "nu-5")
        segments = plan.schedule.segments

        for before, after in zip(segments, segments[1:]):
            self.assertEqual(before.b_end, after.b_start)
        windows = []
        for has_rf, run in itertools.groupby(segments, key=lambda segment: segment.has_rf):
            if has_rf:
                run = list(run)
                windows.append((run[0].b_start, run[-1].b_end, round(run[-1].duration_us, 6)))
        atacs = [action for action in plan.actions if action.kind == ATAC]
        expected = [(action.b_from, action.b_to, round(action.switch_off_us, 6)) for action in atacs]
        self.assertEqual(windows, expected)
        rebuilt = schedule_from_rows(schedule_rows(plan.schedule))
        self.assertAlmostEqual(rebuilt.duration_ms, plan.total_duration_ms, places=9)

    def test_narrow_crossings_held_for_switch_off(self):
        """Test crossings with the rf close to resonance at B0 get a longer switch-off than wide ones."""
        plan = plan_path(self.fig1, "feshbach", "nu-5")
        actions = {action.crossing_id: action for action in plan.actions}

        self.assertEqual(actions["A"].switch_off_us, 10.0)
        self.assertAlmostEqual(actions["E"].f_rf_mhz, 2.4072, places=9)
        self.assertGreater(actions["E"].switch_off_us, 100.0)
        for crossing_id in "DFHI":
            self.assertGreater(actions[crossing_id].switch_off_us, actions["E"].switch_off_us)
        self.assertEqual(actions["G"].switch_off_us, 0.0)
        ramp = abs(actions["E"].b_to - actions["E"].b_from) / actions["E"].ramp_speed_g_per_ms
        self.assertAlmostEqual(actions["E"].duration_ms, ramp + actions["E"].switch_off_us / 1000.0, places=12)

    def test_deterministic(self):
        """Test identical inputs give identical plans."""
        self.assertEqual(plan_path(self.fig1, "feshbach", "nu-5"), plan_path(self.fig1, "feshbach", "nu-5"))

    def test_adiabatic_turn(self):
        """Test a crossing listed as a turn is followed slowly instead of transferred."""
        plan = plan_path(self.fig1, "feshbach", "nu-5", TransportPolicy(adiabatic_turns={"K"}))

        turn = plan.actions[-1]
        self.assertEqual(turn.kind, ADIABATIC_TURN)
        self.assertEqual(turn.ramp_speed_g_per_ms, 1.3)
        self.assertGreater(turn.predicted_success, 0.99)

    def test_disconnected_goal(self):
        """Test a goal without crossings is unreachable."""
        manifold = make_manifold(
            {"a": 0.0, "b": 1.0, "island": 2.0},
            [("X", "a", "b", 5.0, 100.0)],
        )

        with self.assertRaises(UnreachableGoalError):
            plan_path(manifold, "a", "island")
        with self.assertRaises(UnreachableGoalError):
            plan_path(manifold, "a", "nowhere")

    def test_start_is_goal(self):
        """Test a plan to the starting level has no actions and full survival."""
        plan = plan_path(self.fig1, "feshbach", "feshbach")

        self.assertEqual(plan.actions, ())
        self.assertEqual(plan.total_duration_ms, 0.0)
        self.assertEqual(plan.survival, 1.0)

    def test_overlapping_windows(self):
        """Test crossings too close to lay out one after the other are rejected."""
        manifold = make_manifold(
            {"a": 1.0, "b": 2.0, "c": 3.0},
            [("Y", "a", "b", 5.0, 500.0), ("Z", "b", "c", 5.0, 499.5)],
        )

        with self.assertRaises(AmbiguousGeometryError):
            plan_path(manifold, "a", "c")

    def test_survival_routing(self):
        """Test survival routing avoids a short route through a poor jump."""
        manifold = make_manifold(
            {"a": 1.0, "b": 2.0, "c": 3.0},
            [("Y", "a", "b", 5.0, 500.0), ("Z", "b", "c", 5.0, 400.0), ("X", "a", "c", 0.15, 450.0)],
        )

        shortest = plan_path(manifold, "a", "c")
        likeliest = plan_path(manifold, "a", "c", TransportPolicy(routing=SURVIVAL))

        self.assertEqual(shortest.route, ("X",))
        self.assertLess(shortest.actions[0].predicted_success, 0.2)
        self.assertEqual(likeliest.route, ("Y", "Z"))

    def test_approach_from_below(self):
        """Test a crossing above the start field is approached from below."""
        manifold = load_manifold(fixture_path("crossing_a.cfg"))

        plan = plan_path(manifold, "feshbach", "s-nu-2", TransportPolicy(final_field_g=None), b_start=990.0)

        action = plan.actions[0]
        self.assertEqual(action.approach, "below")
        self.assertLess(action.b_from, action.b_x)
        self.assertLessEqual(action.b_to, 1001.4)
        self.assertEqual(plan.schedule.b_initial, 990.0)
        self.assertEqual(plan.schedule.b_final, action.b_to)

    @given(st.floats(0.001, 0.1), st.floats(0.001, 0.1), st.floats(0.2, 5.0), st.floats(0.2, 5.0))
    @settings(deadline=None, max_examples=50)
    def test_monotonic_success(self, b_rf_1, b_rf_2, speed_1, speed_2):
        """Test more rf never lowers the predicted success and a faster ramp never raises it."""
        manifold = load_manifold(fixture_path("crossing_a.cfg"))
        low_rf, high_rf = sorted((b_rf_1, b_rf_2))
        slow, fast = sorted((speed_1, speed_2))

        def success(b_rf, speed):
            policy = TransportPolicy(b_rf_g=b_rf, atac_ramp_g_per_ms=speed)
            return plan_path(manifold, "feshbach", "s-nu-2", policy).actions[0].predicted_success

        self.assertLessEqual(success(low_rf, 1.0), success(high_rf, 1.0))
        self.assertGreaterEqual(success(0.002, slow), success(0.002, fast))


class DetourCheckTests(SimpleTestCase):
    """Test moving transfers away from intervening crossings."""

    def test_transfer_moved_before_crossing_b(self):
        """Test the transfer at C moves to 876 G, clear of B at 874 G."""
        manifold = detour_manifold()
        plan = plan_path(manifold, "feshbach", "s-nu-3")
        self.assertEqual(plan.route, ("A", "C"))
        self.assertLess(plan.actions[1].b_x, 874.0)

        adjusted = detour_check(manifold, plan)

        action = adjusted.actions[1]
        self.assertTrue(action.detoured)
        self.assertEqual(action.b_x, 876.0)
        self.assertGreaterEqual(action.b_to, 875.0)
        self.assertAlmostEqual(action.f_rf_mhz, 95.67, places=2)
        self.assertGreaterEqual(action.predicted_success, 0.9)
        self.assertEqual(adjusted.actions[0], plan.actions[0])
        rf_fields = [(segment.b_start, segment.b_end) for segment in adjusted.schedule.segments if segment.has_rf]
        self.assertIn(action.b_from, [start for start, _ in rf_fields])
        self.assertIn((action.b_to, action.b_to), rf_fields)

    def test_plan_without_interference_unchanged(self):
        """Test the street-map plan needs no detour."""
        manifold = load_manifold(fixture_path("fig1_path.cfg"))
        plan = plan_path(manifold, "feshbach", "nu-5")

        self.assertIs(detour_check(manifold, plan), plan)

    def test_no_window(self):
        """Test a narrow crossing is too weakly coupled 30 G away from it."""
        manifold = detour_manifold(omega_c=1.0)
        plan = plan_path(manifold, "feshbach", "s-nu-3")

        with self.assertRaises(NoWindowError):
            detour_check(manifold, plan)

    def test_lower_floor_accepts_weak_transfer(self):
        """Test the floor decides whether a weak detour is acceptable."""
        manifold = detour_manifold(omega_c=1.0)
        plan = plan_path(manifold, "feshbach", "s-nu-3")

        adjusted = detour_check(manifold, plan, replace(plan.policy, success_floor=0.0))

        self.assertLess(adjusted.actions[1].predicted_success, 0.1)


class SurvivalEstimateTests(SimpleTestCase):
    """Test end-to-end survival."""

    def test_lifetime_and_actions(self):
        """Test 90 ms with a 280 ms lifetime and ten actions at 0.995 gives about 0.69."""
        plan = fixed_plan(90.0, [0.995] * 10)

        survival = survival_estimate(plan, 280.0)

        self.assertAlmostEqual(survival, math.exp(-90.0 / 280.0) * 0.995**10, places=12)
        self.assertAlmostEqual(survival, 0.69, places=2)

    def test_without_lifetime(self):
        """Test without a lifetime only the actions count."""
        plan = fixed_plan(90.0, [0.9, 0.8])

        self.assertAlmostEqual(survival_estimate(plan), 0.72, places=12)

    def test_empty_plan(self):
        """Test no actions and no time survive completely."""
        self.assertEqual(survival_estimate(fixed_plan(0.0, []), 280.0), 1.0)
