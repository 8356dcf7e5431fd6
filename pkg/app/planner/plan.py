"""
Transport plans through the crossing graph.

Levels are the nodes and crossings the edges of the graph. Every crossing on the
route gets one action: an rf transfer (ATAC), a fast diabatic jump for crossings
narrower than the policy threshold, or an adiabatic turn when the policy asks
for one. Actions are laid out in travel order and joined by rf-free travel ramps
into a single schedule.
"""

import heapq
import logging
import math
from collections import deque
from dataclasses import dataclass, replace

from core.exceptions import AmbiguousGeometryError, GeometryError, NoWindowError, PlanningError, UnreachableGoalError
from crossing.frame import CrossingFrame, effective_sweep_moment, rabi_frequency
from dynamics.atac import ABOVE, BELOW, atac_schedule, atac_segments, atac_window, switch_off_time_us
from dynamics.landau_zener import diabatic_jump_probability, landau_zener_probability, static_crossing_lz
from dynamics.schedule import PulseSchedule, RampSegment, RfDrive
from dynamics.state import LOWER, UPPER
from manifold.levels import AvoidedCrossing, LevelManifold
from manifold.units import US_PER_MS
from planner.policy import SURVIVAL, TransportPolicy

logger = logging.getLogger(__name__)

ATAC = "atac"
DIABATIC_JUMP = "diabatic-jump"
ADIABATIC_TURN = "adiabatic-turn"
ACTION_KINDS = (ATAC, DIABATIC_JUMP, ADIABATIC_TURN)


@dataclass(frozen=True)
class CrossingAction:
    """One planned passage through a crossing.

    The action ramps the field from ``b_from`` to ``b_to``. ``b_x`` is the
    rf-induced crossing of an ATAC and B0 otherwise; ``start_branch`` is the
    dressed branch the molecules occupy when the ramp starts. An ATAC holds the
    field at ``b_to`` for ``switch_off_us`` while its rf falls to zero.
    """

    crossing_id: str
    kind: str
    from_level: str
    to_level: str
    b_from: float
    b_to: float
    b_x: float
    ramp_speed_g_per_ms: float
    predicted_success: float
    b_rf_g: float = 0.0
    f_rf_mhz: float | None = None
    approach: str = ABOVE
    start_branch: str = UPPER
    detoured: bool = False
    switch_off_us: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ACTION_KINDS:
            raise PlanningError(f"crossing {self.crossing_id!r}: unknown action kind {self.kind!r}")
        if not 0.0 <= self.predicted_success <= 1.0:
            raise PlanningError(
                f"crossing {self.crossing_id!r}: predicted success {self.predicted_success} outside [0, 1]"
            )
        if self.kind == ATAC and self.f_rf_mhz is None:
            raise PlanningError(f"crossing {self.crossing_id!r}: ATAC needs an rf frequency")

    @property
    def duration_ms(self) -> float:
        return abs(self.b_to - self.b_from) / self.ramp_speed_g_per_ms + self.switch_off_us / US_PER_MS

    @property
    def descending(self) -> bool:
        return self.approach == ABOVE


@dataclass(frozen=True)
class TransportPlan:
    """Ordered actions from ``start_level`` to ``goal_level`` and the schedule that runs them."""

    start_level: str
    goal_level: str
    route: tuple[str, ...]
    actions: tuple[CrossingAction, ...]
    schedule: PulseSchedule
    policy: TransportPolicy
    b_start: float | None = None
    lifetime_ms: float | None = None

    @property
    def total_duration_ms(self) -> float:
        return self.schedule.duration_ms

    @property
    def survival(self) -> float:
        return survival_estimate(self, self.lifetime_ms)

    @property
    def breakdown(self) -> list[dict]:
        """Per-crossing summary in route order."""
        return [
            {
                "crossing_id": action.crossing_id,
                "kind": action.kind,
                "from_level": action.from_level,
                "to_level": action.to_level,
                "window_ms": action.duration_ms,
                "predicted_success": action.predicted_success,
            }
            for action in self.actions
        ]


def crossing_frame(crossing: AvoidedCrossing) -> CrossingFrame:
    return CrossingFrame.from_crossing(crossing)


def start_branch(crossing: AvoidedCrossing, from_level: str, approach: str) -> str:
    """Return the dressed branch a molecule on ``from_level`` occupies on the approach side of B0."""
    on_upper_level = from_level == crossing.level_upper.id
    positive_detuning = (approach == ABOVE) == (crossing.delta_mu > 0.0)
    return UPPER if on_upper_level == positive_detuning else LOWER


def atac_success(frame: CrossingFrame, b_rf: float, f_rf: float, b_x: float, ramp_speed: float) -> float:
    """Return the Landau-Zener transfer probability at the rf-induced crossing ``b_x``."""
    dmu = effective_sweep_moment(frame, f_rf)
    if dmu == 0.0:
        return 0.0
    return landau_zener_probability(rabi_frequency(frame.at(b_x), b_rf), ramp_speed, dmu)


def _switch_off(frame: CrossingFrame, b_rf: float, f_rf: float, b_to: float, policy: TransportPolicy) -> float:
    if policy.rise_time_us is None:
        return 0.0
    return switch_off_time_us(frame, b_rf, f_rf, b_to, policy.rise_time_us)


def choose_action(
    crossing: AvoidedCrossing,
    from_level: str,
    policy: TransportPolicy,
    approach: str = ABOVE,
) -> CrossingAction:
    """Select and parametrize the action for one crossing approached from one side."""
    frame = crossing_frame(crossing)
    to_level = crossing.other(from_level)
    branch = start_branch(crossing, from_level, approach)
    sign = 1.0 if approach == ABOVE else -1.0

    if crossing.id in policy.adiabatic_turns or crossing.coupling_omega <= policy.jump_threshold_mhz:
        turn = crossing.id in policy.adiabatic_turns
        speed = policy.turn_ramp_g_per_ms if turn else policy.jump_ramp_g_per_ms
        half_width = (
            policy.window_margin_g if turn else policy.jump_window_omegas * frame.omega / abs(frame.delta_mu)
        )
        success = static_crossing_lz(frame, speed) if turn else diabatic_jump_probability(frame, speed)
        return CrossingAction(
            crossing_id=crossing.id,
            kind=ADIABATIC_TURN if turn else DIABATIC_JUMP,
            from_level=from_level,
            to_level=to_level,
            b_from=frame.b0 + sign * half_width,
            b_to=frame.b0 - sign * half_width,
            b_x=frame.b0,
            ramp_speed_g_per_ms=speed,
            predicted_success=success,
            approach=approach,
            start_branch=branch,
        )

    f_rf = policy.blue_detuned_frequency(frame.omega)
    try:
        b_from, b_to, b_x = atac_window(frame, f_rf, policy.window_margin_g, approach)
    except GeometryError as exc:
        raise AmbiguousGeometryError(f"crossing {crossing.id!r}: {exc.message}") from exc
    return CrossingAction(
        crossing_id=crossing.id,
        kind=ATAC,
        from_level=from_level,
        to_level=to_level,
        b_from=b_from,
        b_to=b_to,
        b_x=b_x,
        ramp_speed_g_per_ms=policy.atac_ramp_g_per_ms,
        predicted_success=atac_success(frame, policy.b_rf_g, f_rf, b_x, policy.atac_ramp_g_per_ms),
        b_rf_g=policy.b_rf_g,
        f_rf_mhz=f_rf,
        approach=approach,
        start_branch=branch,
        switch_off_us=_switch_off(frame, policy.b_rf_g, f_rf, b_to, policy),
    )


def _neighbours(manifold: LevelManifold, level_id: str):
    for crossing in sorted(manifold.crossings_of(level_id), key=lambda c: c.id):
        yield crossing, crossing.other(level_id)


def _unwind(previous: dict, goal: str) -> list[tuple[AvoidedCrossing, str]]:
    steps = []
    level = goal
    while previous[level] is not None:
        crossing, from_level = previous[level]
        steps.append((crossing, from_level))
        level = from_level
    return steps[::-1]


def _breadth_first(manifold: LevelManifold, start: str, goal: str):
    previous = {start: None}
    queue = deque([start])
    while queue:
        level = queue.popleft()
        if level == goal:
            return _unwind(previous, goal)
        for crossing, other in _neighbours(manifold, level):
            if other not in previous:
                previous[other] = (crossing, level)
                queue.append(other)
    return None


def _most_likely(manifold: LevelManifold, start: str, goal: str, policy: TransportPolicy):
    """Dijkstra on -log(predicted success) per crossing."""
    previous = {start: None}
    cost = {start: 0.0}
    heap = [(0.0, start)]
    done = set()
    while heap:
        distance, level = heapq.heappop(heap)
        if level in done:
            continue
        if level == goal:
            return _unwind(previous, goal)
        done.add(level)
        for crossing, other in _neighbours(manifold, level):
            success = choose_action(crossing, level, policy).predicted_success
            if success <= 0.0 or other in done:
                continue
            candidate = distance - math.log(success)
            if candidate < cost.get(other, math.inf):
                cost[other] = candidate
                previous[other] = (crossing, level)
                heapq.heappush(heap, (candidate, other))
    return None


def find_route(
    manifold: LevelManifold,
    start_level: str,
    goal_level: str,
    policy: TransportPolicy,
) -> list[tuple[AvoidedCrossing, str]]:
    """Return (crossing, from_level) pairs leading from start to goal."""
    for level_id in (start_level, goal_level):
        if not manifold.has_level(level_id):
            raise UnreachableGoalError(f"unknown level {level_id!r}")
    if policy.routing == SURVIVAL:
        route = _most_likely(manifold, start_level, goal_level, policy)
    else:
        route = _breadth_first(manifold, start_level, goal_level)
    if route is None:
        raise UnreachableGoalError(f"no route from {start_level!r} to {goal_level!r}")
    return route


def _action_segments(action: CrossingAction, policy: TransportPolicy) -> list[RampSegment]:
    if action.kind != ATAC:
        return [RampSegment.ramp(action.b_from, action.b_to, action.ramp_speed_g_per_ms)]
    rf = RfDrive(amplitude_g=action.b_rf_g, frequency_mhz=action.f_rf_mhz)
    return atac_segments(
        rf, action.b_from, action.b_to, action.ramp_speed_g_per_ms, policy.rise_time_us, action.switch_off_us
    )


def build_schedule(
    actions,
    policy: TransportPolicy,
    b_start: float | None = None,
) -> PulseSchedule:
    """Join the action ramps with rf-free travel legs.

    Travel legs run at ``policy.travel_ramp_g_per_ms``. The schedule starts at
    ``b_start`` (default: the first action's ``b_from``) and ends at
    ``policy.final_field_g`` when that is set.
    """
    actions = list(actions)
    b_current = b_start
    if b_current is None:
        b_current = actions[0].b_from if actions else (policy.final_field_g or 0.0)
    initial = b_current
    segments = []

    for action in actions:
        if action.b_from != b_current:
            segments.append(RampSegment.ramp(b_current, action.b_from, policy.travel_ramp_g_per_ms))
        segments.extend(_action_segments(action, policy))
        b_current = action.b_to

    if policy.final_field_g is not None and policy.final_field_g != b_current:
        segments.append(RampSegment.ramp(b_current, policy.final_field_g, policy.travel_ramp_g_per_ms))
    return PulseSchedule(segments=tuple(segments), b_initial=initial)


def _check_layout(actions, b_start: float | None) -> None:
    b_current = b_start
    for action in actions:
        if b_current is not None:
            behind = action.b_from > b_current if action.descending else action.b_from < b_current
            if behind:
                raise AmbiguousGeometryError(
                    f"crossing {action.crossing_id!r}: window starts at {action.b_from:.6g} G, behind the field "
                    f"{b_current:.6g} G reached before it"
                )
        b_current = action.b_to


def plan_path(
    manifold: LevelManifold,
    start_level: str,
    goal_level: str,
    policy: TransportPolicy | None = None,
    *,
    b_start: float | None = None,
) -> TransportPlan:
    """Route from ``start_level`` to ``goal_level`` and compile the transport schedule.

    Each crossing is approached from the side the field currently is on. Without
    ``b_start`` the first crossing is approached from above.
    """
    policy = TransportPolicy.from_settings() if policy is None else policy
    route = find_route(manifold, start_level, goal_level, policy)

    actions = []
    b_current = b_start
    for crossing, from_level in route:
        approach = ABOVE if b_current is None or crossing.crossing_field_b0 <= b_current else BELOW
        action = choose_action(crossing, from_level, policy, approach)
        actions.append(action)
        b_current = action.b_to

    _check_layout(actions, b_start)
    plan = TransportPlan(
        start_level=start_level,
        goal_level=goal_level,
        route=tuple(crossing.id for crossing, _ in route),
        actions=tuple(actions),
        schedule=build_schedule(actions, policy, b_start),
        policy=policy,
        b_start=b_start,
        lifetime_ms=policy.lifetime_ms if policy.lifetime_ms is not None else manifold.lifetime_ms,
    )
    logger.info(
        "Planned %s -> %s over %d crossings: %.4g ms, survival %.4f",
        start_level,
        goal_level,
        len(actions),
        plan.total_duration_ms,
        plan.survival,
    )
    return plan


def survival_estimate(plan: TransportPlan, lifetime_ms: float | None = None) -> float:
    """Return exp(-T / lifetime) times the product of the predicted action successes."""
    product = math.prod(action.predicted_success for action in plan.actions)
    if lifetime_ms is None:
        return product
    return math.exp(-plan.total_duration_ms / lifetime_ms) * product


def _obstacles(manifold: LevelManifold, action: CrossingAction, previous_id, b_travel_start: float):
    low, high = sorted((action.b_x, b_travel_start))
    return [
        crossing
        for crossing in manifold.crossings_of(action.from_level)
        if crossing.id not in (action.crossing_id, previous_id) and low < crossing.crossing_field_b0 < high
    ]


def _detour(crossing: AvoidedCrossing, action: CrossingAction, obstacles, policy: TransportPolicy):
    frame = crossing_frame(crossing)
    clearance = policy.detour_clearance_g
    margin = policy.window_margin_g
    if action.descending:
        b_obs = max(obstacle.crossing_field_b0 for obstacle in obstacles)
        b_x = b_obs + clearance
        b_from, b_to = b_x + margin, max(b_x - margin, b_obs + 0.5 * clearance)
    else:
        b_obs = min(obstacle.crossing_field_b0 for obstacle in obstacles)
        b_x = b_obs - clearance
        b_from, b_to = b_x - margin, min(b_x + margin, b_obs - 0.5 * clearance)

    f_rf = frame.splitting(b_x)
    success = atac_success(frame, action.b_rf_g, f_rf, b_x, action.ramp_speed_g_per_ms)
    if success < policy.success_floor:
        raise NoWindowError(
            f"crossing {crossing.id!r}: transfer moved to {b_x:.6g} G predicts {success:.4g}, "
            f"below the floor {policy.success_floor}"
        )
    try:
        atac_schedule(frame, action.b_rf_g, f_rf, b_from, b_to, action.ramp_speed_g_per_ms)
    except GeometryError as exc:
        raise NoWindowError(f"crossing {crossing.id!r}: {exc.message}") from exc

    names = ", ".join(obstacle.id for obstacle in obstacles)
    logger.info("Moved the transfer at crossing %s to %.6g G (%.6g MHz) around %s", crossing.id, b_x, f_rf, names)
    return replace(
        action,
        b_from=b_from,
        b_to=b_to,
        b_x=b_x,
        f_rf_mhz=f_rf,
        predicted_success=success,
        detoured=True,
        switch_off_us=_switch_off(frame, action.b_rf_g, f_rf, b_to, policy),
    )


def detour_check(manifold: LevelManifold, plan: TransportPlan, policy: TransportPolicy | None = None):
    """Move ATAC windows that would meet another crossing of the same level before the transfer.

    Travel towards an ATAC stays on the starting level. When another crossing of
    that level lies between the travel start and the rf-induced crossing, the
    transfer is done ``detour_clearance_g`` before reaching it with the rf tuned
    to the local splitting. A plan without such crossings comes back unchanged.
    """
    policy = plan.policy if policy is None else policy
    actions = list(plan.actions)
    changed = False
    previous_id = None
    b_current = plan.b_start

    for index, action in enumerate(actions):
        travel_start = action.b_from if b_current is None else b_current
        if action.kind == ATAC:
            obstacles = _obstacles(manifold, action, previous_id, travel_start)
            if obstacles:
                actions[index] = action = _detour(manifold.crossing(action.crossing_id), action, obstacles, policy)
                changed = True
        previous_id = action.crossing_id
        b_current = action.b_to

    if not changed:
        return plan
    _check_layout(actions, plan.b_start)
    return replace(plan, actions=tuple(actions), schedule=build_schedule(actions, policy, plan.b_start))
