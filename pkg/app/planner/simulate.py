"""
Run planned actions through the dynamics engine.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from core.exceptions import ActionSimulationError, TransportError
from dynamics.atac import atac_transfer
from dynamics.integrator import LAB, RWA, propagate
from dynamics.schedule import DEFAULT_RISE_TIME_US, PulseSchedule, RampSegment
from dynamics.state import QuantumState, other_branch
from manifold.levels import LevelManifold
from planner.plan import ATAC, DIABATIC_JUMP, CrossingAction, TransportPlan, crossing_frame

logger = logging.getLogger(__name__)

AGREEMENT_TOLERANCE = 0.03


@dataclass(frozen=True)
class ActionOutcome:
    crossing_id: str
    kind: str
    predicted: float
    simulated: float

    @property
    def deviation(self) -> float:
        return self.simulated - self.predicted

    @property
    def flagged(self) -> bool:
        return abs(self.deviation) > AGREEMENT_TOLERANCE


@dataclass(frozen=True)
class PlanSimulation:
    """Simulated success per crossing, in route order, and the end-to-end total."""

    outcomes: tuple[ActionOutcome, ...]
    duration_ms: float
    lifetime_ms: float | None = None

    @property
    def lifetime_factor(self) -> float:
        return 1.0 if self.lifetime_ms is None else math.exp(-self.duration_ms / self.lifetime_ms)

    @property
    def total(self) -> float:
        return self.lifetime_factor * math.prod(outcome.simulated for outcome in self.outcomes)

    @property
    def flagged(self) -> list[str]:
        return [outcome.crossing_id for outcome in self.outcomes if outcome.flagged]


def simulate_action(
    manifold: LevelManifold,
    action: CrossingAction,
    rise_time_us: float | None = DEFAULT_RISE_TIME_US,
    tol: float | None = None,
    *,
    frame_mode: str = RWA,
) -> float:
    """Return the simulated success of one action in the local frame of its crossing.

    An ATAC succeeds when the molecules end in the other dressed branch, a jump
    when they end in the other branch after a static ramp, and a turn when they
    stay in the branch they started in.
    """
    frame = crossing_frame(manifold.crossing(action.crossing_id))
    try:
        if action.kind == ATAC:
            result = atac_transfer(
                frame,
                action.b_rf_g,
                action.f_rf_mhz,
                action.b_from,
                action.b_to,
                action.ramp_speed_g_per_ms,
                start_branch=action.start_branch,
                rise_time_us=rise_time_us,
                frame_mode=frame_mode,
                tol=tol,
            )
            return result.efficiency

        schedule = PulseSchedule.from_segments(
            [RampSegment.ramp(action.b_from, action.b_to, action.ramp_speed_g_per_ms)]
        )
        state = QuantumState.dressed(frame, action.b_from, action.start_branch)
        trace = propagate(state, frame, schedule, tol, frame_mode=LAB)
        target = other_branch(action.start_branch) if action.kind == DIABATIC_JUMP else action.start_branch
        return trace.final.branch_population(frame, action.b_to, target)
    except TransportError as exc:
        raise ActionSimulationError(action.crossing_id, exc) from exc


def simulate_plan(
    manifold: LevelManifold,
    plan: TransportPlan,
    tol: float | None = None,
    *,
    frame_mode: str = RWA,
    max_workers: int = 1,
) -> PlanSimulation:
    """Simulate every action of ``plan`` and compare with the predicted successes.

    Actions are independent two-level problems; with ``max_workers`` > 1 they run
    in a thread pool. Results keep route order either way.
    """
    rise_time_us = plan.policy.rise_time_us

    def run(action: CrossingAction) -> ActionOutcome:
        simulated = simulate_action(manifold, action, rise_time_us, tol, frame_mode=frame_mode)
        logger.debug("Crossing %s (%s): simulated %.6f", action.crossing_id, action.kind, simulated)
        return ActionOutcome(
            crossing_id=action.crossing_id,
            kind=action.kind,
            predicted=action.predicted_success,
            simulated=simulated,
        )

    if max_workers > 1 and len(plan.actions) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outcomes = tuple(pool.map(run, plan.actions))
    else:
        outcomes = tuple(run(action) for action in plan.actions)

    simulation = PlanSimulation(outcomes=outcomes, duration_ms=plan.total_duration_ms, lifetime_ms=plan.lifetime_ms)
    for outcome in outcomes:
        if outcome.flagged:
            logger.warning(
                "Crossing %s: simulated %.4f differs from the predicted %.4f",
                outcome.crossing_id,
                outcome.simulated,
                outcome.predicted,
            )
    logger.info("Simulated %d actions: total %.4f", len(outcomes), simulation.total)
    return simulation
