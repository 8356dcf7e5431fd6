"""
Reading and writing plan documents.
"""

import json
import logging
from pathlib import Path

from core.exceptions import PlanningError
from manifold.loader import flatten_errors
from planner.plan import TransportPlan
from planner.serializers import TransportPlanSerializer

logger = logging.getLogger(__name__)

CONFIG_HASH = "config_hash"


def plan_to_document(plan: TransportPlan) -> dict:
    return TransportPlanSerializer(plan).data


def plan_from_document(document, *, source: str = "<document>") -> TransportPlan:
    """Validate a plan document and rebuild the plan with its schedule."""
    if not isinstance(document, dict):
        raise PlanningError(f"{source}: top level must be an object")
    document = {key: value for key, value in document.items() if key != CONFIG_HASH}
    serializer = TransportPlanSerializer(data=document, context={"where": source})
    if not serializer.is_valid():
        raise PlanningError(f"{source}: " + "; ".join(flatten_errors(serializer.errors)))
    return serializer.save()


def save_plan(plan: TransportPlan, path, *, config_hash: str | None = None) -> Path:
    """Write the plan document, headed by the hash of the run configuration when given."""
    path = Path(path)
    document = plan_to_document(plan)
    if config_hash is not None:
        document = {CONFIG_HASH: config_hash, **document}
    try:
        path.write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise PlanningError(f"cannot write {path}: {exc.strerror or exc}") from exc
    logger.info("Wrote plan %s -> %s to %s", plan.start_level, plan.goal_level, path)
    return path


def load_plan(path) -> TransportPlan:
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise PlanningError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise PlanningError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return plan_from_document(document, source=str(path))
