"""
Exception hierarchy shared by every app.

Each error knows the module that raised it; ``str(error)`` is module-qualified so
the command line can report it as is.
"""


class TransportError(Exception):
    """Base class for every domain error."""

    module = "core"

    def __init__(self, message: str, *, module: str | None = None) -> None:
        super().__init__(message)
        self.message = message
        if module is not None:
            self.module = module

    def __str__(self) -> str:
        return f"{self.module}: {self.message}"


class ManifoldError(TransportError):
    module = "manifold"


class ManifoldParseError(ManifoldError):
    """Manifold file missing or not a valid document."""


class ManifoldValidationError(ManifoldError):
    """Manifold document violates the schema or a manifold invariant."""


class CrossingModelError(TransportError):
    module = "crossing"


class DynamicsError(TransportError):
    module = "dynamics"


class InvalidScheduleError(DynamicsError):
    """Schedule breaks a segment or continuity invariant."""


class StepSizeUnderflowError(DynamicsError):
    """Adaptive step shrank below the representable minimum."""

    def __init__(self, time_us: float, step_us: float) -> None:
        super().__init__(f"step size underflow at t={time_us:.6g} us (step {step_us:.3g} us)")
        self.time_us = time_us
        self.step_us = step_us


class NormDriftError(DynamicsError):
    """State norm left the tolerance band."""

    def __init__(self, time_us: float, drift: float, limit: float) -> None:
        super().__init__(f"norm drift {drift:.3g} exceeds {limit:.3g} at t={time_us:.6g} us")
        self.time_us = time_us
        self.drift = drift


class GeometryError(DynamicsError):
    """ATAC window does not contain exactly one rf-induced crossing."""


class FitError(TransportError):
    """Least-squares fit failed to converge."""

    module = "spectroscopy"


class DegenerateDataError(FitError):
    """Data carry no information about the fitted parameters."""


class PreconditionError(FitError):
    """Input does not meet the documented preconditions of a fit."""


class UndersampledError(FitError):
    """Record too short or too coarse for a frequency estimate."""


class SpectroscopyError(TransportError):
    module = "spectroscopy"


class PlanningError(TransportError):
    module = "planner"


class UnreachableGoalError(PlanningError):
    """No route joins start and goal levels."""


class AmbiguousGeometryError(PlanningError):
    """Action windows cannot be laid out along the route."""


class NoWindowError(PlanningError):
    """No detour window keeps the predicted success above the policy floor."""


class ActionSimulationError(PlanningError):
    """Simulation of a single planned action failed."""

    def __init__(self, crossing_id: str, cause: TransportError) -> None:
        super().__init__(f"crossing {crossing_id!r}: {cause}")
        self.crossing_id = crossing_id
        self.cause = cause


class RunError(TransportError):
    """Command line or artifact handling failure."""
