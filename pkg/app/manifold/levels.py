"""
Level manifold data model.
"""

import itertools
from dataclasses import dataclass, field


@dataclass(frozen=True)
class QuantumLabels:
    """Quantum numbers identifying a molecular level."""

    l: int  # noqa: E741
    F_tot: int
    m_Ftot: int
    F: int
    f1: int
    f2: int
    nu: int

    ALLOWED_PARTIAL_WAVES = frozenset({0, 2, 4})

    @property
    def wave(self) -> str:
        return {0: "s", 2: "d", 4: "g"}.get(self.l, str(self.l))


@dataclass(frozen=True)
class BareLevel:
    """Uncoupled level, linear in the magnetic field."""

    id: str
    labels: QuantumLabels
    energy_at_zero: float
    magnetic_moment: float

    def energy(self, b_gauss: float) -> float:
        """Return E/h in MHz at the given field."""
        return self.energy_at_zero + self.magnetic_moment * b_gauss


@dataclass(frozen=True)
class AvoidedCrossing:
    """Two bare levels coupled with a minimal splitting ``coupling_omega`` (MHz)."""

    id: str
    level_lower: BareLevel
    level_upper: BareLevel
    coupling_omega: float
    crossing_field_b0: float
    estimate: bool = False

    @property
    def level_ids(self) -> tuple[str, str]:
        return (self.level_lower.id, self.level_upper.id)

    @property
    def delta_mu(self) -> float:
        """mu2 - mu1 with level 1 the lower and level 2 the upper level."""
        return self.level_upper.magnetic_moment - self.level_lower.magnetic_moment

    def involves(self, level_id: str) -> bool:
        return level_id in self.level_ids

    def other(self, level_id: str) -> str:
        """Return the id of the level across the crossing from ``level_id``."""
        lower, upper = self.level_ids
        if level_id == lower:
            return upper
        if level_id == upper:
            return lower
        raise KeyError(f"level {level_id!r} is not part of crossing {self.id!r}")


@dataclass(frozen=True)
class LevelManifold:
    """Levels and their crossings, crossings ordered by descending field."""

    levels: tuple[BareLevel, ...] = ()
    crossings: tuple[AvoidedCrossing, ...] = ()
    lifetime_ms: float | None = None
    notes: str = ""
    _level_index: dict = field(init=False, repr=False, compare=False, default_factory=dict)
    _crossing_index: dict = field(init=False, repr=False, compare=False, default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "levels", tuple(self.levels))
        object.__setattr__(
            self, "crossings", tuple(sorted(self.crossings, key=lambda c: c.crossing_field_b0, reverse=True))
        )
        self._level_index.update({level.id: level for level in self.levels})
        self._crossing_index.update({crossing.id: crossing for crossing in self.crossings})

    def level(self, level_id: str) -> BareLevel:
        try:
            return self._level_index[level_id]
        except KeyError:
            raise KeyError(f"unknown level {level_id!r}") from None

    def crossing(self, crossing_id: str) -> AvoidedCrossing:
        try:
            return self._crossing_index[crossing_id]
        except KeyError:
            raise KeyError(f"unknown crossing {crossing_id!r}") from None

    def has_level(self, level_id: str) -> bool:
        return level_id in self._level_index

    def crossings_of(self, level_id: str) -> list[AvoidedCrossing]:
        """Crossings involving a level, in manifold order."""
        return [crossing for crossing in self.crossings if crossing.involves(level_id)]


def intersection_field(first: BareLevel, second: BareLevel) -> float | None:
    """Return the field where two levels intersect, or None for parallel levels."""
    slope_difference = first.magnetic_moment - second.magnetic_moment
    if slope_difference == 0.0:
        return None
    return (second.energy_at_zero - first.energy_at_zero) / slope_difference


def find_crossings(levels, b_range: tuple[float, float]) -> list[tuple[tuple[BareLevel, BareLevel], float]]:
    """Return every pairwise intersection inside ``b_range``, descending in field."""
    b_min, b_max = b_range
    if not b_min < b_max:
        raise ValueError(f"empty field range [{b_min}, {b_max}]")

    found = []
    for first, second in itertools.combinations(levels, 2):
        b0 = intersection_field(first, second)
        if b0 is not None and b_min <= b0 <= b_max:
            found.append(((first, second), b0))

    found.sort(key=lambda item: item[1], reverse=True)
    return found


def bare_energies(manifold: LevelManifold, b_gauss: float) -> dict[str, float]:
    """Return E/h (MHz) of every level at the given field."""
    return {level.id: level.energy(b_gauss) for level in manifold.levels}
