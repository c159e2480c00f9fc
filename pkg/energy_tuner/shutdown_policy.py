"""Hysteresis carrier shutdown policy over a fixed shutdown order, and the x -> thresholds mapping."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, replace


class PolicyError(Exception):
    """Raised for invalid thresholds, search regions, policy states or x values.

    kind: "domain" for out-of-range inputs, "configuration" for invalid construction.
    """

    def __init__(self, message: str, kind: str = "domain") -> None:
        self.message = message
        self.kind = kind
        super().__init__(message)


@dataclass(frozen=True)
class ThresholdPair:
    """Load thresholds [rho_min, rho_max]; [0, 0] is the all-active baseline."""

    rho_min: float
    rho_max: float

    def __post_init__(self) -> None:
        if self.is_baseline:
            return
        if not (0.0 <= self.rho_min < self.rho_max <= 1.0):
            raise PolicyError(
                f"Thresholds must satisfy 0 <= rho_min < rho_max <= 1, got [{self.rho_min}, {self.rho_max}]",
                kind="configuration",
            )

    @property
    def is_baseline(self) -> bool:
        return self.rho_min == 0.0 and self.rho_max == 0.0

    def as_list(self) -> list[float]:
        return [self.rho_min, self.rho_max]


BASELINE_THRESHOLDS = ThresholdPair(0.0, 0.0)


@dataclass(frozen=True)
class SearchRegion:
    """Straight segment lo -> hi of threshold pairs, element-wise non-decreasing."""

    lo: ThresholdPair = BASELINE_THRESHOLDS
    hi: ThresholdPair = ThresholdPair(0.4, 0.8)

    def __post_init__(self) -> None:
        if self.lo.rho_min > self.hi.rho_min or self.lo.rho_max > self.hi.rho_max:
            raise PolicyError(
                f"Search region must be non-decreasing: lo={self.lo.as_list()}, hi={self.hi.as_list()}",
                kind="configuration",
            )
        if not self.hi.rho_min < self.hi.rho_max:
            raise PolicyError("Search region upper end needs rho_min < rho_max", kind="configuration")


@dataclass(frozen=True)
class PolicyState:
    """Active set = the first active_count carriers of ordered_carriers.

    The first coverage_floor carriers of the order are never shut down.
    """

    ordered_carriers: tuple[str, ...]
    active_count: int
    coverage_floor: int = 1

    def __post_init__(self) -> None:
        n = len(self.ordered_carriers)
        if len(set(self.ordered_carriers)) != n:
            raise PolicyError("Shutdown order lists a carrier twice", kind="configuration")
        if not (1 <= self.coverage_floor <= self.active_count <= n):
            raise PolicyError(
                f"Need 1 <= coverage_floor ({self.coverage_floor}) <= active_count "
                f"({self.active_count}) <= carriers ({n})",
                kind="configuration",
            )

    @classmethod
    def all_active(cls, ordered_carriers: Sequence[str], coverage_floor: int = 1) -> PolicyState:
        order = tuple(ordered_carriers)
        return cls(ordered_carriers=order, active_count=len(order), coverage_floor=coverage_floor)

    @property
    def active(self) -> tuple[str, ...]:
        return self.ordered_carriers[: self.active_count]

    @property
    def eligible(self) -> tuple[str, ...]:
        """Carriers the policy may shut down."""
        return self.ordered_carriers[self.coverage_floor :]


def policy_step(state: PolicyState, mean_load: float, thresholds: ThresholdPair) -> PolicyState:
    """One tick of the hysteresis policy; at most one carrier changes.

    Comparisons are strict: a load equal to a threshold takes no action.
    """
    if mean_load < thresholds.rho_min and state.active_count > state.coverage_floor:
        return replace(state, active_count=state.active_count - 1)
    if mean_load > thresholds.rho_max and state.active_count < len(state.ordered_carriers):
        return replace(state, active_count=state.active_count + 1)
    return state


def thresholds_from_x(x: float, region: SearchRegion) -> ThresholdPair:
    """Point x of the search region: x=0 -> region.lo, x=1 -> region.hi.

    Raises:
        PolicyError: x outside [0, 1].
    """
    if not (0.0 <= x <= 1.0):
        raise PolicyError(f"x must be in [0, 1], got {x}")
    lo, hi = region.lo, region.hi
    return ThresholdPair(
        rho_min=lo.rho_min + x * (hi.rho_min - lo.rho_min),
        rho_max=lo.rho_max + x * (hi.rho_max - lo.rho_max),
    )
