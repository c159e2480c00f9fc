"""Power amplifier model: affine power in load with a sleep floor, many carriers per PA."""

from __future__ import annotations

import math
from collections.abc import Collection, Mapping
from dataclasses import dataclass, field

# Arbitrary units; the curve shape matters, not the constants.
DEFAULT_SLOPE_A = 2.0
DEFAULT_IDLE_B = 10.0
DEFAULT_SLEEP_P = 3.0


class PowerModelError(Exception):
    """Raised for invalid loads or an inconsistent carrier/PA configuration.

    kind: "domain" for out-of-range inputs, "configuration" for bad maps or curves.
    """

    def __init__(self, message: str, kind: str = "domain") -> None:
        self.message = message
        self.kind = kind
        super().__init__(message)


@dataclass(frozen=True)
class PowerCurve:
    """P(l) = slope_a * l + idle_b while awake, sleep_p once every carrier of the PA is off."""

    slope_a: float = DEFAULT_SLOPE_A
    idle_b: float = DEFAULT_IDLE_B
    sleep_p: float = DEFAULT_SLEEP_P

    def __post_init__(self) -> None:
        values = (self.slope_a, self.idle_b, self.sleep_p)
        if not all(math.isfinite(v) and v >= 0 for v in values):
            raise PowerModelError(
                f"Power curve values must be finite and >= 0, got {values}",
                kind="configuration",
            )
        if not self.sleep_p < self.idle_b:
            raise PowerModelError(
                f"sleep_p ({self.sleep_p}) must be lower than idle_b ({self.idle_b})",
                kind="configuration",
            )


@dataclass(frozen=True)
class PaMap:
    """Carrier -> PA assignment plus the power curve of every PA."""

    pa_of_carrier: Mapping[str, str]
    curve_of_pa: Mapping[str, PowerCurve] = field(default_factory=dict)

    def __post_init__(self) -> None:
        missing = sorted({pa for pa in self.pa_of_carrier.values() if pa not in self.curve_of_pa})
        if missing:
            raise PowerModelError(f"No power curve configured for PA(s): {missing}", kind="configuration")

    def carriers_of(self, pa_id: str) -> list[str]:
        return [c for c, pa in self.pa_of_carrier.items() if pa == pa_id]


def pa_power(total_load_on_pa: float, any_carrier_active: bool, curve: PowerCurve) -> float:
    """Instantaneous power of one PA.

    The l -> 0+ limit of an awake PA is idle_b, not sleep_p: being awake at zero load
    still pays the idle cost.

    Raises:
        PowerModelError: load outside [0, 1].
    """
    if not (0.0 <= total_load_on_pa <= 1.0):
        raise PowerModelError(f"PA load must be in [0, 1], got {total_load_on_pa}")
    if not any_carrier_active:
        return curve.sleep_p
    return curve.slope_a * total_load_on_pa + curve.idle_b


def sector_power(
    active: Collection[str],
    loads: Mapping[str, float],
    pa_map: PaMap,
) -> float:
    """Sum of PA power over the sector.

    A PA sleeps iff all of its carriers are inactive; an awake PA carries the mean load
    of its active carriers.

    Args:
        active: Ids of active carriers.
        loads: Load fraction per carrier; must cover every active carrier.
        pa_map: Carrier -> PA assignment and curves.

    Returns:
        Total watts over every PA in the map.

    Raises:
        PowerModelError: active carrier missing from the map or from loads (configuration),
            load outside [0, 1] (domain).
    """
    unknown = sorted(c for c in active if c not in pa_map.pa_of_carrier)
    if unknown:
        raise PowerModelError(f"Active carrier(s) not in PA map: {unknown}", kind="configuration")
    no_load = sorted(c for c in active if c not in loads)
    if no_load:
        raise PowerModelError(f"No load given for active carrier(s): {no_load}", kind="configuration")

    active_set = set(active)
    total = 0.0
    for pa_id, curve in pa_map.curve_of_pa.items():
        on = [c for c in pa_map.carriers_of(pa_id) if c in active_set]
        if not on:
            total += pa_power(0.0, False, curve)
            continue
        pa_load = sum(loads[c] for c in on) / len(on)
        total += pa_power(pa_load, True, curve)
    return total
