"""Synthetic sector traffic: demand/CQI traces, load redistribution and KPI sampling."""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.special import expit

logger = logging.getLogger(__name__)

CQI_MIN = 0.0
CQI_MAX = 15.0
TRACE_COLUMNS = ("tick", "demand", "cqi")
SECONDS_PER_DAY = 86_400
SECONDS_PER_HOUR = 3_600


class TrafficError(Exception):
    """Raised for invalid traffic inputs or malformed trace files.

    kind: "domain" for out-of-range inputs, "configuration" for bad specs or files.
    """

    def __init__(self, message: str, kind: str = "domain") -> None:
        self.message = message
        self.kind = kind
        super().__init__(message)


@dataclass(frozen=True)
class CarrierSpec:
    """A frequency layer of the sector."""

    id: str
    frequency_mhz: float
    capacity_weight: float = 1.0

    def __post_init__(self) -> None:
        if not (self.capacity_weight > 0 and math.isfinite(self.capacity_weight)):
            raise TrafficError(
                f"Carrier {self.id}: capacity_weight must be > 0, got {self.capacity_weight}",
                kind="configuration",
            )


def check_unique_frequencies(carriers: Sequence[CarrierSpec]) -> None:
    freqs = [c.frequency_mhz for c in carriers]
    if len(set(freqs)) != len(freqs):
        raise TrafficError(f"Carrier frequencies must be unique within a sector: {freqs}", kind="configuration")


@dataclass(frozen=True)
class KpiModel:
    """Logistic acceptance model for one KPI.

    P(KPI >= target) = expit(base - load_sensitivity * load + cqi_sensitivity * cqi).
    Defaults give ~0.95 at load 0.3 and ~0.5 at load 0.85 for CQI 8.
    """

    name: str = "dl_throughput_mbps"
    target: float = 5.0
    base: float = 2.15
    load_sensitivity: float = 5.35
    cqi_sensitivity: float = 0.3
    noise_scale: float = 2.0

    def __post_init__(self) -> None:
        if self.load_sensitivity < 0 or self.cqi_sensitivity < 0:
            raise TrafficError(f"KPI {self.name}: sensitivities must be >= 0", kind="configuration")
        if not self.noise_scale > 0:
            raise TrafficError(f"KPI {self.name}: noise_scale must be > 0", kind="configuration")

    def score(self, load: float, cqi: float) -> float:
        return self.base - self.load_sensitivity * load + self.cqi_sensitivity * cqi

    def acceptance_probability(self, load: float, cqi: float) -> float:
        return float(expit(self.score(load, cqi)))


@dataclass(frozen=True)
class Redistribution:
    """Per-carrier load after redistribution, plus demand lost to clipping (normalized units)."""

    loads: dict[str, float]
    overflow: float


def redistribute(demand: float, active: Sequence[CarrierSpec], total_capacity: float) -> Redistribution:
    """Split sector demand over the active carriers in proportion to capacity.

    Demand is normalized to the full sector capacity (total_capacity = sum of the weights
    of every carrier of the sector), so 1.0 means all carriers fully loaded.

    Raises:
        TrafficError: empty active set or negative demand.
    """
    if not active:
        raise TrafficError("Cannot redistribute demand over an empty active set")
    if demand < 0:
        raise TrafficError(f"Demand must be >= 0, got {demand}")
    active_weight = sum(c.capacity_weight for c in active)
    raw_load = demand * total_capacity / active_weight
    load = min(raw_load, 1.0)
    overflow = (raw_load - load) * active_weight / total_capacity
    return Redistribution(loads={c.id: load for c in active}, overflow=overflow)


def mean_load(loads: Mapping[str, float], active: Sequence[CarrierSpec], weighted: bool = True) -> float:
    """Mean load over the active carriers, capacity-weighted unless weighted=False."""
    if not active:
        return 0.0
    if not weighted:
        return sum(loads[c.id] for c in active) / len(active)
    total = sum(c.capacity_weight for c in active)
    return sum(loads[c.id] * c.capacity_weight for c in active) / total


def sample_kpi(load: float, cqi: float, model: KpiModel, rng: np.random.Generator) -> float:
    """Draw one KPI value for a carrier.

    value = target + noise_scale * (score + L) with L ~ Logistic(0, 1), so
    P(value >= target) = expit(score) exactly.
    """
    if not (0.0 <= load <= 1.0):
        raise TrafficError(f"Carrier load must be in [0, 1], got {load}")
    return model.target + model.noise_scale * (model.score(load, cqi) + float(rng.logistic()))


def kpi_accept(kpis: Sequence[float], targets: Sequence[float]) -> int:
    """1 iff every KPI meets its target (inclusive); an empty conjunction is 1."""
    if len(kpis) != len(targets):
        raise TrafficError(f"Got {len(kpis)} KPI values for {len(targets)} targets")
    return int(all(v >= y for v, y in zip(kpis, targets)))


def accept_probability(load: float, cqi: float, models: Sequence[KpiModel]) -> float:
    """P(kpi_accept) for one carrier: the KPI noises are independent, so the per-KPI probabilities multiply."""
    return float(np.prod([m.acceptance_probability(load, cqi) for m in models]))


@dataclass(frozen=True)
class TrafficTrace:
    """Per-tick offered demand (normalized to sector capacity) and mean CQI."""

    tick_seconds: int
    demand: np.ndarray
    cqi: np.ndarray

    def __post_init__(self) -> None:
        if self.tick_seconds <= 0:
            raise TrafficError(f"tick_seconds must be > 0, got {self.tick_seconds}", kind="configuration")
        if self.demand.shape != self.cqi.shape or self.demand.ndim != 1:
            raise TrafficError("demand and cqi must be 1-D arrays of equal length", kind="configuration")
        if len(self.demand) == 0:
            raise TrafficError("Trace is empty", kind="configuration")
        if not np.all(np.isfinite(self.demand)) or np.any(self.demand < 0):
            raise TrafficError("demand must be finite and >= 0", kind="configuration")
        if not np.all(np.isfinite(self.cqi)) or np.any((self.cqi < CQI_MIN) | (self.cqi > CQI_MAX)):
            raise TrafficError("cqi must lie in [0, 15]", kind="configuration")

    def __len__(self) -> int:
        return len(self.demand)

    def hour_of_tick(self, tick: int) -> float:
        return (tick * self.tick_seconds % SECONDS_PER_DAY) / SECONDS_PER_HOUR

    def at(self, tick: int) -> tuple[float, float]:
        """(demand, cqi) at tick; the trace replays cyclically past its end."""
        i = tick % len(self.demand)
        return float(self.demand[i]), float(self.cqi[i])


@dataclass(frozen=True)
class DiurnalProfile:
    """Two-regime day/night demand and CQI; day is [day_start_hour, day_end_hour)."""

    day_start_hour: int = 8
    day_end_hour: int = 20
    day_demand: float = 0.30
    night_demand: float = 0.10
    demand_amplitude: float = 0.06
    demand_noise: float = 0.03
    day_cqi: float = 7.0
    night_cqi: float = 10.0
    cqi_noise: float = 1.0


def diurnal_trace(
    days: int,
    tick_seconds: int,
    profile: DiurnalProfile,
    rng: np.random.Generator,
) -> TrafficTrace:
    """Day/night regimes, each with a half-sine bump over its span, plus Gaussian noise."""
    n = days * SECONDS_PER_DAY // tick_seconds
    hours = (np.arange(n) * tick_seconds % SECONDS_PER_DAY) / SECONDS_PER_HOUR
    start, end = profile.day_start_hour, profile.day_end_hour
    is_day = (hours >= start) & (hours < end)
    day_len = end - start
    night_len = 24 - day_len
    # phase in [0, 1) within the current regime
    phase = np.where(is_day, (hours - start) / day_len, ((hours - end) % 24) / night_len)
    bump = profile.demand_amplitude * np.sin(np.pi * phase)
    level = np.where(is_day, profile.day_demand, profile.night_demand)
    demand = np.clip(level + bump + rng.normal(0.0, profile.demand_noise, n), 0.0, None)
    cqi_level = np.where(is_day, profile.day_cqi, profile.night_cqi)
    cqi = np.clip(cqi_level + rng.normal(0.0, profile.cqi_noise, n), CQI_MIN, CQI_MAX)
    return TrafficTrace(tick_seconds=tick_seconds, demand=demand, cqi=cqi)


def hourly_cqi(trace: TrafficTrace) -> list[list[float]]:
    """CQI samples bucketed by hour of day (24 buckets)."""
    buckets: list[list[float]] = [[] for _ in range(24)]
    for t in range(len(trace)):
        buckets[int(trace.hour_of_tick(t))].append(float(trace.cqi[t]))
    return buckets


def save_trace_csv(trace: TrafficTrace, path: str | Path) -> None:
    frame = pd.DataFrame({"tick": np.arange(len(trace)), "demand": trace.demand, "cqi": trace.cqi})
    frame.to_csv(path, index=False)


def load_trace_csv(path: str | Path, tick_seconds: int) -> TrafficTrace:
    """Read a `tick,demand,cqi` CSV; rows are sorted by tick.

    Raises:
        TrafficError: missing file, missing columns or invalid values (configuration).
    """
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise TrafficError(f"Cannot read trace {path}: {e}", kind="configuration") from e
    missing = [c for c in TRACE_COLUMNS if c not in frame.columns]
    if missing:
        raise TrafficError(f"Trace {path} is missing column(s): {missing}", kind="configuration")
    frame = frame.sort_values("tick")
    logger.info("Loaded trace %s: %d ticks", path, len(frame))
    return TrafficTrace(
        tick_seconds=tick_seconds,
        demand=frame["demand"].to_numpy(dtype=float),
        cqi=frame["cqi"].to_numpy(dtype=float),
    )
