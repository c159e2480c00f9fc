"""Pydantic schemas: scenario config file, run logs, reports, API request/response and errors."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .bayes_tuner import DEFAULT_A_MAX, DEFAULT_B_MAX, DEFAULT_RESOLUTION, DEFAULT_SA_EPS0, DEFAULT_X_STEP, DriftKernel, GridSpec
from .power_model import DEFAULT_IDLE_B, DEFAULT_SLEEP_P, DEFAULT_SLOPE_A, PaMap, PowerCurve
from .shutdown_policy import PolicyError, SearchRegion, ThresholdPair
from .traffic_sim import (
    SECONDS_PER_DAY,
    SECONDS_PER_HOUR,
    CarrierSpec,
    DiurnalProfile,
    KpiModel,
    TrafficError,
    check_unique_frequencies,
)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# --- Scenario config ---


class CarrierConfig(_Strict):
    """One carrier of the sector and the PA that serves it."""

    id: str
    frequency_mhz: float = Field(..., gt=0)
    capacity_weight: float = Field(1.0, gt=0)
    pa: str

    def to_spec(self) -> CarrierSpec:
        return CarrierSpec(id=self.id, frequency_mhz=self.frequency_mhz, capacity_weight=self.capacity_weight)


class PowerCurveConfig(_Strict):
    slope_a: float = Field(DEFAULT_SLOPE_A, ge=0)
    idle_b: float = Field(DEFAULT_IDLE_B, ge=0)
    sleep_p: float = Field(DEFAULT_SLEEP_P, ge=0)

    @model_validator(mode="after")
    def sleep_below_idle(self) -> PowerCurveConfig:
        if not self.sleep_p < self.idle_b:
            raise ValueError("sleep_p must be lower than idle_b")
        return self

    def to_curve(self) -> PowerCurve:
        return PowerCurve(slope_a=self.slope_a, idle_b=self.idle_b, sleep_p=self.sleep_p)


def _default_carriers() -> list[CarrierConfig]:
    return [
        CarrierConfig(id="L800", frequency_mhz=800, pa="pa1"),
        CarrierConfig(id="L1800", frequency_mhz=1800, pa="pa2"),
        CarrierConfig(id="L2100", frequency_mhz=2100, pa="pa3"),
        CarrierConfig(id="L2600", frequency_mhz=2600, pa="pa4"),
    ]


class SectorConfig(_Strict):
    """Carriers, shutdown order, coverage floor and PA power curves.

    shutdown_order lists carriers from the one kept longest to the one shut down first;
    default is increasing frequency (highest frequency goes to sleep first).
    power_curves maps PA id -> curve; PAs without an entry use the default curve.
    """

    carriers: list[CarrierConfig] = Field(default_factory=_default_carriers, min_length=1)
    shutdown_order: list[str] | None = None
    coverage_floor: int = Field(1, ge=1)
    power_curves: dict[str, PowerCurveConfig] = Field(default_factory=dict)
    weighted_mean_load: bool = True

    @model_validator(mode="after")
    def check_consistency(self) -> SectorConfig:
        ids = [c.id for c in self.carriers]
        if len(set(ids)) != len(ids):
            raise ValueError(f"Duplicate carrier ids: {ids}")
        try:
            check_unique_frequencies([c.to_spec() for c in self.carriers])
        except TrafficError as e:
            raise ValueError(e.message) from e
        if self.shutdown_order is not None and sorted(self.shutdown_order) != sorted(ids):
            raise ValueError("shutdown_order must be a permutation of the carrier ids")
        if self.coverage_floor > len(ids):
            raise ValueError("coverage_floor cannot exceed the number of carriers")
        unknown = sorted(set(self.power_curves) - {c.pa for c in self.carriers})
        if unknown:
            raise ValueError(f"power_curves given for unknown PA(s): {unknown}")
        return self

    def order(self) -> list[str]:
        if self.shutdown_order is not None:
            return list(self.shutdown_order)
        return [c.id for c in sorted(self.carriers, key=lambda c: c.frequency_mhz)]

    def specs(self) -> dict[str, CarrierSpec]:
        return {c.id: c.to_spec() for c in self.carriers}

    def pa_map(self) -> PaMap:
        curves = {c.pa: self.power_curves.get(c.pa, PowerCurveConfig()).to_curve() for c in self.carriers}
        return PaMap(pa_of_carrier={c.id: c.pa for c in self.carriers}, curve_of_pa=curves)

    def total_capacity(self) -> float:
        return sum(c.capacity_weight for c in self.carriers)


class KpiConfig(_Strict):
    name: str = "dl_throughput_mbps"
    target: float = 5.0
    base: float = 2.15
    load_sensitivity: float = Field(5.35, ge=0)
    cqi_sensitivity: float = Field(0.3, ge=0)
    noise_scale: float = Field(2.0, gt=0)

    def to_model(self) -> KpiModel:
        return KpiModel(**self.model_dump())


class TrafficConfig(_Strict):
    """Diurnal generator parameters, or a CSV trace to replay (trace_csv)."""

    day_start_hour: int = Field(8, ge=0, le=23)
    day_end_hour: int = Field(20, ge=1, le=24)
    day_demand: float = Field(0.30, ge=0)
    night_demand: float = Field(0.10, ge=0)
    demand_amplitude: float = 0.06
    demand_noise: float = Field(0.03, ge=0)
    day_cqi: float = Field(7.0, ge=0, le=15)
    night_cqi: float = Field(10.0, ge=0, le=15)
    cqi_noise: float = Field(1.0, ge=0)
    trace_csv: str | None = None

    @model_validator(mode="after")
    def day_before_night(self) -> TrafficConfig:
        if not self.day_start_hour < self.day_end_hour:
            raise ValueError("day_start_hour must be before day_end_hour")
        return self

    def to_profile(self) -> DiurnalProfile:
        return DiurnalProfile(**self.model_dump(exclude={"trace_csv"}))


class SearchRegionConfig(_Strict):
    lo: tuple[float, float] = (0.0, 0.0)
    hi: tuple[float, float] = (0.4, 0.8)

    @model_validator(mode="after")
    def valid_segment(self) -> SearchRegionConfig:
        try:
            self.to_region()
        except PolicyError as e:
            raise ValueError(e.message) from e
        return self

    def to_region(self) -> SearchRegion:
        return SearchRegion(lo=ThresholdPair(*self.lo), hi=ThresholdPair(*self.hi))


class GridConfig(_Strict):
    a_max: float = Field(DEFAULT_A_MAX, gt=0)
    b_max: float = Field(DEFAULT_B_MAX, gt=0)
    n_a: int = Field(DEFAULT_RESOLUTION, ge=2)
    n_b: int = Field(DEFAULT_RESOLUTION, ge=2)
    x_step: float = Field(DEFAULT_X_STEP, gt=0, le=1)

    def to_grid(self) -> GridSpec:
        return GridSpec(a_max=self.a_max, b_max=self.b_max, n_a=self.n_a, n_b=self.n_b)


class DriftConfig(_Strict):
    std_a: float = Field(0.0, ge=0)
    std_b: float = Field(0.0, ge=0)

    def to_kernel(self) -> DriftKernel:
        return DriftKernel(std_a=self.std_a, std_b=self.std_b)


class WindowConfig(_Strict):
    """Fixed window boundaries (hours), or auto-split inputs when boundaries is None."""

    boundaries: list[int] | None = None
    n_max: int = Field(4, ge=1)
    min_len: int = Field(4, ge=1, le=24)
    split_days: int = Field(7, ge=1)

    @field_validator("boundaries")
    @classmethod
    def sorted_hours(cls, v: list[int] | None) -> list[int] | None:
        if v is None:
            return v
        if not v or any(not 0 <= h < 24 for h in v) or sorted(set(v)) != v:
            raise ValueError("boundaries must be strictly increasing whole hours in [0, 24)")
        return v


class CadenceConfig(_Strict):
    """tick: policy decision period; collection: KPI collection period (seconds)."""

    tick_seconds: int = Field(60, gt=0)
    collection_seconds: int = Field(900, gt=0)

    @model_validator(mode="after")
    def aligned(self) -> CadenceConfig:
        if self.collection_seconds < self.tick_seconds:
            raise ValueError("collection period must be >= tick")
        if self.collection_seconds % self.tick_seconds:
            raise ValueError("collection period must be a multiple of the tick")
        if SECONDS_PER_HOUR % self.tick_seconds:
            raise ValueError("tick must divide one hour")
        return self

    @property
    def ticks_per_collection(self) -> int:
        return self.collection_seconds // self.tick_seconds

    @property
    def ticks_per_day(self) -> int:
        return SECONDS_PER_DAY // self.tick_seconds


class CurveShift(_Strict):
    round: int = Field(..., ge=0)
    delta_a: float = 0.0
    delta_b: float = 0.0


class CurveConfig(_Strict):
    """Generative acceptance curve for mode="curve": samples ~ Bernoulli(p_theta*(x))."""

    a: float = 1.0
    b: float = Field(1.0, ge=0)
    samples_per_round: int = Field(48, ge=1)
    shifts: list[CurveShift] = Field(default_factory=list)


class HistoryConfig(_Strict):
    """Historical period replayed into the prior: one batch per day and window."""

    days: int = Field(0, ge=0)
    x_values: list[float] = Field(default_factory=lambda: [0.0])

    @field_validator("x_values")
    @classmethod
    def in_unit_interval(cls, v: list[float]) -> list[float]:
        if not v or any(not 0.0 <= x <= 1.0 for x in v):
            raise ValueError("x_values must be a non-empty list of values in [0, 1]")
        return v


class SaConfig(_Strict):
    x0: float = Field(0.5, ge=0, le=1)
    eps0: float = Field(DEFAULT_SA_EPS0, gt=0)


class ScenarioConfig(_Strict):
    """Everything needed to run a campaign; (config, seed) determines the run log."""

    name: str = "reference"
    mode: Literal["sector", "curve"] = "sector"
    sector: SectorConfig = Field(default_factory=SectorConfig)
    kpis: list[KpiConfig] = Field(default_factory=lambda: [KpiConfig()])
    traffic: TrafficConfig = Field(default_factory=TrafficConfig)
    curve: CurveConfig = Field(default_factory=CurveConfig)
    xi: float = Field(0.89, ge=0, le=1)
    region: SearchRegionConfig = Field(default_factory=SearchRegionConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    drift: DriftConfig = Field(default_factory=DriftConfig)
    windows: WindowConfig = Field(default_factory=WindowConfig)
    cadence: CadenceConfig = Field(default_factory=CadenceConfig)
    history: HistoryConfig = Field(default_factory=HistoryConfig)
    sa: SaConfig = Field(default_factory=SaConfig)
    rounds: int = Field(30, ge=1)
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def update_period_covers_collection(self) -> ScenarioConfig:
        if self.mode == "sector":
            shortest = self.windows.min_len
            if self.windows.boundaries is not None:
                b = self.windows.boundaries
                spans = [(b[(i + 1) % len(b)] - b[i]) % 24 or 24 for i in range(len(b))]
                shortest = min(spans)
            if shortest * SECONDS_PER_HOUR < self.cadence.collection_seconds:
                raise ValueError("threshold update period (shortest window) must be >= the KPI collection period")
        return self

    def with_overrides(self, seed: int | None = None, rounds: int | None = None) -> ScenarioConfig:
        update: dict[str, int] = {}
        if seed is not None:
            update["seed"] = seed
        if rounds is not None:
            update["rounds"] = rounds
        return self.model_validate({**self.model_dump(), **update})


# --- Run logs ---


class TickRecord(BaseModel):
    """One policy tick; kpis, accepts and accept_probs are filled on collection ticks only."""

    tick: int
    hour: float
    window: int
    active: list[str]
    loads: dict[str, float]
    watts: float
    overflow: float
    kpis: dict[str, list[float]] = Field(default_factory=dict)
    accepts: dict[str, int] = Field(default_factory=dict)
    accept_probs: dict[str, float] = Field(default_factory=dict)


class RoundRecord(BaseModel):
    round: int
    window: int
    x: float
    thresholds: tuple[float, float]
    samples: int
    successes: int
    true_prob: float | None = None
    band: tuple[float, float] | None = None
    posterior_mean: tuple[float, float] | None = None
    degenerate: bool = False
    checkpoint: str | None = None


class RunLog(BaseModel):
    """Append-only record of one campaign."""

    scenario: str
    method: Literal["bayes", "sa", "baseline", "fixed"]
    seed: int
    xi: float
    tick_seconds: int
    windows: list[int]
    eligible: list[str]
    kpi_names: list[str]
    ticks: list[TickRecord] = Field(default_factory=list)
    rounds: list[RoundRecord] = Field(default_factory=list)

    def append_tick(self, record: TickRecord) -> None:
        self.ticks.append(record)

    def append_round(self, record: RoundRecord) -> None:
        self.rounds.append(record)


# --- Reports ---


class WindowMetrics(BaseModel):
    window: int
    avg_watts: float | None
    acceptance: float | None
    sleep_time_pct: float | None
    kpi_quantile: float | None
    expected_acceptance: float | None = None


class RunMetrics(BaseModel):
    avg_watts: float | None = Field(None, description="Time-average sector watts")
    total_energy_joules: float | None = None
    duration_seconds: float | None = None
    acceptance: float | None = Field(None, description="Carrier-and-time weighted acceptable fraction")
    sleep_time_pct: float | None = Field(None, description="Share of eligible carrier-time spent asleep")
    kpi_quantile: float | None = Field(None, description="(1 - xi) quantile of the first KPI")
    expected_acceptance: float | None = Field(None, description="Mean true acceptance probability over the same samples")
    degenerate_rounds: int = 0
    per_window: list[WindowMetrics] = Field(default_factory=list)


class CampaignReport(BaseModel):
    scenario: str
    method: str
    seed: int
    windows: list[int]
    final_x: list[float]
    metrics: RunMetrics


class MethodSummary(BaseModel):
    method: str
    mean_rounds_to_converge: float | None
    unconverged: int
    mean_final_acceptance: float | None
    mean_shortfall: float
    mean_energy_joules: float | None


class CompareRow(BaseModel):
    seed: int
    method: str
    window: int
    round: int
    x: float
    x_star: float
    abs_error: float
    acceptance: float | None
    shortfall: float
    cumulative_energy_joules: float | None


class CompareReport(BaseModel):
    scenario: str
    seeds: list[int]
    x_star: list[float]
    summaries: list[MethodSummary]
    rows: list[CompareRow]


# --- API ---


class WindowsRequest(_Strict):
    """Request body for POST /windows."""

    cqi_by_hour: list[list[float]] = Field(..., description="CQI samples per hour bucket (24 or a multiple)")
    n_max: int = Field(4, ge=1)
    min_len: int = Field(4, ge=1)


class WindowsResponse(BaseModel):
    boundaries: list[int]
    n: int
    objective: float


class CompareRequest(_Strict):
    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    seeds: list[int] = Field(default_factory=lambda: list(range(5)), min_length=1)


class ErrorResponse(BaseModel):
    """Error response body: status and message."""

    status: Literal["error"] = Field(..., description="Always 'error' for error responses")
    message: str = Field(..., description="Human-readable error message")
