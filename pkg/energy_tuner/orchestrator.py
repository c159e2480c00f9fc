"""Closed-loop campaigns: deploy thresholds, simulate the sector, collect KPI batches, learn.

One campaign = one scenario + seed + method. Every (window, round) is one tuning step:
the learner proposes x, thresholds rho^x run for that window's span of the tuning day,
the binary KPI samples gathered there form the batch the learner observes next.

Random streams are spawned from the seed per purpose (window-split trace, history trace,
history KPIs, campaign trace, campaign KPIs, generative curve), so campaigns run with
different methods on the same seed see paired traces.
"""

from __future__ import annotations

import logging
import time
import uuid
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError

from .audit import CampaignAudit
from .bayes_tuner import (
    DegenerateEvidenceError,
    KpiBatch,
    ParamBelief,
    init_prior,
    posterior_mean,
    posterior_update,
    predictive_band,
    sa_step,
    sa_step_size,
    select_x,
    x_grid,
)
from .checkpoint import checkpoint_name, load_belief, save_belief
from .power_model import sector_power
from .schemas import (
    CampaignReport,
    CompareReport,
    CompareRow,
    MethodSummary,
    RoundRecord,
    RunLog,
    RunMetrics,
    ScenarioConfig,
    TickRecord,
    WindowMetrics,
)
from .shutdown_policy import BASELINE_THRESHOLDS, PolicyState, ThresholdPair, policy_step, thresholds_from_x
from .traffic_sim import (
    SECONDS_PER_HOUR,
    TrafficTrace,
    accept_probability,
    diurnal_trace,
    hourly_cqi,
    kpi_accept,
    load_trace_csv,
    mean_load,
    redistribute,
    sample_kpi,
    save_trace_csv,
)
from .window_split import DayWindows, split_day

logger = logging.getLogger(__name__)

CONVERGENCE_TOL = 0.05
FINAL_ROUNDS = 10
DEFAULT_SWEEP_STEP = 0.025
DEFAULT_SWEEP_DAYS = 14
BAND_LEVEL = 0.9

_STREAMS = ("split", "history_trace", "history_kpi", "trace", "kpi", "curve")


class CampaignError(Exception):
    """Raised when a campaign cannot run or a run log cannot be evaluated."""

    def __init__(self, message: str, kind: str = "domain") -> None:
        self.message = message
        self.kind = kind
        super().__init__(message)


@dataclass
class CampaignResult:
    log: RunLog
    report: CampaignReport
    trace: TrafficTrace | None = None


@dataclass
class OracleSweep:
    """Fixed-x runs over an x grid: per-window acceptance and watts, and the constrained optimum."""

    xs: list[float]
    acceptance: list[list[float]]  # [window][x]
    avg_watts: list[list[float]]
    x_star: list[float]


def _streams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(_STREAMS))
    return {name: np.random.default_rng(child) for name, child in zip(_STREAMS, children)}


# --- Learners: one per window ---


class _BayesLearner:
    def __init__(self, belief: ParamBelief, config: ScenarioConfig) -> None:
        self.belief = belief
        self.kernel = config.drift.to_kernel()
        self.xi = config.xi
        self.step = config.grid.x_step

    def propose(self) -> float:
        return select_x(self.belief, self.xi, self.step)

    def observe(self, batch: KpiBatch) -> bool:
        """Update the belief; returns True when the evidence was degenerate (belief kept)."""
        try:
            self.belief = posterior_update(self.belief, batch, self.kernel)
        except DegenerateEvidenceError as e:
            self.belief = e.belief
            return True
        return False


class _SaLearner:
    def __init__(self, config: ScenarioConfig) -> None:
        self.x = config.sa.x0
        self.eps0 = config.sa.eps0
        self.xi = config.xi
        self.k = 0

    def propose(self) -> float:
        return self.x

    def observe(self, batch: KpiBatch) -> bool:
        self.k += 1
        if batch.size:
            self.x = sa_step(self.x, batch.mean, self.xi, sa_step_size(self.k, self.eps0))
        return False


class _FixedLearner:
    def __init__(self, x: float) -> None:
        self.x = x

    def propose(self) -> float:
        return self.x

    def observe(self, batch: KpiBatch) -> bool:
        return False


# --- Sector simulation ---


class SectorSimulator:
    """Runs the shutdown policy tick by tick over a trace; owns the policy state."""

    def __init__(self, config: ScenarioConfig, trace: TrafficTrace, kpi_rng: np.random.Generator) -> None:
        sector = config.sector
        self.trace = trace
        self.rng = kpi_rng
        self.specs = sector.specs()
        self.pa_map = sector.pa_map()
        self.total_capacity = sector.total_capacity()
        self.weighted = sector.weighted_mean_load
        self.models = [k.to_model() for k in config.kpis]
        self.targets = [m.target for m in self.models]
        self.state = PolicyState.all_active(sector.order(), sector.coverage_floor)

    def step(self, tick: int, thresholds: ThresholdPair, window: int, collect: bool) -> TickRecord:
        demand, cqi = self.trace.at(tick)
        active = [self.specs[c] for c in self.state.active]
        shares = redistribute(demand, active, self.total_capacity)
        watts = sector_power(self.state.active, shares.loads, self.pa_map)
        kpis: dict[str, list[float]] = {}
        accepts: dict[str, int] = {}
        probs: dict[str, float] = {}
        if collect:
            for c in active:
                load = shares.loads[c.id]
                values = [sample_kpi(load, cqi, m, self.rng) for m in self.models]
                kpis[c.id] = values
                accepts[c.id] = kpi_accept(values, self.targets)
                probs[c.id] = accept_probability(load, cqi, self.models)
        record = TickRecord.model_construct(
            tick=tick,
            hour=self.trace.hour_of_tick(tick),
            window=window,
            active=list(self.state.active),
            loads=shares.loads,
            watts=watts,
            overflow=shares.overflow,
            kpis=kpis,
            accepts=accepts,
            accept_probs=probs,
        )
        self.state = policy_step(self.state, mean_load(shares.loads, active, self.weighted), thresholds)
        return record


def _campaign_trace(config: ScenarioConfig, rng: np.random.Generator, days: int) -> TrafficTrace:
    tick = config.cadence.tick_seconds
    if config.traffic.trace_csv:
        return load_trace_csv(config.traffic.trace_csv, tick)
    return diurnal_trace(days, tick, config.traffic.to_profile(), rng)


def resolve_windows(config: ScenarioConfig, rng: np.random.Generator | None = None) -> DayWindows:
    """Configured boundaries, or the most CQI-stable split of a reference trace."""
    if config.mode == "curve":
        return DayWindows(boundaries=(0,))
    if config.windows.boundaries is not None:
        return DayWindows(boundaries=tuple(config.windows.boundaries))
    rng = rng if rng is not None else _streams(config.seed)["split"]
    trace = _campaign_trace(config, rng, config.windows.split_days)
    return split_day(hourly_cqi(trace), n_max=config.windows.n_max, min_len=config.windows.min_len)


class _DayPlan:
    """Tick layout of one tuning day, which starts at the first window boundary."""

    def __init__(self, config: ScenarioConfig, windows: DayWindows) -> None:
        cadence = config.cadence
        self.ticks_per_day = cadence.ticks_per_day
        self.ticks_per_collection = cadence.ticks_per_collection
        ticks_per_hour = SECONDS_PER_HOUR // cadence.tick_seconds
        self.offset = windows.boundaries[0] * ticks_per_hour
        self.window_of = [
            windows.window_of_hour((self.offset + i) * cadence.tick_seconds / SECONDS_PER_HOUR)
            for i in range(self.ticks_per_day)
        ]

    def ticks(self, day: int) -> range:
        start = day * self.ticks_per_day + self.offset
        return range(start, start + self.ticks_per_day)

    def is_collection(self, tick: int) -> bool:
        return (tick + 1) % self.ticks_per_collection == 0


def _simulate_day(
    sim: SectorSimulator,
    plan: _DayPlan,
    day: int,
    thresholds: Sequence[ThresholdPair],
    log: RunLog | None,
) -> list[tuple[int, int]]:
    """Run one tuning day; returns (successes, samples) per window."""
    counts = [[0, 0] for _ in thresholds]
    for i, tick in enumerate(plan.ticks(day)):
        w = plan.window_of[i]
        record = sim.step(tick, thresholds[w], w, plan.is_collection(tick))
        if record.accepts:
            counts[w][0] += sum(record.accepts.values())
            counts[w][1] += len(record.accepts)
        if log is not None:
            log.append_tick(record)
    return [(s, n) for s, n in counts]


def _history_batches(config: ScenarioConfig, windows: DayWindows, streams: dict[str, np.random.Generator]) -> list[list[KpiBatch]]:
    """Batches per window from the configured historical period, oldest first."""
    days = config.history.days
    xs = config.history.x_values
    region = config.region.to_region()
    batches: list[list[KpiBatch]] = [[] for _ in range(windows.n)]
    if days == 0:
        return batches
    if config.mode == "curve":
        rng = streams["history_kpi"]
        p0 = _curve_prob_at(config, 0)
        j = config.curve.samples_per_round
        for d in range(days):
            x = xs[d % len(xs)]
            s = int(rng.binomial(j, p0(x)))
            batches[0].append(KpiBatch.from_counts(x, s, j, window=0, round_index=d - days))
        return batches
    trace = _campaign_trace(config, streams["history_trace"], days + 1)
    sim = SectorSimulator(config, trace, streams["history_kpi"])
    plan = _DayPlan(config, windows)
    for d in range(days):
        x = xs[d % len(xs)]
        counts = _simulate_day(sim, plan, d, [thresholds_from_x(x, region)] * windows.n, None)
        for w, (s, n) in enumerate(counts):
            batches[w].append(KpiBatch.from_counts(x, s, n, window=w, round_index=d - days))
    return batches


def _curve_prob_at(config: ScenarioConfig, round_index: int):
    """True acceptance curve of the generative scenario at a given round (shifts applied)."""
    a, b = config.curve.a, config.curve.b
    for shift in config.curve.shifts:
        if shift.round <= round_index:
            a += shift.delta_a
            b += shift.delta_b

    def p(x: float) -> float:
        return min(max(a - b * x, 0.0), 1.0)

    return p


def _latest_checkpoint(resume_dir: str | Path, window: int) -> ParamBelief | None:
    found = sorted(Path(resume_dir).glob(f"belief_w{window}_r*.json"))
    return load_belief(found[-1]) if found else None


def _make_learners(
    config: ScenarioConfig,
    method: str,
    windows: DayWindows,
    streams: dict[str, np.random.Generator],
    fixed_x: float | None,
    resume_dir: str | Path | None,
    audit: CampaignAudit,
) -> list[_BayesLearner | _SaLearner | _FixedLearner]:
    if method in ("baseline", "fixed"):
        return [_FixedLearner(fixed_x if fixed_x is not None else 0.0) for _ in range(windows.n)]
    if method == "sa":
        return [_SaLearner(config) for _ in range(windows.n)]
    grid = config.grid.to_grid()
    history = _history_batches(config, windows, streams)
    learners = []
    for w in range(windows.n):
        belief = _latest_checkpoint(resume_dir, w) if resume_dir else None
        source = "checkpoint"
        if belief is None:
            belief = init_prior(grid, history[w])
            source = "history"
        audit.step(
            "init_prior",
            input_summary={"window": w, "source": source, "history_batches": len(history[w])},
            output_summary={"posterior_mean": list(_mean_tuple(belief))},
        )
        learners.append(_BayesLearner(belief, config))
    return learners


def _mean_tuple(belief: ParamBelief) -> tuple[float, float]:
    m = posterior_mean(belief)
    return (round(m.a, 6), round(m.b, 6))


def _run(
    config: ScenarioConfig,
    method: str,
    *,
    fixed_x: float | None = None,
    thresholds_override: ThresholdPair | None = None,
    correlation_id: str | None = None,
    audit_path: str = "",
    checkpoint_dir: str | Path | None = None,
    resume_dir: str | Path | None = None,
    keep_ticks: bool = True,
) -> CampaignResult:
    correlation_id = correlation_id or str(uuid.uuid4())
    audit = CampaignAudit(correlation_id, audit_path)
    extra = {"correlation_id": correlation_id, "operation_name": method}
    t0 = time.perf_counter()
    streams = _streams(config.seed)
    windows = resolve_windows(config, streams["split"])
    audit.step("split_day", output_summary={"boundaries": list(windows.boundaries), "objective": windows.objective})
    logger.info("Campaign %s/%s seed=%d windows=%s", config.name, method, config.seed, list(windows.boundaries), extra=extra)

    sector_mode = config.mode == "sector"
    sim: SectorSimulator | None = None
    plan: _DayPlan | None = None
    trace: TrafficTrace | None = None
    eligible: list[str] = []
    if sector_mode:
        trace = _campaign_trace(config, streams["trace"], config.rounds + 1)
        sim = SectorSimulator(config, trace, streams["kpi"])
        plan = _DayPlan(config, windows)
        eligible = list(sim.state.eligible)

    log = RunLog(
        scenario=config.name,
        method=method,  # type: ignore[arg-type]
        seed=config.seed,
        xi=config.xi,
        tick_seconds=config.cadence.tick_seconds,
        windows=list(windows.boundaries),
        eligible=eligible,
        kpi_names=[k.name for k in config.kpis] if sector_mode else [],
    )
    learners = _make_learners(config, method, windows, streams, fixed_x, resume_dir, audit)
    region = config.region.to_region()
    curve_rng = streams["curve"]

    for k in range(config.rounds):
        xs = [learner.propose() for learner in learners]
        deployed = [thresholds_override or thresholds_from_x(x, region) for x in xs]
        true_probs: list[float | None] = [None] * windows.n
        if sector_mode:
            counts = _simulate_day(sim, plan, k, deployed, log if keep_ticks else None)
        else:
            p = _curve_prob_at(config, k)
            true_probs = [p(x) for x in xs]
            j = config.curve.samples_per_round
            counts = [(int(curve_rng.binomial(j, prob)), j) for prob in true_probs]

        for w, learner in enumerate(learners):
            s, n = counts[w]
            batch = KpiBatch.from_counts(xs[w], s, n, window=w, round_index=k)
            degenerate = learner.observe(batch)
            record = RoundRecord(
                round=k,
                window=w,
                x=xs[w],
                thresholds=(deployed[w].rho_min, deployed[w].rho_max),
                samples=n,
                successes=s,
                true_prob=true_probs[w],
                degenerate=degenerate,
            )
            if isinstance(learner, _BayesLearner):
                lo, hi = predictive_band(learner.belief, [xs[w]], BAND_LEVEL)
                record.band = (float(lo[0]), float(hi[0]))
                record.posterior_mean = _mean_tuple(learner.belief)
                if checkpoint_dir:
                    path = save_belief(learner.belief, Path(checkpoint_dir) / checkpoint_name(w, k), window=w, round_index=k)
                    record.checkpoint = str(path)
            log.append_round(record)
            if degenerate:
                logger.warning("Round %d window %d: degenerate evidence, belief kept", k, w, extra=extra)
            logger.info(
                "Round %d window %d: x=%.3f rho=[%.3f, %.3f] accepted %d/%d",
                k, w, xs[w], deployed[w].rho_min, deployed[w].rho_max, s, n,
                extra={**extra, "operation_name": "select_x" if method == "bayes" else method},
            )
            audit.step(
                "round",
                result="warning" if degenerate else "success",
                input_summary={"round": k, "window": w, "x": xs[w], "thresholds": list(record.thresholds)},
                output_summary={"successes": s, "samples": n, "degenerate": degenerate},
            )

    final_x = [learner.propose() for learner in learners]
    try:
        metrics = evaluate_run(log)
    except CampaignError as e:
        audit.failure("evaluate_run", e, "energy_tuner.orchestrator.evaluate_run")
        raise
    duration_ms = (time.perf_counter() - t0) * 1000
    audit.step("evaluate_run", output_summary=metrics.model_dump(exclude={"per_window"}), duration_ms=duration_ms)
    report = CampaignReport(
        scenario=config.name,
        method=method,
        seed=config.seed,
        windows=list(windows.boundaries),
        final_x=final_x,
        metrics=metrics,
    )
    return CampaignResult(log=log, report=report, trace=trace)


def run_closed_loop(
    config: ScenarioConfig,
    *,
    correlation_id: str | None = None,
    audit_path: str = "",
    checkpoint_dir: str | Path | None = None,
    resume_dir: str | Path | None = None,
) -> CampaignResult:
    """Bayesian campaign: split windows, initialize priors from history, then tune round by round."""
    return _run(
        config,
        "bayes",
        correlation_id=correlation_id,
        audit_path=audit_path,
        checkpoint_dir=checkpoint_dir,
        resume_dir=resume_dir,
    )


def run_sa(config: ScenarioConfig, *, correlation_id: str | None = None, audit_path: str = "") -> CampaignResult:
    """Stochastic-approximation campaign from x0 with eps_k = eps0 / k (cold start, no history)."""
    return _run(config, "sa", correlation_id=correlation_id, audit_path=audit_path)


def run_fixed(config: ScenarioConfig, x: float, *, keep_ticks: bool = True) -> CampaignResult:
    """Deploy rho^x in every window for every round, no learning."""
    return _run(config, "fixed", fixed_x=x, keep_ticks=keep_ticks)


def run_baseline(config: ScenarioConfig, *, correlation_id: str | None = None, audit_path: str = "") -> CampaignResult:
    """All carriers active, thresholds pinned to [0, 0]."""
    return _run(
        config,
        "baseline",
        fixed_x=0.0,
        thresholds_override=BASELINE_THRESHOLDS,
        correlation_id=correlation_id,
        audit_path=audit_path,
    )


# --- Metrics ---


def _tick_metrics(ticks: Sequence[TickRecord], tick_seconds: int, eligible: Sequence[str], q: float) -> dict:
    watts = np.array([t.watts for t in ticks], dtype=float)
    energy = float(watts.sum() * tick_seconds)
    duration = float(len(ticks) * tick_seconds)
    accepted = sum(sum(t.accepts.values()) for t in ticks)
    samples = sum(len(t.accepts) for t in ticks)
    probs = [p for t in ticks for p in t.accept_probs.values()]
    first_kpi = [values[0] for t in ticks for values in t.kpis.values() if values]
    sleep = None
    if eligible:
        off = sum(sum(1 for c in eligible if c not in t.active) for t in ticks)
        sleep = 100.0 * off / (len(eligible) * len(ticks))
    return {
        "avg_watts": energy / duration,
        "total_energy_joules": energy,
        "duration_seconds": duration,
        "acceptance": accepted / samples if samples else None,
        "sleep_time_pct": sleep if eligible else 0.0,
        "kpi_quantile": float(np.quantile(first_kpi, q)) if first_kpi else None,
        "expected_acceptance": float(np.mean(probs)) if probs else None,
    }


def evaluate_run(log: RunLog) -> RunMetrics:
    """Time-average watts, weighted acceptance, eligible-carrier sleep time, (1 - xi) KPI quantile.

    Acceptance weights every collection instant by the number of carriers sampled,
    i.e. it is the flat mean of the per-carrier binary stream. Without ticks
    (generative-curve runs) acceptance comes from the round batches and power is undefined.

    Raises:
        CampaignError: the log holds neither ticks nor rounds.
    """
    if not log.ticks and not log.rounds:
        raise CampaignError("Cannot evaluate an empty run log")
    q = 1.0 - log.xi
    degenerate = sum(1 for r in log.rounds if r.degenerate)
    if log.ticks:
        overall = _tick_metrics(log.ticks, log.tick_seconds, log.eligible, q)
        per_window = []
        for w in range(len(log.windows)):
            ticks = [t for t in log.ticks if t.window == w]
            if not ticks:
                continue
            m = _tick_metrics(ticks, log.tick_seconds, log.eligible, q)
            per_window.append(
                WindowMetrics(
                    window=w,
                    avg_watts=m["avg_watts"],
                    acceptance=m["acceptance"],
                    sleep_time_pct=m["sleep_time_pct"],
                    kpi_quantile=m["kpi_quantile"],
                    expected_acceptance=m["expected_acceptance"],
                )
            )
        return RunMetrics(**overall, degenerate_rounds=degenerate, per_window=per_window)

    def rate(rounds: Sequence[RoundRecord]) -> float | None:
        n = sum(r.samples for r in rounds)
        return sum(r.successes for r in rounds) / n if n else None

    per_window = [
        WindowMetrics(
            window=w,
            avg_watts=None,
            acceptance=rate([r for r in log.rounds if r.window == w]),
            sleep_time_pct=None,
            kpi_quantile=None,
        )
        for w in range(len(log.windows))
    ]
    return RunMetrics(acceptance=rate(log.rounds), degenerate_rounds=degenerate, per_window=per_window)


# --- Oracle and comparison ---


def _closest_largest(xs: Sequence[float], values: Sequence[float], xi: float) -> float:
    gap = np.abs(np.asarray(values, dtype=float) - xi)
    best = np.flatnonzero(gap <= gap.min() + 1e-12)
    return float(xs[best[-1]])


def curve_x_star(config: ScenarioConfig, round_index: int = 0) -> float:
    """Constrained optimum of the generative curve at a given round, on the tuner's x grid."""
    p = _curve_prob_at(config, round_index)
    xs = x_grid(config.grid.x_step)
    return _closest_largest(xs, [p(float(x)) for x in xs], config.xi)


def oracle_sweep(
    config: ScenarioConfig,
    x_values: Sequence[float] | None = None,
    days: int | None = None,
) -> OracleSweep:
    """Brute-force fixed-x runs on the scenario's paired trace.

    Acceptance here is the mean true acceptance probability of the sampled carriers,
    so the curve carries no KPI sampling noise. x* per window is the largest swept x
    whose acceptance is closest to xi.
    """
    xs = list(x_values) if x_values is not None else [float(x) for x in x_grid(DEFAULT_SWEEP_STEP)]
    if config.mode == "curve":
        p = _curve_prob_at(config, 0)
        acc = [[p(x) for x in xs]]
        return OracleSweep(xs=xs, acceptance=acc, avg_watts=[[float("nan")] * len(xs)], x_star=[_closest_largest(xs, acc[0], config.xi)])
    cfg = config.with_overrides(rounds=days or min(config.rounds, DEFAULT_SWEEP_DAYS))
    acceptance: list[list[float]] = []
    watts: list[list[float]] = []
    for x in xs:
        metrics = run_fixed(cfg, x).report.metrics
        for wm in metrics.per_window:
            while len(acceptance) <= wm.window:
                acceptance.append([])
                watts.append([])
            value = wm.expected_acceptance if wm.expected_acceptance is not None else wm.acceptance
            acceptance[wm.window].append(value if value is not None else float("nan"))
            watts[wm.window].append(wm.avg_watts if wm.avg_watts is not None else float("nan"))
    x_star = [_closest_largest(xs, acc, config.xi) for acc in acceptance]
    logger.info("Oracle sweep over %d x values: x* per window = %s", len(xs), x_star)
    return OracleSweep(xs=xs, acceptance=acceptance, avg_watts=watts, x_star=x_star)


def _day_energy(log: RunLog, ticks_per_day: int) -> list[float]:
    if not log.ticks:
        return []
    watts = np.array([t.watts for t in log.ticks], dtype=float)
    days = len(watts) // ticks_per_day
    return [float(watts[d * ticks_per_day : (d + 1) * ticks_per_day].sum() * log.tick_seconds) for d in range(days)]


def _compare_rows(log: RunLog, config: ScenarioConfig, x_star_of) -> list[CompareRow]:
    day_energy = _day_energy(log, config.cadence.ticks_per_day)
    cumulative = np.cumsum(day_energy) if day_energy else None
    rows = []
    for r in log.rounds:
        x_star = x_star_of(r.round, r.window)
        acceptance = r.successes / r.samples if r.samples else None
        rows.append(
            CompareRow(
                seed=log.seed,
                method=log.method,
                window=r.window,
                round=r.round,
                x=r.x,
                x_star=x_star,
                abs_error=abs(r.x - x_star),
                acceptance=acceptance,
                shortfall=max(0.0, config.xi - acceptance) if acceptance is not None else 0.0,
                cumulative_energy_joules=float(cumulative[r.round]) if cumulative is not None else None,
            )
        )
    return rows


def _summarize(method: str, rows: list[CompareRow]) -> MethodSummary:
    frame = pd.DataFrame([r.model_dump() for r in rows if r.method == method])
    hits = []
    unconverged = 0
    for _, group in frame.groupby(["seed", "window"]):
        ok = group.sort_values("round")
        within = ok[ok["abs_error"] <= CONVERGENCE_TOL]
        if within.empty:
            unconverged += 1
        else:
            hits.append(int(within["round"].iloc[0]) + 1)
    last = frame[frame["round"] >= frame["round"].max() - FINAL_ROUNDS + 1]
    final_acc = last.groupby("seed")["acceptance"].mean()
    energy = None
    if frame["cumulative_energy_joules"].notna().any():
        energy = float(frame.groupby("seed")["cumulative_energy_joules"].max().mean())
    return MethodSummary(
        method=method,
        mean_rounds_to_converge=float(np.mean(hits)) if hits else None,
        unconverged=unconverged,
        mean_final_acceptance=float(final_acc.mean()) if final_acc.notna().any() else None,
        mean_shortfall=float(frame["shortfall"].mean()),
        mean_energy_joules=energy,
    )


def compare_tuners(
    config: ScenarioConfig,
    seeds: Sequence[int],
    *,
    correlation_id: str | None = None,
    audit_path: str = "",
) -> CompareReport:
    """Bayesian vs SA campaigns on paired seeds: per-round |x - x*|, shortfall and energy."""
    if not seeds:
        raise CampaignError("compare_tuners needs at least one seed")
    if config.mode == "curve":
        def x_star_of(k: int, w: int) -> float:
            return curve_x_star(config, k)

        x_star_initial = [curve_x_star(config, 0)]
    else:
        sweep = oracle_sweep(config)
        x_star_initial = sweep.x_star

        def x_star_of(k: int, w: int) -> float:
            return sweep.x_star[w]

    rows: list[CompareRow] = []
    for seed in seeds:
        cfg = config.with_overrides(seed=seed)
        for result in (
            run_closed_loop(cfg, correlation_id=correlation_id, audit_path=audit_path),
            run_sa(cfg, correlation_id=correlation_id, audit_path=audit_path),
        ):
            rows.extend(_compare_rows(result.log, cfg, x_star_of))
    summaries = [_summarize(m, rows) for m in ("bayes", "sa")]
    for s in summaries:
        logger.info(
            "compare %s: mean rounds to |x-x*|<=%.2f = %s (unconverged %d)",
            s.method, CONVERGENCE_TOL, s.mean_rounds_to_converge, s.unconverged,
        )
    return CompareReport(scenario=config.name, seeds=list(seeds), x_star=x_star_initial, summaries=summaries, rows=rows)


# --- Persistence ---


RUN_LOG_FILE = "run_log.json"


def write_run_log(log: RunLog, out_dir: str | Path) -> Path:
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    path = target / RUN_LOG_FILE
    path.write_text(log.model_dump_json(), encoding="utf-8")
    return path


def read_run_log(path: str | Path) -> RunLog:
    """Load a run log from a file or from a run directory containing run_log.json."""
    p = Path(path)
    if p.is_dir():
        p = p / RUN_LOG_FILE
    try:
        return RunLog.model_validate_json(p.read_text(encoding="utf-8"))
    except OSError as e:
        raise CampaignError(f"Cannot read run log {p}: {e}", kind="configuration") from e
    except ValidationError as e:
        raise CampaignError(f"Invalid run log {p}: {e.errors()[0].get('msg', 'validation error')}", kind="format") from e


def write_campaign_outputs(result: CampaignResult, out_dir: str | Path) -> list[Path]:
    """run_log.json, summary.json, rounds.csv and (sector mode) trace.csv."""
    target = Path(out_dir)
    written = [write_run_log(result.log, target)]
    summary = target / "summary.json"
    summary.write_text(result.report.model_dump_json(indent=2), encoding="utf-8")
    rounds = target / "rounds.csv"
    pd.DataFrame([r.model_dump() for r in result.log.rounds]).to_csv(rounds, index=False)
    written += [summary, rounds]
    if result.trace is not None:
        trace_path = target / "trace.csv"
        save_trace_csv(result.trace, trace_path)
        written.append(trace_path)
    return written


def report_rows(logs: Sequence[RunLog], labels: Sequence[str]) -> pd.DataFrame:
    """Per run and window: KPI (1 - xi) quantile vs sleep time, plus acceptance and watts."""
    rows = []
    for label, log in zip(labels, logs):
        metrics = evaluate_run(log)
        rows.append(
            {
                "run": label,
                "method": log.method,
                "scenario": log.scenario,
                "window": "all",
                "kpi_quantile": metrics.kpi_quantile,
                "sleep_time_pct": metrics.sleep_time_pct,
                "acceptance": metrics.acceptance,
                "avg_watts": metrics.avg_watts,
            }
        )
        for wm in metrics.per_window:
            rows.append(
                {
                    "run": label,
                    "method": log.method,
                    "scenario": log.scenario,
                    "window": str(wm.window),
                    "kpi_quantile": wm.kpi_quantile,
                    "sleep_time_pct": wm.sleep_time_pct,
                    "acceptance": wm.acceptance,
                    "avg_watts": wm.avg_watts,
                }
            )
    return pd.DataFrame(rows)
