"""Tests for energy_tuner.orchestrator: campaigns, metrics, oracle sweep, comparison and run-log files."""

from pathlib import Path

import numpy as np
import pytest

from energy_tuner.audit import load_campaign_trace
from energy_tuner.config import load_scenario
from energy_tuner.orchestrator import (
    CampaignError,
    compare_tuners,
    curve_x_star,
    evaluate_run,
    oracle_sweep,
    read_run_log,
    report_rows,
    resolve_windows,
    run_baseline,
    run_closed_loop,
    run_fixed,
    run_sa,
    write_campaign_outputs,
    write_run_log,
)
from energy_tuner.schemas import (
    HistoryConfig,
    RoundRecord,
    RunLog,
    ScenarioConfig,
    TickRecord,
    WindowConfig,
)
from energy_tuner.shutdown_policy import thresholds_from_x


def _small_sector(**overrides) -> ScenarioConfig:
    base = {
        "name": "small",
        "rounds": 3,
        "windows": WindowConfig(boundaries=[8, 20]),
        "history": HistoryConfig(days=2),
    }
    return ScenarioConfig(**{**base, **overrides})


def _log(ticks: list[TickRecord] | None = None, rounds: list[RoundRecord] | None = None, eligible=None) -> RunLog:
    return RunLog(
        scenario="hand",
        method="fixed",
        seed=0,
        xi=0.89,
        tick_seconds=60,
        windows=[0],
        eligible=eligible or [],
        kpi_names=["dl_throughput_mbps"],
        ticks=ticks or [],
        rounds=rounds or [],
    )


def _tick(i: int, watts: float = 5.0, accepts: dict | None = None, active: list[str] | None = None) -> TickRecord:
    accepts = accepts or {}
    return TickRecord(
        tick=i,
        hour=0.0,
        window=0,
        active=active or ["a", "b", "c"],
        loads={},
        watts=watts,
        overflow=0.0,
        kpis={c: [6.0 if v else 4.0] for c, v in accepts.items()},
        accepts=accepts,
    )


# --- evaluate_run ---


def test_expected_acceptance_is_flat_mean_of_sampled_probabilities() -> None:
    ticks = [_tick(0, accepts={"a": 1, "b": 0}), _tick(1, accepts={"a": 1})]
    ticks[0].accept_probs = {"a": 0.9, "b": 0.6}
    ticks[1].accept_probs = {"a": 0.9}
    metrics = evaluate_run(_log(ticks))
    assert metrics.expected_acceptance == pytest.approx(0.8)
    assert metrics.per_window[0].expected_acceptance == pytest.approx(0.8)
    assert metrics.acceptance == pytest.approx(2 / 3)



def test_constant_power_average() -> None:
    metrics = evaluate_run(_log([_tick(i, 7.5) for i in range(4)]))
    assert metrics.avg_watts == pytest.approx(7.5)
    assert metrics.total_energy_joules == pytest.approx(7.5 * 240)


def test_equal_size_acceptance_is_plain_mean() -> None:
    ticks = [_tick(i, accepts={"a": v}) for i, v in enumerate([1, 1, 0, 1])]
    assert evaluate_run(_log(ticks)).acceptance == pytest.approx(0.75)


def test_mixed_size_acceptance_weights_by_carriers() -> None:
    ticks = [_tick(0, accepts={"a": 1, "b": 1}), _tick(1, accepts={"a": 1, "b": 0, "c": 0})]
    assert evaluate_run(_log(ticks)).acceptance == pytest.approx(3 / 5)


def test_acceptance_equals_flat_average_on_random_logs() -> None:
    rng = np.random.default_rng(0)
    for _ in range(20):
        ticks, flat = [], []
        for i in range(int(rng.integers(1, 30))):
            n = int(rng.integers(0, 4))
            accepts = {f"c{j}": int(rng.integers(0, 2)) for j in range(n)}
            flat.extend(accepts.values())
            ticks.append(_tick(i, float(rng.uniform(5, 20)), accepts))
        metrics = evaluate_run(_log(ticks))
        if flat:
            assert metrics.acceptance == pytest.approx(np.mean(flat), abs=1e-12)
        else:
            assert metrics.acceptance is None
        assert metrics.avg_watts == pytest.approx(metrics.total_energy_joules / metrics.duration_seconds, rel=1e-9)


def test_sleep_time_counts_eligible_carriers_only() -> None:
    ticks = [_tick(0, active=["a", "b", "c"]), _tick(1, active=["a"])]
    assert evaluate_run(_log(ticks, eligible=["b", "c"])).sleep_time_pct == pytest.approx(50.0)


def test_kpi_quantile_uses_one_minus_xi() -> None:
    ticks = [_tick(i, accepts={"a": 1}) for i in range(3)]
    ticks[0].kpis = {"a": [1.0]}
    ticks[1].kpis = {"a": [2.0]}
    ticks[2].kpis = {"a": [3.0]}
    assert evaluate_run(_log(ticks)).kpi_quantile == pytest.approx(np.quantile([1.0, 2.0, 3.0], 0.11))


def test_rounds_only_log_uses_batches() -> None:
    rounds = [
        RoundRecord(round=0, window=0, x=0.1, thresholds=(0.0, 0.0), samples=10, successes=9),
        RoundRecord(round=1, window=0, x=0.1, thresholds=(0.0, 0.0), samples=30, successes=21, degenerate=True),
    ]
    metrics = evaluate_run(_log(rounds=rounds))
    assert metrics.acceptance == pytest.approx(30 / 40)
    assert metrics.avg_watts is None
    assert metrics.degenerate_rounds == 1


def test_empty_log_cannot_be_evaluated() -> None:
    with pytest.raises(CampaignError):
        evaluate_run(_log())


# --- sector campaigns ---


def test_same_config_and_seed_give_identical_run_logs() -> None:
    config = _small_sector(rounds=2)
    first = run_closed_loop(config).log
    second = run_closed_loop(config).log
    assert first.model_dump_json() == second.model_dump_json()


def test_different_seeds_give_different_traces() -> None:
    a = run_fixed(_small_sector(rounds=1), 0.5).log
    b = run_fixed(_small_sector(rounds=1, seed=1), 0.5).log
    assert [t.watts for t in a.ticks] != [t.watts for t in b.ticks]


def test_deployed_thresholds_follow_selected_x() -> None:
    config = _small_sector()
    result = run_closed_loop(config)
    region = config.region.to_region()
    for record in result.log.rounds:
        expected = thresholds_from_x(record.x, region)
        assert record.thresholds == pytest.approx((expected.rho_min, expected.rho_max))


def test_one_round_per_window_per_day() -> None:
    config = _small_sector()
    log = run_closed_loop(config).log
    assert len(log.ticks) == config.rounds * config.cadence.ticks_per_day
    assert [(r.round, r.window) for r in log.rounds] == [(k, w) for k in range(3) for w in range(2)]
    # 12 h windows, one collection every 15 min, one sample per active carrier
    assert all(48 <= r.samples <= 48 * 4 for r in log.rounds)


def test_zero_xi_pushes_x_to_one() -> None:
    log = run_closed_loop(_small_sector(xi=0.0)).log
    assert all(r.x == 1.0 for r in log.rounds)


def test_coverage_floor_holds_every_tick() -> None:
    config = _small_sector(xi=0.0)
    log = run_closed_loop(config).log
    floor_carrier = config.sector.order()[0]
    assert all(floor_carrier in t.active for t in log.ticks)


def test_baseline_never_sleeps_and_accepts_at_least_as_often() -> None:
    config = _small_sector(rounds=4, xi=0.0)
    baseline = run_baseline(config)
    tuned = run_fixed(config, 1.0)
    assert baseline.report.metrics.sleep_time_pct == 0.0
    assert all(len(t.active) == 4 for t in baseline.log.ticks)
    assert baseline.report.metrics.acceptance >= tuned.report.metrics.acceptance


def test_reference_scenario_saves_energy_against_baseline(scenarios_dir: Path) -> None:
    config = load_scenario(scenarios_dir / "reference.toml")
    tuned = run_closed_loop(config)
    baseline = run_baseline(config)
    tuned_m, base_m = tuned.report.metrics, baseline.report.metrics
    assert tuned.report.windows == [8, 20]
    assert tuned_m.sleep_time_pct > 0
    assert tuned_m.avg_watts < base_m.avg_watts
    assert tuned_m.acceptance >= config.xi - 0.05
    assert base_m.acceptance >= tuned_m.acceptance - 0.01


def test_reference_tuner_lands_on_oracle_optimum(scenarios_dir: Path) -> None:
    config = load_scenario(scenarios_dir / "reference.toml")
    sweep = oracle_sweep(config)
    tuned = run_closed_loop(config)
    for w, acc in enumerate(sweep.acceptance):
        # every window crosses xi inside the search region
        assert acc[0] > config.xi + 0.05
        assert acc[-1] < config.xi - 0.05
        assert 0.1 < sweep.x_star[w] < 0.95
        assert abs(tuned.report.final_x[w] - sweep.x_star[w]) <= 0.05


def test_collection_ticks_record_true_acceptance_probabilities() -> None:
    log = run_fixed(_small_sector(rounds=1), 0.5).log
    collected = [t for t in log.ticks if t.accepts]
    assert collected
    for t in collected:
        assert set(t.accept_probs) == set(t.accepts)
        assert all(0.0 < p < 1.0 for p in t.accept_probs.values())
    assert all(not t.accept_probs for t in log.ticks if not t.accepts)


def test_oracle_sweep_picks_x_closest_to_xi() -> None:
    config = _small_sector(rounds=2)
    sweep = oracle_sweep(config, x_values=[0.0, 0.5, 1.0], days=1)
    assert len(sweep.acceptance) == 2
    for w, acc in enumerate(sweep.acceptance):
        gaps = [abs(a - config.xi) for a in acc]
        assert sweep.x_star[w] == [0.0, 0.5, 1.0][int(np.flatnonzero(np.isclose(gaps, min(gaps)))[-1])]


def test_auto_split_finds_day_and_night() -> None:
    config = ScenarioConfig(windows=WindowConfig(n_max=2, min_len=4, split_days=7))
    assert resolve_windows(config).boundaries == (8, 20)


# --- generative-curve campaigns ---


def test_stationary_curve_tracks_constraint(scenarios_dir: Path) -> None:
    config = load_scenario(scenarios_dir / "stationary_curve.toml")
    result = run_closed_loop(config)
    rounds = result.log.rounds
    assert len(rounds) == 30
    assert abs(rounds[-1].x - 0.11) <= 0.05
    last = rounds[-10:]
    acceptance = sum(r.successes for r in last) / sum(r.samples for r in last)
    assert abs(acceptance - config.xi) <= 0.05
    assert curve_x_star(config) == pytest.approx(0.11)


def test_stationary_curve_matches_oracle_sweep(scenarios_dir: Path) -> None:
    config = load_scenario(scenarios_dir / "stationary_curve.toml")
    sweep = oracle_sweep(config)
    result = run_closed_loop(config)
    assert abs(result.report.final_x[0] - sweep.x_star[0]) <= 0.05


def test_drift_kernel_recovers_after_shift(scenarios_dir: Path) -> None:
    config = load_scenario(scenarios_dir / "drift_curve.toml")
    after = [r for r in run_closed_loop(config).log.rounds if 40 <= r.round < 55]
    assert len(after) == 15
    assert abs(after[0].true_prob - config.xi) > 0.05
    # settled: the last five rounds all sit inside the band
    assert all(abs(r.true_prob - config.xi) <= 0.05 for r in after[-5:])


def test_zero_kernel_does_not_recover_after_shift(scenarios_dir: Path) -> None:
    config = load_scenario(scenarios_dir / "drift_curve.toml")
    frozen = config.model_validate({**config.model_dump(), "drift": {"std_a": 0.0, "std_b": 0.0}})
    after = [r for r in run_closed_loop(frozen).log.rounds if 40 <= r.round < 55]
    assert all(abs(r.true_prob - config.xi) > 0.05 for r in after)


def test_history_prior_moves_first_x_away_from_sa_start(scenarios_dir: Path) -> None:
    config = load_scenario(scenarios_dir / "stationary_curve.toml")
    informed = config.model_validate({**config.model_dump(), "history": {"days": 10, "x_values": [0.0]}})
    bayes = run_closed_loop(informed).log.rounds[0].x
    sa = run_sa(informed).log.rounds[0].x
    assert sa == informed.sa.x0
    assert bayes != sa


def test_large_sa_step_overshoots_below_optimum(scenarios_dir: Path) -> None:
    config = load_scenario(scenarios_dir / "stationary_curve.toml")
    eager = config.model_validate({**config.model_dump(), "sa": {"x0": 0.5, "eps0": 5.0}})
    xs = [r.x for r in run_sa(eager).log.rounds]
    assert any(x < curve_x_star(eager) for x in xs)


def test_compare_reports_both_methods(scenarios_dir: Path) -> None:
    config = load_scenario(scenarios_dir / "stationary_curve.toml")
    report = compare_tuners(config, list(range(20)))
    by_method = {s.method: s for s in report.summaries}
    assert set(by_method) == {"bayes", "sa"}
    bayes = by_method["bayes"]
    assert bayes.mean_rounds_to_converge is not None and bayes.mean_rounds_to_converge <= 30
    for summary in report.summaries:
        assert summary.mean_final_acceptance >= config.xi - 0.1
    assert len(report.rows) == 2 * 20 * config.rounds
    assert all(row.abs_error == pytest.approx(abs(row.x - 0.11)) for row in report.rows)


def test_compare_needs_seeds() -> None:
    with pytest.raises(CampaignError):
        compare_tuners(ScenarioConfig(mode="curve"), [])


# --- checkpoints, audit and files ---


def test_checkpoints_written_and_resumed(tmp_path: Path) -> None:
    config = ScenarioConfig(mode="curve", rounds=2)
    first = run_closed_loop(config, checkpoint_dir=tmp_path)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["belief_w0_r0000.json", "belief_w0_r0001.json"]
    assert first.log.rounds[-1].checkpoint == str(tmp_path / "belief_w0_r0001.json")

    audit = tmp_path / "audit.jsonl"
    run_closed_loop(config, resume_dir=tmp_path, correlation_id="resume", audit_path=str(audit))
    steps = load_campaign_trace("resume", audit_path=str(audit))["steps"]
    init = [s for s in steps if s["resource"] == "init_prior"]
    assert init[0]["metadata"]["input_summary"]["source"] == "checkpoint"


def test_campaign_audit_trace_covers_every_round(tmp_path: Path) -> None:
    audit = str(tmp_path / "audit.jsonl")
    config = ScenarioConfig(mode="curve", rounds=3)
    run_closed_loop(config, correlation_id="cid", audit_path=audit)
    resources = [s["resource"] for s in load_campaign_trace("cid", audit_path=audit)["steps"]]
    assert resources == ["split_day", "init_prior", "round", "round", "round", "evaluate_run"]


def test_run_log_written_and_read_back(tmp_path: Path) -> None:
    log = run_fixed(_small_sector(rounds=1), 0.3).log
    write_run_log(log, tmp_path)
    assert read_run_log(tmp_path).model_dump_json() == log.model_dump_json()


def test_missing_run_log_is_configuration_error(tmp_path: Path) -> None:
    with pytest.raises(CampaignError) as exc_info:
        read_run_log(tmp_path / "nothing")
    assert exc_info.value.kind == "configuration"


def test_malformed_run_log_is_format_error(tmp_path: Path) -> None:
    (tmp_path / "run_log.json").write_text('{"scenario": "x"}', encoding="utf-8")
    with pytest.raises(CampaignError) as exc_info:
        read_run_log(tmp_path)
    assert exc_info.value.kind == "format"


def test_campaign_outputs_and_report(tmp_path: Path) -> None:
    result = run_fixed(_small_sector(rounds=1), 0.6)
    written = write_campaign_outputs(result, tmp_path)
    assert {p.name for p in written} == {"run_log.json", "summary.json", "rounds.csv", "trace.csv"}
    frame = report_rows([result.log], ["fixed"])
    assert list(frame["window"]) == ["all", "0", "1"]
    assert set(frame.columns) >= {"kpi_quantile", "sleep_time_pct", "acceptance", "avg_watts"}
