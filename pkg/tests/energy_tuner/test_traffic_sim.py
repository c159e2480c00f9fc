"""Tests for energy_tuner.traffic_sim: redistribution, KPI sampling, acceptance and traces."""

from pathlib import Path

import numpy as np
import pytest

from energy_tuner.traffic_sim import (
    CarrierSpec,
    DiurnalProfile,
    KpiModel,
    TrafficError,
    TrafficTrace,
    accept_probability,
    check_unique_frequencies,
    diurnal_trace,
    hourly_cqi,
    kpi_accept,
    load_trace_csv,
    mean_load,
    redistribute,
    sample_kpi,
    save_trace_csv,
)

FOUR = [CarrierSpec(f"c{i}", 800.0 + 500 * i) for i in range(4)]


# --- redistribute ---


def test_redistribute_onto_one_carrier_clips_with_overflow() -> None:
    result = redistribute(0.5, FOUR[:1], total_capacity=4.0)
    assert result.loads == {"c0": 1.0}
    assert result.overflow == pytest.approx(0.25)


def test_redistribute_equal_split() -> None:
    result = redistribute(0.25, FOUR, total_capacity=4.0)
    assert all(v == pytest.approx(0.25) for v in result.loads.values())
    assert result.overflow == 0.0


def test_redistribute_zero_demand() -> None:
    assert set(redistribute(0.0, FOUR[:2], 4.0).loads.values()) == {0.0}


def test_redistribute_empty_active_set_is_domain_error() -> None:
    with pytest.raises(TrafficError) as exc_info:
        redistribute(0.2, [], 4.0)
    assert exc_info.value.kind == "domain"


def test_redistribute_conserves_demand() -> None:
    """Carried plus overflow equals offered demand, in normalized units."""
    carriers = [CarrierSpec("a", 800, 2.0), CarrierSpec("b", 1800, 1.0), CarrierSpec("c", 2600, 1.0)]
    total = 4.0
    rng = np.random.default_rng(3)
    for demand in rng.uniform(0.0, 1.0, 200):
        for k in range(1, 4):
            active = carriers[:k]
            result = redistribute(float(demand), active, total)
            carried = sum(result.loads[c.id] * c.capacity_weight for c in active) / total
            assert carried + result.overflow == pytest.approx(demand)
            assert all(0.0 <= v <= 1.0 for v in result.loads.values())


# --- mean_load ---


def test_mean_load_equal_weights() -> None:
    assert mean_load({"c0": 0.2, "c1": 0.4}, FOUR[:2]) == pytest.approx(0.3)


def test_mean_load_capacity_weighted() -> None:
    carriers = [CarrierSpec("a", 800, 2.0), CarrierSpec("b", 1800, 1.0)]
    assert mean_load({"a": 0.3, "b": 0.9}, carriers) == pytest.approx(0.5)
    assert mean_load({"a": 0.3, "b": 0.9}, carriers, weighted=False) == pytest.approx(0.6)


def test_mean_load_single_carrier() -> None:
    assert mean_load({"c0": 0.7}, FOUR[:1]) == pytest.approx(0.7)


# --- sample_kpi / kpi_accept ---


def test_sample_kpi_same_seed_same_value() -> None:
    model = KpiModel()
    a = sample_kpi(0.4, 8.0, model, np.random.default_rng(5))
    b = sample_kpi(0.4, 8.0, model, np.random.default_rng(5))
    assert a == b


def _acceptance_rate(load: float, cqi: float, n: int = 10_000, seed: int = 0) -> float:
    model = KpiModel()
    rng = np.random.default_rng(seed)
    return float(np.mean([sample_kpi(load, cqi, model, rng) >= model.target for _ in range(n)]))


def test_acceptance_higher_at_low_load() -> None:
    assert _acceptance_rate(0.0, 8.0) > _acceptance_rate(1.0, 8.0)


def test_acceptance_higher_at_high_cqi() -> None:
    assert _acceptance_rate(0.5, 15.0) > _acceptance_rate(0.5, 1.0)


@pytest.mark.parametrize("load", [0.3, 0.85])
def test_empirical_acceptance_matches_model_probability(load: float) -> None:
    """Within a 3-sigma band of expit(score) at 10^4 draws."""
    p = KpiModel().acceptance_probability(load, 8.0)
    sigma = np.sqrt(p * (1 - p) / 10_000)
    assert abs(_acceptance_rate(load, 8.0) - p) < 3 * sigma + 1e-3


def test_default_model_calibration() -> None:
    model = KpiModel()
    assert model.acceptance_probability(0.3, 8.0) == pytest.approx(0.95, abs=0.01)
    assert model.acceptance_probability(0.85, 8.0) == pytest.approx(0.5, abs=0.02)


def test_acceptance_probability_non_increasing_in_load() -> None:
    model = KpiModel()
    probs = [model.acceptance_probability(load, 7.0) for load in np.linspace(0, 1, 51)]
    assert all(p >= q for p, q in zip(probs, probs[1:]))
    assert all(0.0 <= p <= 1.0 for p in probs)


def test_kpi_accept_examples() -> None:
    assert kpi_accept([6.1], [5.0]) == 1
    assert kpi_accept([6.1, 0.2], [5.0, 0.5]) == 0
    assert kpi_accept([], []) == 1
    assert kpi_accept([5.0], [5.0]) == 1


def test_kpi_accept_length_mismatch_is_domain_error() -> None:
    with pytest.raises(TrafficError) as exc_info:
        kpi_accept([1.0, 2.0], [1.0])
    assert exc_info.value.kind == "domain"


def test_kpi_accept_is_monotone() -> None:
    rng = np.random.default_rng(2)
    targets = [5.0, 0.5]
    for _ in range(500):
        values = list(rng.uniform(0, 10, 2))
        raised = [v + float(rng.uniform(0, 2)) for v in values]
        assert kpi_accept(raised, targets) >= kpi_accept(values, targets)


# --- traces ---


def test_duplicate_frequencies_rejected() -> None:
    with pytest.raises(TrafficError):
        check_unique_frequencies([CarrierSpec("a", 800), CarrierSpec("b", 800)])


def test_diurnal_trace_has_day_and_night_regimes() -> None:
    trace = diurnal_trace(3, 60, DiurnalProfile(), np.random.default_rng(0))
    assert len(trace) == 3 * 1440
    buckets = hourly_cqi(trace)
    assert len(buckets) == 24 and all(len(b) == 180 for b in buckets)
    assert np.mean(buckets[12]) < np.mean(buckets[2])
    day = trace.demand[12 * 60 : 13 * 60]
    night = trace.demand[2 * 60 : 3 * 60]
    assert day.mean() > night.mean()


def test_trace_replays_cyclically() -> None:
    trace = TrafficTrace(tick_seconds=3600, demand=np.array([0.1, 0.2]), cqi=np.array([5.0, 6.0]))
    assert trace.at(3) == (0.2, 6.0)
    assert trace.hour_of_tick(25) == pytest.approx(1.0)


def test_trace_rejects_cqi_out_of_range() -> None:
    with pytest.raises(TrafficError):
        TrafficTrace(tick_seconds=60, demand=np.array([0.1]), cqi=np.array([16.0]))


def test_trace_csv_save_and_load(tmp_path: Path) -> None:
    trace = diurnal_trace(1, 900, DiurnalProfile(), np.random.default_rng(1))
    path = tmp_path / "trace.csv"
    save_trace_csv(trace, path)
    loaded = load_trace_csv(path, 900)
    np.testing.assert_allclose(loaded.demand, trace.demand)
    np.testing.assert_allclose(loaded.cqi, trace.cqi)


def test_trace_csv_missing_column_is_configuration_error(tmp_path: Path) -> None:
    path = tmp_path / "bad.csv"
    path.write_text("tick,demand\n0,0.1\n", encoding="utf-8")
    with pytest.raises(TrafficError) as exc_info:
        load_trace_csv(path, 60)
    assert exc_info.value.kind == "configuration"


@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("weighted", [True, False])
def test_removing_a_carrier_never_lowers_mean_load(seed: int, weighted: bool) -> None:
    rng = np.random.default_rng(seed)
    carriers = [CarrierSpec(f"c{i}", 800.0 + 500 * i, float(rng.uniform(0.5, 2.0))) for i in range(4)]
    total = sum(c.capacity_weight for c in carriers)
    demand = float(rng.uniform(0.0, 1.0))
    for n in range(2, 5):
        active = carriers[:n]
        before = mean_load(redistribute(demand, active, total).loads, active, weighted)
        for drop in range(n):
            fewer = active[:drop] + active[drop + 1 :]
            after = mean_load(redistribute(demand, fewer, total).loads, fewer, weighted)
            assert after >= before - 1e-12


def test_accept_probability_multiplies_per_kpi_probabilities() -> None:
    throughput = KpiModel()
    latency = KpiModel(name="latency_ok", base=3.0, load_sensitivity=2.0, cqi_sensitivity=0.0)
    joint = accept_probability(0.4, 8.0, [throughput, latency])
    assert joint == pytest.approx(throughput.acceptance_probability(0.4, 8.0) * latency.acceptance_probability(0.4, 8.0))
    assert accept_probability(0.4, 8.0, []) == 1.0


def test_accept_probability_matches_sampled_rate() -> None:
    model = KpiModel()
    rng = np.random.default_rng(3)
    hits = sum(kpi_accept([sample_kpi(0.6, 7.0, model, rng)], [model.target]) for _ in range(20_000))
    assert hits / 20_000 == pytest.approx(accept_probability(0.6, 7.0, [model]), abs=0.01)
