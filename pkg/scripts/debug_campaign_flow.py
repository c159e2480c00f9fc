#!/usr/bin/env python3
"""
Debug a tuning campaign step by step on a scenario file.
Runs the same flow as `energy_tuner tune`, printing each step: the window split,
every round's x / thresholds / batch, and the final metrics next to the baseline.

Run from project root with venv activated:
  python scripts/debug_campaign_flow.py                                  # reference scenario
  python scripts/debug_campaign_flow.py --config scenarios/drift_curve.toml --rounds 50
  python scripts/debug_campaign_flow.py --no-baseline                    # skip the baseline run
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

# Allow running from project root or from scripts/
_PROJECT_ROOT = Path(__file__).resolve().parent.parent
if str(_PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(_PROJECT_ROOT))


def _banner(title: str) -> None:
    print("\n" + "=" * 70)
    print(title)
    print("=" * 70)


# ---------------------------------------------------------------------------
# Step 0: Scenario and settings
# ---------------------------------------------------------------------------
def step0_scenario(path: str, rounds: int | None, seed: int | None):
    from energy_tuner.config import get_env_file_path, get_settings, load_scenario

    config = load_scenario(path).with_overrides(seed=seed, rounds=rounds)
    settings = get_settings()
    _banner("Step 0: Scenario and settings")
    print(f"  scenario: {config.name} ({config.mode}), seed={config.seed}, rounds={config.rounds}, xi={config.xi}")
    if config.mode == "sector":
        print(f"  carriers (shutdown order): {config.sector.order()}, coverage floor {config.sector.coverage_floor}")
        print(f"  cadence: tick {config.cadence.tick_seconds}s, collection {config.cadence.collection_seconds}s")
    else:
        print(f"  curve: a={config.curve.a}, b={config.curve.b}, J={config.curve.samples_per_round}, shifts={len(config.curve.shifts)}")
    print(f"  region: {config.region.lo} -> {config.region.hi}, drift: {config.drift.std_a}/{config.drift.std_b}")
    print(f"  env file: {get_env_file_path()}, checkpoints: {settings.CHECKPOINT_DIR or 'off'}")
    return config


# ---------------------------------------------------------------------------
# Step 1: Window split
# ---------------------------------------------------------------------------
def step1_windows(config):
    from energy_tuner.orchestrator import resolve_windows

    _banner("Step 1: Window split")
    windows = resolve_windows(config)
    for i, (start, end) in enumerate(windows.spans()):
        print(f"  window {i}: {start:02d}:00 -> {end % 24:02d}:00 ({end - start} h)")
    print(f"  objective (mean CQI std): {windows.objective:.4f}")
    return windows


# ---------------------------------------------------------------------------
# Step 2: Campaign rounds
# ---------------------------------------------------------------------------
def step2_campaign(config):
    from energy_tuner.orchestrator import run_closed_loop

    _banner("Step 2: Campaign rounds")
    result = run_closed_loop(config)
    print("  round win      x     rho_min rho_max   accepted   band")
    for r in result.log.rounds:
        band = f"[{r.band[0]:.2f}, {r.band[1]:.2f}]" if r.band else "-"
        flag = "  degenerate" if r.degenerate else ""
        truth = f"  p*={r.true_prob:.3f}" if r.true_prob is not None else ""
        print(
            f"  {r.round:5d} {r.window:3d}  {r.x:6.3f}  {r.thresholds[0]:6.3f}  {r.thresholds[1]:6.3f}"
            f"  {r.successes:4d}/{r.samples:<4d}  {band}{truth}{flag}"
        )
    return result


# ---------------------------------------------------------------------------
# Step 3: Metrics vs baseline
# ---------------------------------------------------------------------------
def step3_metrics(config, tuned, with_baseline: bool) -> None:
    from energy_tuner.orchestrator import run_baseline

    _banner("Step 3: Metrics")
    rows = [("tuned", tuned.report.metrics)]
    if with_baseline:
        rows.append(("baseline", run_baseline(config).report.metrics))
    for label, m in rows:
        watts = f"{m.avg_watts:.2f} W" if m.avg_watts is not None else "n/a"
        sleep = f"{m.sleep_time_pct:.1f} %" if m.sleep_time_pct is not None else "n/a"
        acc = f"{m.acceptance:.4f}" if m.acceptance is not None else "n/a"
        print(f"  {label:9s} power {watts:>10s}  sleep {sleep:>7s}  acceptance {acc}")
    print(f"  final x per window: {[round(x, 3) for x in tuned.report.final_x]}")


# ---------------------------------------------------------------------------
# Main
# ---------------------------------------------------------------------------
def main() -> int:
    parser = argparse.ArgumentParser(description="Debug a tuning campaign step by step")
    parser.add_argument("--config", default=str(_PROJECT_ROOT / "scenarios" / "reference.toml"))
    parser.add_argument("--rounds", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--no-baseline", action="store_true", help="Do not run the all-carriers-on baseline")
    args = parser.parse_args()

    config = step0_scenario(args.config, args.rounds, args.seed)
    step1_windows(config)
    tuned = step2_campaign(config)
    step3_metrics(config, tuned, with_baseline=not args.no_baseline)
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
