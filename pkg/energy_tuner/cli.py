"""Command line: windows, tune, baseline, compare, sweep and report.

Exit codes: 0 success, 2 invalid scenario or arguments, 1 any other failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import uuid
from collections.abc import Sequence
from pathlib import Path

import pandas as pd
from pydantic import ValidationError

from .config import ScenarioError, get_settings, load_scenario
from .logs import configure_logging
from .orchestrator import (
    CampaignResult,
    compare_tuners,
    oracle_sweep,
    read_run_log,
    report_rows,
    resolve_windows,
    run_baseline,
    run_closed_loop,
    run_sa,
    write_campaign_outputs,
)
from .schemas import ScenarioConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2


def _scenario(args: argparse.Namespace) -> ScenarioConfig:
    config = load_scenario(args.config or get_settings().SCENARIO_FILE)
    try:
        return config.with_overrides(seed=getattr(args, "seed", None), rounds=getattr(args, "rounds", None))
    except ValidationError as e:
        raise ScenarioError(f"Invalid override: {e.errors()[0].get('msg', 'validation error')}") from e


def _out_dir(args: argparse.Namespace, config: ScenarioConfig, label: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path(get_settings().OUTPUT_DIR) / config.name / f"{label}-seed{config.seed}"


def _print_report(result: CampaignResult, out: Path) -> None:
    m = result.report.metrics
    print(f"{result.report.method} on {result.report.scenario} (seed {result.report.seed}), windows {result.report.windows}")
    print(f"  final x per window: {[round(x, 3) for x in result.report.final_x]}")
    if m.avg_watts is not None:
        print(f"  avg power: {m.avg_watts:.2f} W, sleep time: {m.sleep_time_pct:.1f} %")
    if m.acceptance is not None:
        print(f"  acceptance: {m.acceptance:.4f}")
    if m.degenerate_rounds:
        print(f"  degenerate rounds: {m.degenerate_rounds}")
    print(f"  outputs: {out}")


def cmd_windows(args: argparse.Namespace) -> int:
    config = _scenario(args)
    windows = resolve_windows(config)
    body = {"boundaries": list(windows.boundaries), "n": windows.n, "lengths": windows.lengths(), "objective": windows.objective}
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "windows.json").write_text(json.dumps(body, indent=2), encoding="utf-8")
    print(json.dumps(body))
    return EXIT_OK


def _campaign(args: argparse.Namespace, method: str) -> int:
    config = _scenario(args)
    settings = get_settings()
    correlation_id = str(uuid.uuid4())
    logger.info("Starting %s campaign", method, extra={"correlation_id": correlation_id, "operation_name": method})
    if method == "bayes":
        result = run_closed_loop(
            config,
            correlation_id=correlation_id,
            audit_path=settings.AUDIT_LOG_PATH,
            checkpoint_dir=settings.CHECKPOINT_DIR or None,
            resume_dir=args.resume,
        )
    elif method == "sa":
        result = run_sa(config, correlation_id=correlation_id, audit_path=settings.AUDIT_LOG_PATH)
    else:
        result = run_baseline(config, correlation_id=correlation_id, audit_path=settings.AUDIT_LOG_PATH)
    out = _out_dir(args, config, method)
    write_campaign_outputs(result, out)
    _print_report(result, out)
    return EXIT_OK


def cmd_tune(args: argparse.Namespace) -> int:
    return _campaign(args, args.method)


def cmd_baseline(args: argparse.Namespace) -> int:
    return _campaign(args, "baseline")


def cmd_compare(args: argparse.Namespace) -> int:
    config = _scenario(args)
    seeds = args.seed_list or list(range(args.seeds))
    report = compare_tuners(config, seeds, correlation_id=str(uuid.uuid4()), audit_path=get_settings().AUDIT_LOG_PATH)
    out = _out_dir(args, config, "compare")
    out.mkdir(parents=True, exist_ok=True)
    pd.DataFrame([r.model_dump() for r in report.rows]).to_csv(out / "compare.csv", index=False)
    (out / "summary.json").write_text(
        json.dumps({"scenario": report.scenario, "seeds": report.seeds, "x_star": report.x_star,
                    "summaries": [s.model_dump() for s in report.summaries]}, indent=2),
        encoding="utf-8",
    )
    print(pd.DataFrame([s.model_dump() for s in report.summaries]).to_string(index=False))
    print(f"outputs: {out}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _scenario(args)
    sweep = oracle_sweep(config, days=args.days)
    frame = pd.DataFrame(
        [
            {"window": w, "x": x, "acceptance": acc[i], "avg_watts": sweep.avg_watts[w][i]}
            for w, acc in enumerate(sweep.acceptance)
            for i, x in enumerate(sweep.xs)
        ]
    )
    out = _out_dir(args, config, "sweep")
    out.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out / "sweep.csv", index=False)
    print(json.dumps({"x_star": sweep.x_star}))
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    logs = [read_run_log(p) for p in args.runs]
    frame = report_rows(logs, [str(p) for p in args.runs])
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(args.out, index=False)
    print(frame.to_string(index=False))
    return EXIT_OK


def _add_scenario_args(p: argparse.ArgumentParser, *, rounds: bool = True) -> None:
    p.add_argument("--config", help="Scenario file (.toml or .json); default SCENARIO_FILE")
    p.add_argument("--seed", type=int, help="Override the scenario seed")
    if rounds:
        p.add_argument("--rounds", type=int, help="Override the number of tuning rounds")
    p.add_argument("--out", help="Output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="energy-tuner", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("windows", help="Split the day into CQI-stable windows")
    _add_scenario_args(p, rounds=False)
    p.set_defaults(func=cmd_windows)

    p = sub.add_parser("tune", help="Run a tuning campaign")
    _add_scenario_args(p)
    p.add_argument("--method", choices=("bayes", "sa"), default="bayes")
    p.add_argument("--resume", help="Directory of belief checkpoints to start from")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("baseline", help="Run with every carrier kept on")
    _add_scenario_args(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("compare", help="Bayesian vs stochastic approximation on paired seeds")
    _add_scenario_args(p)
    p.add_argument("--seeds", type=int, default=20, help="Use seeds 0..N-1")
    p.add_argument("--seed-list", type=int, nargs="+", help="Explicit seeds (overrides --seeds)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="Fixed-x sweep and the constrained optimum per window")
    _add_scenario_args(p, rounds=False)
    p.add_argument("--days", type=int, help="Days per swept x")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="KPI quantile vs sleep time for saved runs")
    p.add_argument("runs", nargs="+", help="run_log.json files or run directories")
    p.add_argument("--out", help="CSV file to write")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    configure_logging()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INVALID
    try:
        return args.func(args)
    except ScenarioError as e:
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:
        kind = getattr(e, "kind", None)
        print(f"error: {getattr(e, 'message', None) or e}", file=sys.stderr)
        if kind == "configuration":
            return EXIT_INVALID
        logger.debug("Command failed", exc_info=True)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
