"""Tests for energy_tuner.audit: hashed JSONL entries and campaign trace reconstruction."""

import hashlib
import json
from pathlib import Path

from energy_tuner.audit import (
    CampaignAudit,
    error_detail_from_exception,
    load_campaign_trace,
    log_audit,
    log_audit_step,
)
from energy_tuner.window_split import WindowSplitError


def _entries(path: Path) -> list[dict]:
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def test_log_audit_appends_hashed_entry(tmp_path: Path) -> None:
    path = tmp_path / "audit.jsonl"
    log_audit("api_request", "/tune", "POST", "success", "cid-1", {"status_code": 200}, audit_path=str(path))
    (entry,) = _entries(path)
    stored_hash = entry.pop("log_hash")
    assert stored_hash == hashlib.sha256(json.dumps(entry, ensure_ascii=False).encode("utf-8")).hexdigest()
    assert entry["actor_id"] == "energy_tuner"


def test_empty_audit_path_disables_writing(tmp_path: Path) -> None:
    log_audit("api_request", "/tune", "POST", "success", "cid", audit_path="")
    assert list(tmp_path.iterdir()) == []


def test_campaign_trace_orders_steps_and_counts_warnings(tmp_path: Path) -> None:
    path = str(tmp_path / "audit.jsonl")
    log_audit_step("cid", "round", "warning", step_index=2, output_summary={"degenerate": True}, audit_path=path)
    log_audit_step("cid", "split_day", "success", step_index=1, audit_path=path)
    log_audit_step("other", "split_day", "success", step_index=1, audit_path=path)
    log_audit("api_request", "/tune", "POST", "success", "cid", audit_path=path)
    trace = load_campaign_trace("cid", audit_path=path)
    assert [s["resource"] for s in trace["steps"]] == ["split_day", "round"]
    assert len(trace["requests"]) == 1
    assert "warnings: 1" in trace["summary"]


def test_campaign_trace_without_file(tmp_path: Path) -> None:
    trace = load_campaign_trace("cid", audit_path=str(tmp_path / "none.jsonl"))
    assert trace["steps"] == [] and trace["summary"] == "No audit entries."


def test_error_detail_carries_kind() -> None:
    detail = error_detail_from_exception(WindowSplitError("no placement"), "energy_tuner.window_split.split_day")
    assert detail["kind"] == "constraint"
    assert detail["message"] == "no placement"


def test_campaign_audit_numbers_steps_and_records_failures(tmp_path: Path) -> None:
    path = str(tmp_path / "audit.jsonl")
    audit = CampaignAudit("cid", path)
    audit.step("split_day", output_summary={"boundaries": [8, 20]})
    audit.failure("evaluate_run", WindowSplitError("no placement"), "here")
    steps = load_campaign_trace("cid", audit_path=path)["steps"]
    assert [s["metadata"]["step_index"] for s in steps] == [1, 2]
    assert steps[1]["result"] == "failure"
    assert steps[1]["metadata"]["error_detail"]["kind"] == "constraint"


def test_campaign_audit_without_path_writes_nothing(tmp_path: Path) -> None:
    audit = CampaignAudit("cid", "")
    audit.step("split_day")
    assert audit.index == 0
    assert list(tmp_path.iterdir()) == []
