"""Audit trail for tuning campaigns and API requests.

AUDIT.jsonl is append-only; every line is one AuditEntry plus the SHA-256 of its JSON text.
A campaign writes one `execution_step` per step (split_day, init_prior, round, evaluate_run)
under its correlation id; load_campaign_trace() puts the campaign back together.
Nothing read from the trail feeds back into a run log.
"""

from __future__ import annotations

import hashlib
import json
import traceback
from collections.abc import Iterator
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, Field

from .config import get_settings

ACTOR_ID = "energy_tuner"

StepResult = Literal["success", "warning", "failure"]


class AuditEntry(BaseModel):
    timestamp: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    event_type: Literal["api_request", "execution_step", "command"]
    actor_id: str = ACTOR_ID
    actor_type: str = "system"
    resource: str
    action: str
    result: str
    correlation_id: str
    metadata: dict[str, Any] = Field(default_factory=dict)


def _target(audit_path: str | None) -> Path | None:
    path = get_settings().AUDIT_LOG_PATH if audit_path is None else audit_path
    return Path(path) if path else None


def _append(entry: AuditEntry, audit_path: str | None) -> None:
    target = _target(audit_path)
    if target is None:
        return
    record = entry.model_dump()
    record["log_hash"] = hashlib.sha256(json.dumps(record, ensure_ascii=False).encode("utf-8")).hexdigest()
    with target.open("a", encoding="utf-8") as f:
        f.write(json.dumps(record, ensure_ascii=False) + "\n")


def log_audit(
    event_type: str,
    resource: str,
    action: str,
    result: str,
    correlation_id: str,
    metadata: dict[str, Any] | None = None,
    *,
    audit_path: str | None = None,
) -> None:
    """Append one entry; an empty audit path (argument or AUDIT_LOG_PATH) writes nothing."""
    _append(
        AuditEntry(
            event_type=event_type,  # type: ignore[arg-type]
            resource=resource,
            action=action,
            result=result,
            correlation_id=correlation_id,
            metadata=dict(metadata or {}),
        ),
        audit_path,
    )


def log_audit_step(
    correlation_id: str,
    step_name: str,
    result: StepResult,
    *,
    step_index: int | None = None,
    input_summary: dict[str, Any] | None = None,
    output_summary: dict[str, Any] | None = None,
    error_detail: dict[str, Any] | None = None,
    duration_ms: float | None = None,
    audit_path: str | None = None,
) -> None:
    """One campaign step, e.g. ("round", input {"window": 0, "x": 0.11}, output {"successes": 43, "samples": 48})."""
    meta: dict[str, Any] = {
        "step_index": step_index,
        "input_summary": input_summary,
        "output_summary": output_summary,
        "error_detail": error_detail,
        "duration_ms": round(duration_ms, 2) if duration_ms is not None else None,
    }
    log_audit(
        "execution_step",
        step_name,
        "call",
        result,
        correlation_id,
        {k: v for k, v in meta.items() if v is not None},
        audit_path=audit_path,
    )


def error_detail_from_exception(exc: BaseException, where: str) -> dict[str, Any]:
    """message, kind ("unclassified" for foreign exceptions), where and the formatted traceback."""
    return {
        "message": getattr(exc, "message", None) or str(exc),
        "kind": getattr(exc, "kind", "unclassified"),
        "where": where,
        "traceback": "".join(traceback.format_exception(exc)).strip(),
    }


class CampaignAudit:
    """Numbers the steps of one campaign; writes nothing when audit_path is empty."""

    def __init__(self, correlation_id: str, audit_path: str) -> None:
        self.correlation_id = correlation_id
        self.audit_path = audit_path
        self.index = 0

    def step(self, name: str, result: StepResult = "success", **summaries: Any) -> None:
        if not self.audit_path:
            return
        self.index += 1
        log_audit_step(self.correlation_id, name, result, step_index=self.index, audit_path=self.audit_path, **summaries)

    def failure(self, name: str, exc: BaseException, where: str) -> None:
        self.step(name, "failure", error_detail=error_detail_from_exception(exc, where))


def _read_entries(target: Path) -> Iterator[dict[str, Any]]:
    with target.open(encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError:
                continue


def load_campaign_trace(correlation_id: str, *, audit_path: str | None = None) -> dict[str, Any]:
    """Steps (by step_index, then time) and request entries of one campaign, plus a summary line."""
    target = _target(audit_path)
    if target is None or not target.is_file():
        return {"correlation_id": correlation_id, "steps": [], "requests": [], "summary": "No audit entries."}
    mine = [e for e in _read_entries(target) if e.get("correlation_id") == correlation_id]
    steps = sorted(
        (e for e in mine if e.get("event_type") == "execution_step"),
        key=lambda e: (e.get("metadata", {}).get("step_index", 1 << 30), e.get("timestamp", "")),
    )
    requests = [e for e in mine if e.get("event_type") != "execution_step"]
    warnings = sum(1 for s in steps if s.get("result") == "warning")
    return {
        "correlation_id": correlation_id,
        "steps": steps,
        "requests": requests,
        "summary": f"Steps: {len(steps)}, warnings: {warnings}, requests: {len(requests)}.",
    }
