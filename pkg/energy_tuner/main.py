"""FastAPI application: window split, tuning campaigns, baseline and tuner comparison over HTTP."""

from __future__ import annotations

import logging
import time
import uuid
from collections.abc import Callable
from contextlib import asynccontextmanager
from typing import Any

from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .audit import error_detail_from_exception, log_audit, log_audit_step
from .config import get_env_file_path, get_settings
from .logs import configure_logging
from .orchestrator import compare_tuners, run_baseline, run_closed_loop
from .schemas import CompareRequest, ErrorResponse, ScenarioConfig, WindowsRequest, WindowsResponse
from .window_split import split_day

logger = logging.getLogger(__name__)


@asynccontextmanager
async def _lifespan(_app: FastAPI):  # noqa: ARG001
    """Startup: configure logging and log where settings come from."""
    configure_logging()
    settings = get_settings()
    logger.info(
        "Config: env_file=%s, audit=%s, checkpoints=%s",
        get_env_file_path(),
        settings.AUDIT_LOG_PATH or "disabled",
        settings.CHECKPOINT_DIR or "disabled",
    )
    yield


app = FastAPI(
    title="Energy Tuner API",
    description="Bayesian tuning of carrier shutdown thresholds under a KPI acceptance constraint",
    lifespan=_lifespan,
)


@app.exception_handler(RequestValidationError)
def validation_exception_handler(_request: object, exc: RequestValidationError) -> JSONResponse:
    """Map request validation errors to a 400 ErrorResponse naming the first bad field."""
    errors = exc.errors() or []
    msg = "Invalid request"
    if errors:
        first = errors[0]
        loc = [str(part) for part in first.get("loc", ()) if part != "body"]
        msg = f"Invalid request: {'.'.join(loc) + ': ' if loc else ''}{first.get('msg', 'validation error')}"
    return JSONResponse(status_code=400, content=ErrorResponse(status="error", message=msg).model_dump())


def _error_to_status_and_message(exc: BaseException) -> tuple[int, str]:
    """Map a domain exception to (status_code, message) by its kind.

    configuration -> 400; domain, constraint, degenerate_evidence -> 422; anything else -> 500.
    """
    kind = getattr(exc, "kind", None)
    message = getattr(exc, "message", None) or str(exc)
    if kind == "configuration":
        return 400, message
    if kind in ("domain", "constraint", "degenerate_evidence", "format"):
        return 422, message
    return 500, f"Internal error: {message}"


def _audit(resource: str, correlation_id: str, result: str, status_code: int, message: str | None = None) -> None:
    """Write one api_request entry; never breaks the response."""
    try:
        meta: dict[str, Any] = {"status_code": status_code}
        if message:
            meta["message"] = message
        log_audit(
            event_type="api_request",
            resource=resource,
            action="POST",
            result=result,
            correlation_id=correlation_id,
            metadata=meta,
        )
    except Exception:
        pass


def _with_correlation_header(content: dict, status: int, correlation_id: str) -> JSONResponse:
    return JSONResponse(status_code=status, content=content, headers={"X-Correlation-ID": correlation_id})


def _handle(resource: str, run: Callable[[str, str], BaseModel]) -> JSONResponse:
    """Run one request under a fresh correlation id; errors become ErrorResponse bodies."""
    correlation_id = str(uuid.uuid4())
    audit_path = get_settings().AUDIT_LOG_PATH
    t0 = time.perf_counter()
    try:
        body = run(correlation_id, audit_path)
    except Exception as e:
        status, message = _error_to_status_and_message(e)
        logger.warning(
            "%s failed (%d): %s",
            resource, status, message,
            extra={"correlation_id": correlation_id, "operation_name": resource.strip("/")},
        )
        if audit_path:
            log_audit_step(
                correlation_id, resource.strip("/"), "failure",
                error_detail=error_detail_from_exception(e, f"energy_tuner.main{resource.replace('/', '.')}"),
                duration_ms=(time.perf_counter() - t0) * 1000,
                audit_path=audit_path,
            )
        _audit(resource, correlation_id, "failure", status, message)
        return _with_correlation_header(ErrorResponse(status="error", message=message).model_dump(), status, correlation_id)
    _audit(resource, correlation_id, "success", 200)
    return _with_correlation_header(body.model_dump(mode="json"), 200, correlation_id)


@app.get("/")
def root() -> dict[str, str]:
    return {
        "message": "Energy Tuner API. POST /windows, /tune, /baseline or /compare with a scenario body.",
        "docs": "/docs",
    }


@app.post("/windows", response_model=WindowsResponse)
def windows(request: WindowsRequest) -> JSONResponse:
    """Split the day into the most CQI-stable windows."""

    def run(_cid: str, _path: str) -> WindowsResponse:
        result = split_day(request.cqi_by_hour, n_max=request.n_max, min_len=request.min_len)
        return WindowsResponse(boundaries=list(result.boundaries), n=result.n, objective=result.objective)

    return _handle("/windows", run)


@app.post("/tune")
def tune(scenario: ScenarioConfig) -> JSONResponse:
    """Run a Bayesian tuning campaign and return its report (the run log stays server-side)."""
    checkpoint_dir = get_settings().CHECKPOINT_DIR or None
    return _handle(
        "/tune",
        lambda cid, path: run_closed_loop(scenario, correlation_id=cid, audit_path=path, checkpoint_dir=checkpoint_dir).report,
    )


@app.post("/baseline")
def baseline(scenario: ScenarioConfig) -> JSONResponse:
    """All-carriers-on reference run."""
    return _handle("/baseline", lambda cid, path: run_baseline(scenario, correlation_id=cid, audit_path=path).report)


@app.post("/compare")
def compare(request: CompareRequest) -> JSONResponse:
    """Bayesian vs stochastic-approximation campaigns on paired seeds."""
    return _handle(
        "/compare",
        lambda cid, path: compare_tuners(request.scenario, request.seeds, correlation_id=cid, audit_path=path),
    )
