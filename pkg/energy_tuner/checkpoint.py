"""Belief checkpoints: versioned, self-describing JSON text (grid spec + mass vector).

A tuning campaign can stop after any round and resume from the last checkpoint.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from .bayes_tuner import GridSpec, ParamBelief, TunerError

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


class CheckpointError(Exception):
    """Raised when a checkpoint file cannot be read or does not describe a valid belief."""

    def __init__(self, message: str, kind: str = "format") -> None:
        self.message = message
        self.kind = kind
        super().__init__(message)


class GridSpecModel(BaseModel):
    a_min: float
    a_max: float
    b_min: float
    b_max: float
    n_a: int
    n_b: int


class BeliefCheckpoint(BaseModel):
    format: Literal["param-belief"] = "param-belief"
    version: Literal[1] = CHECKPOINT_VERSION
    curve: Literal["bounded-linear"] = "bounded-linear"
    window: int = 0
    round: int = 0
    grid: GridSpecModel
    mass: list[float] = Field(..., description="Row-major (a, b) mass vector")


def checkpoint_name(window: int, round_index: int) -> str:
    return f"belief_w{window}_r{round_index:04d}.json"


def save_belief(belief: ParamBelief, path: str | Path, *, window: int = 0, round_index: int = 0) -> Path:
    """Write the belief to path (parent directories are created)."""
    g = belief.grid
    doc = BeliefCheckpoint(
        window=window,
        round=round_index,
        grid=GridSpecModel(a_min=g.a_min, a_max=g.a_max, b_min=g.b_min, b_max=g.b_max, n_a=g.n_a, n_b=g.n_b),
        mass=belief.mass.ravel().tolist(),
    )
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(doc.model_dump_json(indent=1), encoding="utf-8")
    return target


def load_belief(path: str | Path) -> ParamBelief:
    """Read a checkpoint back into a ParamBelief.

    Raises:
        CheckpointError: unreadable file, unknown format/version, or inconsistent grid and mass.
    """
    try:
        doc = BeliefCheckpoint.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}") from e
    except ValidationError as e:
        raise CheckpointError(f"Invalid checkpoint {path}: {e.errors()[0].get('msg', 'validation error')}") from e
    g = doc.grid
    try:
        grid = GridSpec(a_max=g.a_max, b_max=g.b_max, n_a=g.n_a, n_b=g.n_b, a_min=g.a_min, b_min=g.b_min)
        if len(doc.mass) != grid.n_a * grid.n_b:
            raise CheckpointError(f"Checkpoint {path}: {len(doc.mass)} masses for a {grid.n_a}x{grid.n_b} grid")
        belief = ParamBelief(grid=grid, mass=np.asarray(doc.mass, dtype=float).reshape(grid.n_a, grid.n_b))
    except TunerError as e:
        raise CheckpointError(f"Checkpoint {path}: {e.message}") from e
    logger.info("Loaded belief checkpoint %s (window=%d, round=%d)", path, doc.window, doc.round)
    return belief
