"""Tests for energy_tuner.checkpoint: belief files written and read back, and bad files rejected."""

import json
from pathlib import Path

import numpy as np
import pytest

from energy_tuner.bayes_tuner import GridSpec, KpiBatch, posterior_update, uniform_prior
from energy_tuner.checkpoint import CheckpointError, checkpoint_name, load_belief, save_belief


def test_saved_belief_loads_back_identical(tmp_path: Path) -> None:
    grid = GridSpec(n_a=21, n_b=31)
    belief = posterior_update(uniform_prior(grid), KpiBatch.from_counts(0.3, 40, 48))
    path = save_belief(belief, tmp_path / "nested" / checkpoint_name(1, 7), window=1, round_index=7)
    loaded = load_belief(path)
    assert loaded.grid == grid
    np.testing.assert_allclose(loaded.mass, belief.mass, rtol=0, atol=1e-15)


def test_checkpoint_is_self_describing(tmp_path: Path) -> None:
    path = save_belief(uniform_prior(GridSpec(n_a=3, n_b=3)), tmp_path / "b.json", window=2, round_index=5)
    doc = json.loads(path.read_text(encoding="utf-8"))
    assert doc["format"] == "param-belief"
    assert doc["version"] == 1
    assert doc["window"] == 2 and doc["round"] == 5
    assert len(doc["mass"]) == 9


def test_checkpoint_name_sorts_by_round() -> None:
    names = [checkpoint_name(0, r) for r in (10, 2, 100)]
    assert sorted(names) == [checkpoint_name(0, 2), checkpoint_name(0, 10), checkpoint_name(0, 100)]


def test_unknown_version_is_format_error(tmp_path: Path) -> None:
    path = save_belief(uniform_prior(GridSpec(n_a=3, n_b=3)), tmp_path / "b.json")
    doc = json.loads(path.read_text(encoding="utf-8"))
    doc["version"] = 2
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(CheckpointError) as exc_info:
        load_belief(path)
    assert exc_info.value.kind == "format"


def test_mass_length_mismatch_is_rejected(tmp_path: Path) -> None:
    path = save_belief(uniform_prior(GridSpec(n_a=3, n_b=3)), tmp_path / "b.json")
    doc = json.loads(path.read_text(encoding="utf-8"))
    doc["mass"] = doc["mass"][:-1]
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(CheckpointError):
        load_belief(path)


def test_missing_file_is_rejected(tmp_path: Path) -> None:
    with pytest.raises(CheckpointError):
        load_belief(tmp_path / "absent.json")
