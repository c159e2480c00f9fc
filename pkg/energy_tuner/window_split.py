"""Split the day into N windows with the most stable CQI, by exhaustive enumeration on whole hours."""

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

HOURS_PER_DAY = 24
DEFAULT_N_MAX = 4
DEFAULT_MIN_LEN = 4
# Objectives this close are ties (smaller N, then earliest boundaries win)
_TIE_TOL = 1e-12


class WindowSplitError(Exception):
    """Raised when no window placement is feasible or the CQI input is malformed.

    kind: "constraint" for infeasible placements, "domain" for bad inputs.
    """

    def __init__(self, message: str, kind: str = "constraint") -> None:
        self.message = message
        self.kind = kind
        super().__init__(message)


@dataclass(frozen=True)
class DayWindows:
    """Window i spans [h_i, h_{i+1}); the last one wraps midnight back to h_0."""

    boundaries: tuple[int, ...]
    objective: float = 0.0

    def __post_init__(self) -> None:
        b = self.boundaries
        if not b or any(not 0 <= h < HOURS_PER_DAY for h in b) or list(b) != sorted(set(b)):
            raise WindowSplitError(f"Invalid window boundaries: {b}", kind="domain")

    @property
    def n(self) -> int:
        return len(self.boundaries)

    def spans(self) -> list[tuple[int, int]]:
        """(start, end) per window; end may exceed 24 for the wrap window."""
        b = self.boundaries
        if self.n == 1:
            return [(b[0], b[0] + HOURS_PER_DAY)]
        return [(b[i], b[i + 1]) for i in range(self.n - 1)] + [(b[-1], b[0] + HOURS_PER_DAY)]

    def lengths(self) -> list[int]:
        return [end - start for start, end in self.spans()]

    def window_of_hour(self, hour: float) -> int:
        """Index of the window containing hour-of-day `hour`."""
        h = hour % HOURS_PER_DAY
        for i, (start, end) in enumerate(self.spans()):
            if start <= h < end or start <= h + HOURS_PER_DAY < end:
                return i
        raise WindowSplitError(f"Hour {hour} is not covered by {self.boundaries}", kind="domain")


def _hour_buckets(cqi_by_hour: Sequence[Sequence[float]]) -> list[np.ndarray]:
    """Pool finer buckets into 24 hourly sample arrays."""
    n = len(cqi_by_hour)
    if n == 0 or n % HOURS_PER_DAY:
        raise WindowSplitError(f"Expected 24 buckets or a multiple of 24, got {n}", kind="domain")
    per_hour = n // HOURS_PER_DAY
    hours = []
    for h in range(HOURS_PER_DAY):
        samples = [v for bucket in cqi_by_hour[h * per_hour : (h + 1) * per_hour] for v in bucket]
        if not samples:
            raise WindowSplitError(f"No CQI samples for hour {h}", kind="domain")
        hours.append(np.asarray(samples, dtype=float))
    return hours


class _WindowStd:
    """Population std of the pooled samples of an hour span [start, end), end <= start + 24.

    At most 24 x 24 distinct spans exist, so each is computed once and cached.
    """

    def __init__(self, hours: list[np.ndarray]) -> None:
        self._hours = hours
        self._cache: dict[tuple[int, int], float] = {}

    def __call__(self, start: int, end: int) -> float:
        key = (start, end)
        if key not in self._cache:
            pooled = np.concatenate([self._hours[h % HOURS_PER_DAY] for h in range(start, end)])
            self._cache[key] = float(np.std(pooled))
        return self._cache[key]


def split_objective(windows: DayWindows, cqi_by_hour: Sequence[Sequence[float]]) -> float:
    """Mean over windows of the population std of CQI within each window."""
    std = _WindowStd(_hour_buckets(cqi_by_hour))
    return float(np.mean([std(s, e) for s, e in windows.spans()]))


def split_day(
    cqi_by_hour: Sequence[Sequence[float]],
    n_max: int = DEFAULT_N_MAX,
    min_len: int = DEFAULT_MIN_LEN,
) -> DayWindows:
    """Exhaustively pick N <= n_max and whole-hour boundaries minimizing the mean window CQI std.

    Every window, the wrap window included, lasts at least min_len hours. Ties go to the
    smaller N, then to the lexicographically earliest boundaries.

    Raises:
        WindowSplitError: no feasible placement (constraint) or malformed input (domain).
    """
    if n_max < 1 or min_len < 1:
        raise WindowSplitError(f"n_max and min_len must be >= 1, got {n_max}, {min_len}", kind="domain")
    if min_len > HOURS_PER_DAY:
        raise WindowSplitError(f"min_len={min_len} h exceeds one day")
    std = _WindowStd(_hour_buckets(cqi_by_hour))

    best: DayWindows | None = None
    for n in range(1, n_max + 1):
        if n * min_len > HOURS_PER_DAY:
            break
        candidates = [(0,)] if n == 1 else itertools.combinations(range(HOURS_PER_DAY), n)
        for bounds in candidates:
            windows = DayWindows(boundaries=tuple(bounds))
            spans = windows.spans()
            if any(end - start < min_len for start, end in spans):
                continue
            objective = float(np.mean([std(s, e) for s, e in spans]))
            # strict improvement only: enumeration order already encodes the tie rule
            if best is None or objective < best.objective - _TIE_TOL:
                best = DayWindows(boundaries=windows.boundaries, objective=objective)
    if best is None:
        raise WindowSplitError(f"No window placement with n_max={n_max} and min_len={min_len} h")
    logger.info("Split day into %d window(s) at hours %s (objective %.4f)", best.n, list(best.boundaries), best.objective)
    return best
