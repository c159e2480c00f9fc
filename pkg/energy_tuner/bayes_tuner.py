"""Bayesian threshold tuning on a grid over the bounded-linear acceptance curve.

The belief is a discrete mass over theta = (a, b) with p_theta(x) = min(max(a - b*x, 0), 1).
Each round: select x, deploy, observe Bernoulli samples, apply drift then the Bayes rule.
The stochastic-approximation baseline lives here too (sa_step).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import convolve1d
from scipy.special import xlogy

logger = logging.getLogger(__name__)

DEFAULT_A_MAX = 1.5
DEFAULT_B_MAX = 3.0
DEFAULT_RESOLUTION = 61
DEFAULT_X_STEP = 0.01
DEFAULT_SA_EPS0 = 0.5
NORMALIZATION_TOL = 1e-9
# Kernel support in standard deviations
DRIFT_SUPPORT_SIGMAS = 3.0
# |E[p] - xi| values this close are ties
_TIE_TOL = 1e-12


class TunerError(Exception):
    """Raised for invalid tuner inputs or grid configuration.

    kind: "domain" for out-of-range inputs, "configuration" for invalid grids/kernels.
    """

    def __init__(self, message: str, kind: str = "domain") -> None:
        self.message = message
        self.kind = kind
        super().__init__(message)


class DegenerateEvidenceError(TunerError):
    """Every grid node contradicts the batch; `belief` is the unchanged input belief."""

    def __init__(self, message: str, belief: ParamBelief) -> None:
        super().__init__(message, kind="degenerate_evidence")
        self.belief = belief


@dataclass(frozen=True)
class CurveParams:
    a: float
    b: float


@dataclass(frozen=True)
class GridSpec:
    """Rectangular lattice a in [a_min, a_max] x b in [b_min, b_max]."""

    a_max: float = DEFAULT_A_MAX
    b_max: float = DEFAULT_B_MAX
    n_a: int = DEFAULT_RESOLUTION
    n_b: int = DEFAULT_RESOLUTION
    a_min: float = 0.0
    b_min: float = 0.0

    def __post_init__(self) -> None:
        if self.n_a < 2 or self.n_b < 2:
            raise TunerError("Grid needs at least 2 nodes per axis", kind="configuration")
        if not (self.a_min < self.a_max and self.b_min < self.b_max):
            raise TunerError("Grid bounds must satisfy min < max on both axes", kind="configuration")

    @property
    def a_values(self) -> np.ndarray:
        return np.linspace(self.a_min, self.a_max, self.n_a)

    @property
    def b_values(self) -> np.ndarray:
        return np.linspace(self.b_min, self.b_max, self.n_b)

    @property
    def a_step(self) -> float:
        return (self.a_max - self.a_min) / (self.n_a - 1)

    @property
    def b_step(self) -> float:
        return (self.b_max - self.b_min) / (self.n_b - 1)

    def monotone_mask(self) -> np.ndarray:
        """True where b >= 0, i.e. p_theta is non-increasing in x."""
        return np.broadcast_to(self.b_values >= 0, (self.n_a, self.n_b)).copy()

    def nearest(self, params: CurveParams) -> tuple[int, int]:
        i = int(np.argmin(np.abs(self.a_values - params.a)))
        j = int(np.argmin(np.abs(self.b_values - params.b)))
        return i, j


@dataclass(frozen=True)
class ParamBelief:
    """Probability mass over the grid nodes, shape (n_a, n_b)."""

    grid: GridSpec
    mass: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.mass.shape != (self.grid.n_a, self.grid.n_b):
            raise TunerError(
                f"Mass shape {self.mass.shape} does not match grid {(self.grid.n_a, self.grid.n_b)}",
                kind="configuration",
            )
        if np.any(self.mass < 0) or not np.all(np.isfinite(self.mass)):
            raise TunerError("Belief mass must be finite and >= 0", kind="configuration")
        if abs(float(self.mass.sum()) - 1.0) > NORMALIZATION_TOL:
            raise TunerError(f"Belief mass sums to {self.mass.sum()}, expected 1", kind="configuration")

    @classmethod
    def from_atoms(cls, grid: GridSpec, atoms: Sequence[tuple[CurveParams, float]]) -> ParamBelief:
        """Belief with the given weights placed on the nodes nearest to each atom."""
        mass = np.zeros((grid.n_a, grid.n_b))
        for params, weight in atoms:
            mass[grid.nearest(params)] += weight
        return cls(grid=grid, mass=mass / mass.sum())

    @classmethod
    def point_mass(cls, grid: GridSpec, params: CurveParams) -> ParamBelief:
        return cls.from_atoms(grid, [(params, 1.0)])


@dataclass(frozen=True)
class KpiBatch:
    """Binary acceptability samples collected with x_used deployed."""

    x_used: float
    samples: tuple[int, ...]
    window: int = 0
    round_index: int = 0

    def __post_init__(self) -> None:
        if not (0.0 <= self.x_used <= 1.0):
            raise TunerError(f"x_used must be in [0, 1], got {self.x_used}")
        if any(d not in (0, 1) for d in self.samples):
            raise TunerError("Samples must be binary (0 or 1)")

    @classmethod
    def from_counts(cls, x_used: float, successes: int, total: int, window: int = 0, round_index: int = 0) -> KpiBatch:
        return cls(
            x_used=x_used,
            samples=(1,) * successes + (0,) * (total - successes),
            window=window,
            round_index=round_index,
        )

    @property
    def successes(self) -> int:
        return sum(self.samples)

    @property
    def size(self) -> int:
        return len(self.samples)

    @property
    def mean(self) -> float:
        return self.successes / self.size if self.samples else float("nan")


@dataclass(frozen=True)
class DriftKernel:
    """Zero-mean Gaussian increments of (a, b) per round; zero disables drift."""

    std_a: float = 0.0
    std_b: float = 0.0

    def __post_init__(self) -> None:
        if self.std_a < 0 or self.std_b < 0:
            raise TunerError("Drift standard deviations must be >= 0", kind="configuration")

    @property
    def is_zero(self) -> bool:
        return self.std_a == 0.0 and self.std_b == 0.0


def curve_prob(x: float, params: CurveParams) -> float:
    """Bounded-linear acceptance probability min(max(a - b*x, 0), 1)."""
    if not (0.0 <= x <= 1.0):
        raise TunerError(f"x must be in [0, 1], got {x}")
    return min(max(params.a - params.b * x, 0.0), 1.0)


def _curve_on_grid(x: np.ndarray | float, grid: GridSpec) -> np.ndarray:
    """p_theta(x) for every node; shape (n_a, n_b) for scalar x, (len(x), n_a, n_b) otherwise."""
    a = grid.a_values[:, None]
    b = grid.b_values[None, :]
    x_arr = np.asarray(x, dtype=float)
    if x_arr.ndim == 0:
        return np.clip(a - b * x_arr, 0.0, 1.0)
    return np.clip(a[None] - b[None] * x_arr[:, None, None], 0.0, 1.0)


def _log_likelihood(p: np.ndarray | float, successes: int, total: int) -> np.ndarray | float:
    # xlogy(0, 0) == 0, so impossible outcomes give -inf and certain ones 0
    return xlogy(successes, p) + xlogy(total - successes, 1.0 - np.asarray(p))


def batch_likelihood(batch: KpiBatch, params: CurveParams) -> float:
    """p^s (1-p)^(J-s) at p = p_theta(x_used), accumulated in log space."""
    p = curve_prob(batch.x_used, params)
    return float(math.exp(_log_likelihood(p, batch.successes, batch.size)))


def _drift_kernel_1d(std: float, step: float) -> np.ndarray:
    sigma = std / step
    half = int(math.ceil(DRIFT_SUPPORT_SIGMAS * sigma))
    offsets = np.arange(-half, half + 1)
    weights = np.exp(-0.5 * (offsets / sigma) ** 2)
    return weights / weights.sum()


def apply_drift(belief: ParamBelief, kernel: DriftKernel) -> ParamBelief:
    """Convolve the mass with the drift kernel, axis by axis.

    Edges reflect (half-sample symmetric), so no mass leaves the lattice and the
    per-axis transition stays doubly stochastic. Mass drifting onto non-monotone nodes
    is dropped before renormalizing.
    """
    if kernel.is_zero:
        return belief
    mass = belief.mass
    if kernel.std_a > 0:
        mass = convolve1d(mass, _drift_kernel_1d(kernel.std_a, belief.grid.a_step), axis=0, mode="reflect")
    if kernel.std_b > 0:
        mass = convolve1d(mass, _drift_kernel_1d(kernel.std_b, belief.grid.b_step), axis=1, mode="reflect")
    mass = np.where(belief.grid.monotone_mask(), np.clip(mass, 0.0, None), 0.0)
    return ParamBelief(grid=belief.grid, mass=mass / mass.sum())


def posterior_update(belief: ParamBelief, batch: KpiBatch, kernel: DriftKernel = DriftKernel()) -> ParamBelief:
    """Drift the belief, then condition it on the batch.

    Raises:
        DegenerateEvidenceError: no node is compatible with the batch; carries the input belief.
    """
    prior = apply_drift(belief, kernel)
    if batch.size == 0:
        return prior
    log_lik = _log_likelihood(_curve_on_grid(batch.x_used, belief.grid), batch.successes, batch.size)
    support = (prior.mass > 0) & np.isfinite(log_lik)
    if not np.any(support):
        raise DegenerateEvidenceError(
            f"All grid nodes contradict the batch (x={batch.x_used}, {batch.successes}/{batch.size})",
            belief=belief,
        )
    shift = log_lik[support].max()
    weights = np.zeros_like(prior.mass)
    weights[support] = prior.mass[support] * np.exp(log_lik[support] - shift)
    total = weights.sum()
    if not total > 0:
        raise DegenerateEvidenceError("Posterior mass underflowed to zero", belief=belief)
    return ParamBelief(grid=belief.grid, mass=weights / total)


def x_grid(step: float = DEFAULT_X_STEP) -> np.ndarray:
    """{0, step, ..., 1}, rounded so that grid points are exact decimals."""
    if not (0 < step <= 1):
        raise TunerError(f"x grid step must be in (0, 1], got {step}")
    n = int(round(1.0 / step))
    return np.round(np.linspace(0.0, 1.0, n + 1), 12)


def expected_curve(belief: ParamBelief, xs: np.ndarray) -> np.ndarray:
    """E_theta[p_theta(x)] for each x under the belief."""
    p = _curve_on_grid(xs, belief.grid)
    return np.tensordot(p, belief.mass, axes=([1, 2], [0, 1]))


def select_x(belief: ParamBelief, xi: float, x_grid_step: float = DEFAULT_X_STEP) -> float:
    """Largest x on the grid whose expected acceptance is closest to xi."""
    if not (0.0 <= xi <= 1.0):
        raise TunerError(f"xi must be in [0, 1], got {xi}")
    xs = x_grid(x_grid_step)
    gap = np.abs(expected_curve(belief, xs) - xi)
    best = np.flatnonzero(gap <= gap.min() + _TIE_TOL)
    return float(xs[best[-1]])


def predictive_band(belief: ParamBelief, xs: Sequence[float] | np.ndarray, level: float = 0.9) -> tuple[np.ndarray, np.ndarray]:
    """Central credible band of p_theta(x) under the belief, one (lo, hi) per x."""
    if not (0.0 < level < 1.0):
        raise TunerError(f"level must be in (0, 1), got {level}")
    xs = np.asarray(xs, dtype=float)
    values = _curve_on_grid(xs, belief.grid).reshape(len(xs), -1)
    mass = belief.mass.ravel()
    tail = (1.0 - level) / 2.0
    lo = np.empty(len(xs))
    hi = np.empty(len(xs))
    for i, row in enumerate(values):
        order = np.argsort(row, kind="stable")
        cdf = np.cumsum(mass[order])
        lo[i] = row[order][min(np.searchsorted(cdf, tail), len(cdf) - 1)]
        hi[i] = row[order][min(np.searchsorted(cdf, 1.0 - tail), len(cdf) - 1)]
    return lo, hi


def posterior_mean(belief: ParamBelief) -> CurveParams:
    a = float(belief.mass.sum(axis=1) @ belief.grid.a_values)
    b = float(belief.mass.sum(axis=0) @ belief.grid.b_values)
    return CurveParams(a=a, b=b)


def belief_entropy(belief: ParamBelief) -> float:
    m = belief.mass[belief.mass > 0]
    return float(-(m * np.log(m)).sum())


def uniform_prior(grid: GridSpec) -> ParamBelief:
    """Uniform over the monotone-feasible nodes.

    Raises:
        TunerError: no node satisfies b >= 0 (configuration).
    """
    mask = grid.monotone_mask()
    if not mask.any():
        raise TunerError("Grid has no monotone-feasible node (needs b_max >= 0)", kind="configuration")
    mass = mask.astype(float)
    return ParamBelief(grid=grid, mass=mass / mass.sum())


def init_prior(grid: GridSpec, history: Iterable[KpiBatch]) -> ParamBelief:
    """Uniform feasible prior, then replay the history batches in order with zero drift."""
    belief = uniform_prior(grid)
    for batch in history:
        try:
            belief = posterior_update(belief, batch)
        except DegenerateEvidenceError as e:
            logger.warning("Skipping historical batch: %s", e.message)
    return belief


def sa_step(x: float, batch_mean: float, xi: float, eps_k: float) -> float:
    """x + eps_k * (m - xi), clipped to [0, 1]."""
    if not eps_k > 0:
        raise TunerError(f"SA step size must be > 0, got {eps_k}")
    return min(max(x + eps_k * (batch_mean - xi), 0.0), 1.0)


def sa_step_size(k: int, eps0: float = DEFAULT_SA_EPS0) -> float:
    """eps_k = eps0 / k for rounds k = 1, 2, ..."""
    return eps0 / max(k, 1)
