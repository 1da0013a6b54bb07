"""Simulation of compound Poisson paths and their sampled increments.

Two routes produce the same law of increments:

* :func:`simulate_path` followed by :func:`discretize` draws the full
  path (jump times and sizes) and differences it on an observation grid;
* :func:`simulate_increments` draws per-type jump counts on each segment
  and then the Gaussian sum of those jumps directly, returning the counts
  as ground truth for the sampler.

Random streams (see ``decompound._random``): the path uses one stream per
seed; increments use a counts stream and an independent noise stream, the
noise for segment ``i`` being the ``i``-th standard normal of its stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _random
from .data import AuxiliaryState, ObservationSet
from .model import MixtureDensity, ModelParams

__all__ = ["CppPath", "simulate_path", "discretize", "simulate_increments", "equidistant_grid"]


@dataclass(frozen=True)
class CppPath:
    """Jump times and sizes of a compound Poisson path on ``(0, T]``."""

    T: float
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        t = np.asarray(self.jump_times, dtype=float).reshape(-1)
        y = np.asarray(self.jump_sizes, dtype=float).reshape(-1)
        if t.shape != y.shape:
            raise ValueError("jump_times and jump_sizes must have equal length")
        if t.size and (np.any(np.diff(t) <= 0) or t[0] <= 0 or t[-1] > self.T):
            raise ValueError("jump times must be strictly increasing inside (0, T]")
        object.__setattr__(self, "jump_times", t)
        object.__setattr__(self, "jump_sizes", y)

    @property
    def n_jumps(self) -> int:
        return self.jump_times.size

    def value(self, t):
        """Path value ``X_t`` (right-continuous)."""
        cum = np.concatenate(([0.0], np.cumsum(self.jump_sizes)))
        return cum[np.searchsorted(self.jump_times, t, side="right")]


def _draw_jumps(f: MixtureDensity, size: int, rng: np.random.Generator) -> np.ndarray:
    labels = rng.choice(f.J, size=size, p=f.weights)
    return f.means[labels] + rng.standard_normal(size) / np.sqrt(f.precision)


def simulate_path(lam: float, f: MixtureDensity, T: float, seed: int) -> CppPath:
    """Draw a compound Poisson path with rate ``lam`` and jump density ``f``."""
    if not lam > 0 or not T > 0:
        raise ValueError("lam and T must be positive")
    rng = _random.stream(seed, _random.SIM_PATH)
    n_jumps = int(rng.poisson(lam * T))
    # 1 - U lies in (0, 1], keeping times inside (0, T]
    times = np.sort(T * (1.0 - rng.random(n_jumps)))
    sizes = _draw_jumps(f, n_jumps, rng)
    return CppPath(T, times, sizes, seed)


def equidistant_grid(n: int, delta: float) -> np.ndarray:
    return delta * np.arange(1, n + 1, dtype=float)


def discretize(path: CppPath, grid) -> ObservationSet:
    """Increments of ``path`` between consecutive grid times (starting from 0)."""
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise ValueError("empty observation grid")
    knots = np.concatenate(([0.0], grid))
    if np.any(np.diff(knots) <= 0):
        raise ValueError("observation grid must be strictly increasing and positive")
    if grid[-1] > path.T * (1 + 1e-12):
        raise ValueError("observation grid extends beyond the path horizon")
    # segment r holds jumps with t_{r-1} < time <= t_r
    seg = np.searchsorted(grid, path.jump_times, side="left")
    inside = seg < grid.size
    z = np.bincount(seg[inside], weights=path.jump_sizes[inside], minlength=grid.size)
    return ObservationSet(np.diff(knots), z)


def simulate_increments(params: ModelParams, durations, seed: int) -> tuple[ObservationSet, AuxiliaryState]:
    """Draw increments through per-type counts ``n_ij ~ Poisson(psi_j * delta_i)``.

    Given the counts, ``z_i ~ N(counts_i @ mu, n_i / tau)``; segments with
    no jumps get ``z_i = 0`` exactly. Returns the observations and the true
    counts on the nonzero segments.
    """
    durations = np.asarray(durations, dtype=float).reshape(-1)
    if np.any(~(durations > 0)):
        raise ValueError("durations must be positive")
    counts_rng = _random.stream(seed, _random.SIM_COUNTS)
    noise_rng = _random.stream(seed, _random.SIM_NOISE)
    counts = counts_rng.poisson(np.outer(durations, params.psi))
    eps = noise_rng.standard_normal(durations.size)
    n_i = counts.sum(axis=1)
    z = counts @ params.mu + np.sqrt(n_i / params.tau) * eps
    z[n_i == 0] = 0.0
    obs = ObservationSet(durations, z)
    active = obs.active
    return obs, AuxiliaryState(active, counts[active])
