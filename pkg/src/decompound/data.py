"""Observed increments and the latent per-segment jump counts."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

__all__ = ["ObservationSet", "AuxiliaryState"]


@dataclass(frozen=True)
class ObservationSet:
    """Increments ``z`` observed over windows of length ``deltas``.

    Segments with ``|z| > zero_threshold`` form the active set: they must
    contain at least one jump. With the default threshold of zero this is
    exact inequality ``z != 0``.
    """

    deltas: np.ndarray
    z: np.ndarray
    zero_threshold: float = 0.0

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.deltas, dtype=float))
        z = np.atleast_1d(np.asarray(self.z, dtype=float))
        if d.ndim != 1 or d.shape != z.shape:
            raise ValueError("deltas and z must be 1-d arrays of equal length")
        if d.size == 0:
            raise ValueError("an observation set needs at least one segment")
        if np.any(~(d > 0)):
            raise ValueError("all durations must be positive")
        if not np.all(np.isfinite(z)):
            raise ValueError("increments must be finite")
        if self.zero_threshold < 0:
            raise ValueError("zero_threshold must be nonnegative")
        d.flags.writeable = False
        z.flags.writeable = False
        object.__setattr__(self, "deltas", d)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.z.size

    @property
    def T(self) -> float:
        return float(self.deltas.sum())

    @property
    def active(self) -> np.ndarray:
        """Indices of segments with a nonzero increment."""
        if self.zero_threshold == 0.0:
            return np.flatnonzero(self.z != 0.0)
        return np.flatnonzero(np.abs(self.z) > self.zero_threshold)

    @property
    def n_active(self) -> int:
        return self.active.size

    def digest(self) -> str:
        """SHA-256 of the raw durations and increments."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.deltas, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.z, dtype="<f8").tobytes())
        return h.hexdigest()

    def subset(self, idx) -> "ObservationSet":
        idx = np.asarray(idx)
        return ObservationSet(self.deltas[idx], self.z[idx], self.zero_threshold)


@dataclass
class AuxiliaryState:
    """Jump counts per type on each active segment.

    ``counts[r, j]`` is the number of type-``j`` jumps on segment
    ``index[r]`` of the observation set.
    """

    index: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        self.index = np.asarray(self.index, dtype=np.int64).reshape(-1)
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != self.index.size:
            raise ValueError("counts must have one row per active segment")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        self.counts = counts

    @classmethod
    def empty(cls, J: int) -> "AuxiliaryState":
        return cls(np.empty(0, dtype=np.int64), np.empty((0, J), dtype=np.int64))

    @property
    def J(self) -> int:
        return self.counts.shape[1]

    @property
    def n(self) -> np.ndarray:
        """Total jumps per active segment."""
        return self.counts.sum(axis=1)

    @property
    def s(self) -> np.ndarray:
        """Total jumps of each type."""
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def copy(self) -> "AuxiliaryState":
        return AuxiliaryState(self.index.copy(), self.counts.copy())

    def check(self, data: ObservationSet | None = None) -> None:
        """Raise if some active segment has no jumps or the index disagrees with ``data``."""
        if np.any(self.n < 1):
            bad = self.index[self.n < 1]
            raise ValueError(f"active segments without jumps: {bad[:10].tolist()}")
        if data is not None and not np.array_equal(self.index, data.active):
            raise ValueError("auxiliary index does not match the active segments of the data")
