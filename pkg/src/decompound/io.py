"""Reading and writing observations, traces and plot-ready tables.

All floats are written with 17 significant digits so that a write/read
round trip is lossless. File layouts:

* increments: ``delta,z``
* path values: ``t,x`` starting with the row ``0,0``
* latent counts: ``segment,n_1,...,n_J``
* trace: ``iter,psi_1..psi_J,mu_1..mu_J,tau,lambda``
"""

from __future__ import annotations

import csv
import enum
import json
from pathlib import Path

import numpy as np

from .data import AuxiliaryState, ObservationSet
from .sampler import Trace

__all__ = [
    "DataError",
    "ObservationFormat",
    "fmt",
    "write_increments_csv",
    "write_path_csv",
    "load_observations",
    "write_aux_csv",
    "read_aux_csv",
    "write_trace_csv",
    "read_trace_csv",
    "write_acceptance_csv",
    "read_acceptance_csv",
    "write_columns_csv",
    "write_metadata",
]


class DataError(ValueError):
    """Malformed input data file."""


class ObservationFormat(enum.Enum):
    PATH_CSV = "path_csv"
    INCREMENT_CSV = "increment_csv"


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _write_rows(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_columns_csv(path, columns: dict) -> None:
    """Write equal-length named columns."""
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    _write_rows(path, names, zip(*arrays))


def write_increments_csv(obs: ObservationSet, path) -> None:
    _write_rows(path, ["delta", "z"], zip(obs.deltas, obs.z))


def write_path_csv(obs: ObservationSet, path) -> None:
    """Cumulative path values at the observation times, starting from ``(0, 0)``."""
    t = np.concatenate(([0.0], np.cumsum(obs.deltas)))
    x = np.concatenate(([0.0], np.cumsum(obs.z)))
    _write_rows(path, ["t", "x"], zip(t, x))


def _read_table(path, expected: list[str]) -> np.ndarray:
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"{path}: cannot open ({exc.strerror})") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if header != expected:
            raise DataError(f"{path}: header {','.join(header)!r}, expected {','.join(expected)!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(expected):
                raise DataError(f"{path}:{lineno}: expected {len(expected)} fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: non-numeric field in {row!r}") from exc
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def load_observations(path, format="increment_csv", zero_threshold: float = 0.0) -> ObservationSet:
    """Read increments from an increment table or a table of path values.

    A path table with ``m`` rows yields ``m - 1`` increments; its times must
    be strictly increasing.
    """
    format = ObservationFormat(format)
    if format is ObservationFormat.INCREMENT_CSV:
        table = _read_table(path, ["delta", "z"])
        deltas, z = table[:, 0], table[:, 1]
        bad = np.flatnonzero(~(deltas > 0))
        if bad.size:
            raise DataError(f"{path}:{bad[0] + 2}: duration must be positive")
    else:
        table = _read_table(path, ["t", "x"])
        if table.shape[0] < 2:
            raise DataError(f"{path}: need at least two path values")
        deltas = np.diff(table[:, 0])
        bad = np.flatnonzero(~(deltas > 0))
        if bad.size:
            raise DataError(f"{path}:{bad[0] + 3}: times must be strictly increasing")
        z = np.diff(table[:, 1])
    if not np.all(np.isfinite(z)):
        raise DataError(f"{path}: non-finite increment")
    return ObservationSet(deltas, z, zero_threshold)


def write_aux_csv(aux: AuxiliaryState, path) -> None:
    header = ["segment"] + [f"n_{j + 1}" for j in range(aux.J)]
    _write_rows(path, header, (np.concatenate(([i], c)) for i, c in zip(aux.index, aux.counts)))


def read_aux_csv(path, J: int) -> AuxiliaryState:
    header = ["segment"] + [f"n_{j + 1}" for j in range(J)]
    try:
        table = _read_table(path, header)
    except DataError as exc:
        if "no data rows" in str(exc):
            return AuxiliaryState.empty(J)
        raise
    return AuxiliaryState(table[:, 0].astype(np.int64), table[:, 1:].astype(np.int64))


def trace_header(J: int) -> list[str]:
    return ["iter"] + [f"psi_{j + 1}" for j in range(J)] + [f"mu_{j + 1}" for j in range(J)] + ["tau", "lambda"]


def write_trace_csv(trace: Trace, path) -> None:
    cols = {"iter": trace.iterations}
    cols.update(trace.columns())
    write_columns_csv(path, cols)


def read_trace_csv(path) -> Trace:
    path = Path(path)
    with open(path) as fh:
        first = fh.readline().strip().split(",")
    J = sum(1 for h in first if h.startswith("psi_"))
    if J == 0:
        raise DataError(f"{path}: not a trace file")
    table = _read_table(path, trace_header(J))
    iterations = table[:, 0].astype(np.int64)
    thin = int(np.diff(iterations).min()) if iterations.size > 1 else 1
    return Trace(iterations, table[:, 1 : 1 + J], table[:, 1 + J : 1 + 2 * J], table[:, 1 + 2 * J], thin=thin)


def write_acceptance_csv(trace: Trace, path) -> None:
    it = np.arange(1, trace.accepted.size + 1)
    _write_rows(path, ["iter", "accepted", "proposed"], zip(it, trace.accepted, np.full(it.size, trace.n_active)))


def read_acceptance_csv(path) -> tuple[np.ndarray, int]:
    table = _read_table(path, ["iter", "accepted", "proposed"])
    return table[:, 1].astype(np.int64), int(table[0, 2])


def write_metadata(path, meta: dict) -> None:
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
