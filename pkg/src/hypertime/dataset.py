"""Loading, validation, splitting, and scaling of timestamped measurements.

A dataset is either *valued* (each record carries a scalar reading ``a``
taken at time ``t`` and spatial position ``x``) or *event* (records are
bare occurrences at ``(t, x)``, e.g. detections of a person at a place).
Valued datasets feed regression-style models, event datasets feed
count/density models; everything downstream branches on ``Dataset.mode``.
"""

import csv
from dataclasses import dataclass

import numpy as np

VALUED = "valued"
EVENT = "event"


@dataclass(frozen=True)
class Measurement:
    """One record: time, spatial coordinates, optional scalar value."""

    t: float
    x: tuple[float, ...]
    a: float | None = None


class Dataset:
    """Immutable collection of measurements stored as flat arrays.

    Parameters
    ----------
    times : array_like, shape (l,)
        Timestamps in seconds.  Any epoch; only differences matter.
    coords : array_like, shape (l, d) or None
        Spatial coordinates.  ``None`` or empty means no spatial dims.
    values : array_like, shape (l,) or None
        Scalar readings.  ``None`` marks an event dataset.
    """

    def __init__(self, times, coords=None, values=None):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1:
            raise ValueError("times must be one-dimensional")
        l = times.shape[0]
        if coords is None:
            coords = np.empty((l, 0))
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords.reshape(l, 1)
        if coords.shape[0] != l:
            raise ValueError("coords length does not match times")
        if values is not None:
            values = np.asarray(values, dtype=float)
            if values.shape != (l,):
                raise ValueError("values length does not match times")
            if not np.all(np.isfinite(values)):
                raise ValueError("non-finite value entry")
        if not np.all(np.isfinite(times)):
            raise ValueError("non-finite timestamp")
        if not np.all(np.isfinite(coords)):
            raise ValueError("non-finite spatial coordinate")
        self.times = times
        self.coords = coords
        self.values = values
        times.setflags(write=False)
        coords.setflags(write=False)
        if values is not None:
            values.setflags(write=False)

    def __len__(self):
        return self.times.shape[0]

    @property
    def spatial_dim(self) -> int:
        return self.coords.shape[1]

    @property
    def mode(self) -> str:
        return EVENT if self.values is None else VALUED

    @property
    def duration(self) -> float:
        """Span max(t) - min(t); zero for a single record."""
        if len(self) == 0:
            raise ValueError("empty dataset has no duration")
        return float(self.times.max() - self.times.min())

    @property
    def records(self) -> list[Measurement]:
        vals = self.values
        return [
            Measurement(
                float(self.times[i]),
                tuple(float(c) for c in self.coords[i]),
                None if vals is None else float(vals[i]),
            )
            for i in range(len(self))
        ]

    def __repr__(self):
        return (
            f"Dataset(mode={self.mode!r}, n={len(self)}, "
            f"spatial_dim={self.spatial_dim})"
        )


def _column_roles(names, line_no):
    """Map header names to (t_idx, a_idx, x_idxs); names are authoritative."""
    t_idx = None
    a_idx = None
    x_by_rank = {}
    for i, name in enumerate(names):
        name = name.strip()
        if name == "t":
            if t_idx is not None:
                raise ValueError(f"line {line_no}: duplicate column 't'")
            t_idx = i
        elif name == "a":
            if a_idx is not None:
                raise ValueError(f"line {line_no}: duplicate column 'a'")
            a_idx = i
        elif name.startswith("x") and name[1:].isdigit():
            rank = int(name[1:])
            if rank in x_by_rank:
                raise ValueError(f"line {line_no}: duplicate column {name!r}")
            x_by_rank[rank] = i
        else:
            raise ValueError(f"line {line_no}: unknown column {name!r}")
    if t_idx is None:
        raise ValueError(f"line {line_no}: missing column 't'")
    ranks = sorted(x_by_rank)
    if ranks != list(range(1, len(ranks) + 1)):
        raise ValueError(f"line {line_no}: spatial columns must be x1..xd")
    return t_idx, a_idx, [x_by_rank[r] for r in ranks]


def load_csv(path, schema=None) -> Dataset:
    """Read a measurement CSV and return a Dataset sorted ascending by t.

    The expected layout is ``t`` first, then ``a`` for valued data, then
    ``x1..xd``.  A header row is required unless `schema` supplies the
    column names for a headerless file.  Mode is inferred from the
    presence of an ``a`` column.  Malformed input raises ``ValueError``
    naming the offending 1-based line number.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [(i + 1, r) for i, r in enumerate(rows) if r]
    if not rows:
        raise ValueError("empty file")
    if schema is None:
        header_line, header = rows[0]
        data_rows = rows[1:]
    else:
        header_line, header = 0, list(schema)
        data_rows = rows
    t_idx, a_idx, x_idxs = _column_roles(header, header_line or 1)
    width = len(header)
    if not data_rows:
        raise ValueError("no data rows")

    times = np.empty(len(data_rows))
    values = None if a_idx is None else np.empty(len(data_rows))
    coords = np.empty((len(data_rows), len(x_idxs)))
    for k, (line_no, row) in enumerate(data_rows):
        if len(row) != width:
            raise ValueError(
                f"line {line_no}: expected {width} fields, got {len(row)}"
            )
        try:
            times[k] = float(row[t_idx])
            if a_idx is not None:
                values[k] = float(row[a_idx])
            for d, xi in enumerate(x_idxs):
                coords[k, d] = float(row[xi])
        except ValueError:
            raise ValueError(f"line {line_no}: non-numeric field") from None
        if not np.isfinite(times[k]):
            raise ValueError(f"line {line_no}: non-finite timestamp")

    # Stable sort keeps the file order of duplicate timestamps.
    order = np.argsort(times, kind="stable")
    return Dataset(
        times[order],
        coords[order],
        None if values is None else values[order],
    )


def save_csv(dataset: Dataset, path) -> None:
    """Write `dataset` with the canonical header; floats use repr precision."""
    header = ["t"]
    if dataset.mode == VALUED:
        header.append("a")
    header += [f"x{d + 1}" for d in range(dataset.spatial_dim)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(len(dataset)):
            row = [repr(float(dataset.times[i]))]
            if dataset.mode == VALUED:
                row.append(repr(float(dataset.values[i])))
            row += [repr(float(c)) for c in dataset.coords[i]]
            writer.writerow(row)


def split_by_time(dataset: Dataset, boundary: float):
    """Split into (t < boundary, t >= boundary); either side empty is an error."""
    mask = dataset.times < boundary
    n_first = int(mask.sum())
    if n_first == 0:
        raise ValueError("split boundary leaves the first partition empty")
    if n_first == len(dataset):
        raise ValueError("split boundary leaves the second partition empty")
    vals = dataset.values

    def _take(m):
        return Dataset(
            dataset.times[m],
            dataset.coords[m],
            None if vals is None else vals[m],
        )

    return _take(mask), _take(~mask)


@dataclass(frozen=True)
class SpatialStats:
    """Per-dimension location/scale of the spatial coordinates."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        std = np.asarray(self.std, dtype=float)
        if mean.shape != std.shape or mean.ndim != 1:
            raise ValueError("mean and std must be 1-d arrays of equal length")
        if np.any(std <= 0):
            raise ValueError("std entries must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> "SpatialStats":
        """Compute per-dim mean/std; degenerate (zero) std is clamped to 1."""
        if len(dataset) == 0:
            raise ValueError("cannot compute statistics of an empty dataset")
        mean = dataset.coords.mean(axis=0)
        std = dataset.coords.std(axis=0)
        std = np.where(std > 0, std, 1.0)
        return cls(mean, std)

    @classmethod
    def identity(cls, spatial_dim: int) -> "SpatialStats":
        return cls(np.zeros(spatial_dim), np.ones(spatial_dim))


def standardize(dataset: Dataset, stats: SpatialStats) -> Dataset:
    """Return a copy with each spatial coordinate mapped to (x - mean) / std.

    Timestamps and values are untouched.  `stats` must match the dataset's
    spatial dimensionality.
    """
    if stats.mean.shape[0] != dataset.spatial_dim:
        raise ValueError(
            f"stats cover {stats.mean.shape[0]} dims, "
            f"dataset has {dataset.spatial_dim}"
        )
    coords = (dataset.coords - stats.mean) / stats.std
    return Dataset(dataset.times.copy(), coords, None if dataset.values is None else dataset.values.copy())
