"""Datasets, quantile partitions and cell counting."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """Raised for malformed or unusable input data."""


@dataclass(frozen=True)
class Dataset:
    """An immutable ``n x d`` table of numeric predictors.

    ``response`` is optional and is never read by the effect estimators; it
    is kept for tree fitting and for generated data. ``metadata`` carries
    provenance such as the generator family and RNG algorithm.
    """

    columns: tuple[str, ...]
    values: np.ndarray
    response: np.ndarray | None = None
    response_name: str | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise DataError(f"values must be 2-D, got shape {values.shape}")
        n, d = values.shape
        if n < 2 or d < 1:
            raise DataError(f"need n >= 2 rows and d >= 1 columns, got {n}x{d}")
        columns = tuple(str(c) for c in self.columns)
        if len(columns) != d:
            raise DataError(f"{len(columns)} column names for {d} columns")
        if len(set(columns)) != d:
            raise DataError("column names must be unique")
        if not np.isfinite(values).all():
            r, c = np.argwhere(~np.isfinite(values))[0]
            raise DataError(f"non-finite value at row {r + 1}, column {columns[c]}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "columns", columns)
        if self.response is not None:
            y = np.array(self.response, dtype=np.float64, copy=True).reshape(-1)
            if y.shape[0] != n:
                raise DataError(f"response has {y.shape[0]} entries for {n} rows")
            y.setflags(write=False)
            object.__setattr__(self, "response", y)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def column(self, feature: int | str) -> np.ndarray:
        return self.values[:, self.index(feature)]

    def index(self, feature: int | str) -> int:
        """Resolve a column name or 0-based position to a position."""
        if isinstance(feature, (int, np.integer)):
            if not 0 <= feature < self.d:
                raise DataError(f"feature index {feature} out of range for d={self.d}")
            return int(feature)
        try:
            return self.columns.index(feature)
        except ValueError:
            raise DataError(f"unknown feature {feature!r}; columns are {list(self.columns)}") from None

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(
            self.columns,
            self.values[rows],
            None if self.response is None else self.response[rows],
            self.response_name,
            dict(self.metadata),
        )


def load_csv(
    path: str | Path,
    delimiter: str = ",",
    response: str | None = None,
) -> Dataset:
    """Read a headed, delimited numeric table.

    Row numbers in error messages count data rows from 1 (the header is not
    counted). If ``response`` names a column, that column is split off as
    the dataset's response.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = []
        for rownum, record in enumerate(reader, start=1):
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) != len(header):
                raise DataError(
                    f"{path}: row {rownum} has {len(record)} fields, header has {len(header)}"
                )
            parsed = []
            for name, cell in zip(header, record):
                try:
                    value = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: cannot parse {cell.strip()!r} as a number at row {rownum}, column {name}"
                    ) from None
                if not math.isfinite(value):
                    raise DataError(f"{path}: non-finite value at row {rownum}, column {name}")
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: no data rows")
    table = np.array(rows, dtype=np.float64)
    if response is None:
        return Dataset(tuple(header), table, metadata={"source": str(path)})
    if response not in header:
        raise DataError(f"{path}: response column {response!r} not in header")
    r = header.index(response)
    keep = [c for c in range(len(header)) if c != r]
    return Dataset(
        tuple(header[c] for c in keep),
        table[:, keep],
        table[:, r],
        response,
        metadata={"source": str(path)},
    )


def write_csv(data: Dataset, path: str | Path) -> None:
    header = list(data.columns)
    table = data.values
    if data.response is not None:
        header.append(data.response_name or "y")
        table = np.column_stack([table, data.response])
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in table:
            writer.writerow([f"{v:.17g}" for v in row])


@dataclass(frozen=True)
class QuantilePartition:
    """Breakpoints ``z[0] < ... < z[K]`` for one feature.

    Bin ``k`` (1-based) is the interval ``(z[k-1], z[k]]``; the sample
    minimum ``z[0]`` also belongs to bin 1. ``counts[k-1]`` is the number of
    observations in bin ``k``.
    """

    feature: int
    breakpoints: np.ndarray
    counts: np.ndarray

    @property
    def K(self) -> int:
        return self.breakpoints.shape[0] - 1

    def locate(self, x) -> np.ndarray:
        """Vectorized :func:`locate_bin`."""
        k = np.searchsorted(self.breakpoints, np.asarray(x, dtype=np.float64), side="left")
        return np.clip(k, 1, self.K)


def build_quantile_partition(data: Dataset, j: int | str, K: int) -> QuantilePartition:
    """Partition feature ``j`` at its empirical ``k/K`` quantiles.

    The ``k``-th breakpoint is the order statistic at 1-based position
    ``ceil(k * n / K)``; repeated breakpoints collapse, so the effective
    number of bins may be smaller than ``K``.
    """
    if K < 1:
        raise DataError(f"K must be >= 1, got {K}")
    j = data.index(j)
    x = np.sort(data.values[:, j])
    n = x.shape[0]
    if x[0] == x[-1]:
        raise DataError(f"degenerate feature {data.columns[j]!r}: constant column")
    # integer ceil avoids float rounding in k*n/K
    pos = [-(-k * n // K) for k in range(1, K + 1)]
    breakpoints = np.unique(np.concatenate([[x[0]], x[np.array(pos) - 1]]))
    bins = np.clip(np.searchsorted(breakpoints, data.values[:, j], side="left"), 1, breakpoints.size - 1)
    counts = np.bincount(bins - 1, minlength=breakpoints.size - 1)
    breakpoints.setflags(write=False)
    counts.setflags(write=False)
    return QuantilePartition(j, breakpoints, counts)


def locate_bin(p: QuantilePartition, x: float) -> int:
    """1-based bin holding ``x``; values outside the range clamp to the end bins."""
    return int(p.locate(x))


def cell_indices(data: Dataset, partitions: Sequence[QuantilePartition]) -> np.ndarray:
    """0-based per-axis cell index of every row, shape ``(n, |J|)``."""
    return np.stack([p.locate(data.values[:, p.feature]) - 1 for p in partitions], axis=1)


def joint_count_array(data: Dataset, partitions: Sequence[QuantilePartition]) -> np.ndarray:
    """Dense joint counts; entry ``[k1-1, ..., kJ-1]`` counts cell ``(k1, ..., kJ)``."""
    if len(partitions) < 1:
        raise DataError("need at least one partition")
    shape = tuple(p.K for p in partitions)
    flat = np.ravel_multi_index(tuple(cell_indices(data, partitions).T), shape)
    return np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape)


def joint_cell_counts(
    data: Dataset, partitions: Sequence[QuantilePartition]
) -> dict[tuple[int, ...], int]:
    """Nonzero joint cell counts keyed by 1-based cell index tuples."""
    counts = joint_count_array(data, partitions)
    return {tuple(int(k) + 1 for k in idx): int(counts[idx]) for idx in zip(*np.nonzero(counts))}
