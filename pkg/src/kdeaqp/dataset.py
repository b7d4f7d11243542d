"""Loading numeric sample data from CSV.

A :class:`Dataset` stores samples column-wise: ``data[i, j]`` is dimension
``i`` of sample ``j``.  CSV files are row-per-record, so they are transposed
on load.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DataError,
    DimensionMismatchError,
    EmptyInputError,
    NonNumericCellError,
    RaggedRowsError,
)

MAX_DIM = 16


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable ``d x n`` sample matrix in C (row-major) order."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, order="C", copy=True)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise DataError(f"dataset must be 2-d (d x n), got shape {arr.shape}")
        d, n = arr.shape
        if d < 1 or n < 1:
            raise EmptyInputError(f"dataset must have d >= 1 and n >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DataError("dataset contains NaN or infinite values")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_samples(cls, samples) -> "Dataset":
        """Build from an ``(n, d)`` array of records (one sample per row)."""
        arr = np.asarray(samples, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        return cls(arr.T)

    @property
    def d(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    def samples(self) -> np.ndarray:
        """Return an ``(n, d)`` view, one sample per row."""
        return self.data.T

    def column(self, j: int) -> np.ndarray:
        return self.data[:, j]

    def select(self, dims) -> "Dataset":
        """Sub-dataset restricted to the given dimension indices."""
        dims = list(dims)
        for i in dims:
            if not 0 <= i < self.d:
                raise DimensionMismatchError(f"column {i} out of range for d={self.d}")
        return Dataset(self.data[dims, :])

    def scaled(self, c: float) -> "Dataset":
        return Dataset(self.data * c)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))

    def __hash__(self):
        return hash((self.data.shape, self.data.tobytes()))

    def __repr__(self):
        return f"Dataset(d={self.d}, n={self.n})"


def _parse_cell(text: str, row: int, col: int) -> float:
    s = text.strip()
    # float() also accepts things like "1_000", "nan", "infinity"; reject them
    if not s or "_" in s:
        raise NonNumericCellError(row, col, text)
    try:
        value = float(s)
    except ValueError:
        raise NonNumericCellError(row, col, text) from None
    if not math.isfinite(value):
        raise NonNumericCellError(row, col, text)
    return value


def load_csv(path, has_header: bool = False, delimiter: str = ",") -> Dataset:
    """Read a CSV file of numeric records into a :class:`Dataset`.

    Each CSV row is one sample and each CSV column one dimension.  Blank
    lines are skipped.  Row and column numbers in error messages are
    1-based and count physical file lines.

    Raises
    ------
    FileNotFoundError
        If ``path`` does not exist.
    RaggedRowsError, NonNumericCellError, EmptyInputError
        On malformed content.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    rows = []
    width = None
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for lineno, fields in enumerate(reader, start=1):
            if has_header and lineno == 1:
                continue
            if not fields or all(not f.strip() for f in fields):
                continue
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise RaggedRowsError(lineno, width, len(fields))
            rows.append([_parse_cell(f, lineno, c) for c, f in enumerate(fields, start=1)])
    if not rows:
        raise EmptyInputError(f"{path}: no data rows")
    return Dataset.from_samples(np.array(rows, dtype=np.float64))


def write_csv(dataset: Dataset, path, header=None, delimiter: str = ",") -> None:
    """Write ``dataset`` as one record per line; ``repr`` keeps floats exact."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        if header is not None:
            writer.writerow(header)
        for sample in dataset.samples():
            writer.writerow([repr(float(v)) for v in sample])
