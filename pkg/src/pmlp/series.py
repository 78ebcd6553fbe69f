"""Loading, lag-embedding and splitting of univariate time series.

A series file is UTF-8 text with one numeric value per line (`.` decimal
point, scientific notation accepted, `\\n` or `\\r\\n` terminators) and an
optional single header line holding a label. Values are consumed raw:
no normalization, detrending or gap filling happens anywhere in the
pipeline, so the evaluation metrics absorb the physical scale instead.

Splits are always chronological. Forecast evaluation has to be
out-of-sample in time, so the test window is the block of rows that
immediately follows the training window, never a shuffle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, ValidationError

__all__ = [
    "SeriesFrame",
    "LagDataset",
    "SplitSpec",
    "load_series",
    "embed_lags",
    "split",
]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SeriesFrame:
    """A univariate series in time-ascending order, plus provenance.

    Values are stored as a read-only float array; instances are safe to
    share between threads.
    """

    values: np.ndarray
    name: str
    source_path: str = ""

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValidationError("series values must be one-dimensional")
        if values.size == 0:
            raise ValidationError("series must contain at least one value")
        if not np.all(np.isfinite(values)):
            raise ValidationError("series values must all be finite")
        object.__setattr__(self, "values", _frozen(values.copy()))

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class LagDataset:
    """Supervised one-step-ahead pairs.

    Row t of `inputs` holds the p most recent past values for target
    `targets[t]`, most recent first: [x_{t-1}, x_{t-2}, ..., x_{t-p}].
    The container is also used for generic regression pairs (synthetic
    teacher data in tests), so only shape and finiteness are enforced
    here; the lag structure is the contract of `embed_lags`.
    """

    inputs: np.ndarray
    targets: np.ndarray
    p: int

    def __post_init__(self) -> None:
        inputs = np.asarray(self.inputs, dtype=float)
        targets = np.asarray(self.targets, dtype=float)
        if inputs.ndim != 2:
            raise ValidationError("inputs must be a 2-d matrix")
        if targets.ndim != 1:
            raise ValidationError("targets must be a 1-d vector")
        if inputs.shape[0] != targets.size:
            raise ValidationError(
                f"row count mismatch: {inputs.shape[0]} input rows vs "
                f"{targets.size} targets"
            )
        if inputs.shape[0] == 0:
            raise ValidationError("dataset must contain at least one row")
        if self.p != inputs.shape[1]:
            raise ValidationError(
                f"p={self.p} does not match input width {inputs.shape[1]}"
            )
        if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(targets))):
            raise ValidationError("dataset values must all be finite")
        object.__setattr__(self, "inputs", _frozen(inputs.copy()))
        object.__setattr__(self, "targets", _frozen(targets.copy()))

    @property
    def n(self) -> int:
        return int(self.targets.size)

    def take(self, rows) -> "LagDataset":
        """Return a new dataset holding the given rows (indices or slice)."""
        return LagDataset(self.inputs[rows], self.targets[rows], self.p)


@dataclass(frozen=True)
class SplitSpec:
    """Chronological train/test window sizes."""

    n_train: int
    n_test: int

    def __post_init__(self) -> None:
        if self.n_train < 1:
            raise ValidationError("n_train must be >= 1")
        if self.n_test < 1:
            raise ValidationError("n_test must be >= 1")


def _parse_number(token: str) -> float | None:
    try:
        return float(token)
    except ValueError:
        return None


def load_series(path: str | Path) -> SeriesFrame:
    """Parse a one-value-per-line series file.

    The first line is auto-detected as a header: if it does not parse as
    a number it becomes the series name, otherwise the file is headerless
    and the name defaults to the file stem. Parsing is locale-independent
    (decimal point only). NaN/Inf literals are rejected.

    Raises
    ------
    FileNotFoundError
        If `path` does not exist.
    DataFormatError
        For empty files, undecodable bytes, non-numeric body lines
        (reported with their 1-based line number) and non-finite literals.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"series file not found: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"{path}: not valid UTF-8 ({exc})") from exc
    lines = text.splitlines()
    if not lines:
        raise DataFormatError(f"{path}: file is empty")

    name = path.stem
    first_value = 0
    if _parse_number(lines[0].strip()) is None:
        name = lines[0].strip()
        first_value = 1
        if not name:
            raise DataFormatError(f"{path}: line 1: blank header line")

    values = []
    for i in range(first_value, len(lines)):
        token = lines[i].strip()
        x = _parse_number(token)
        if x is None:
            raise DataFormatError(f"{path}: line {i + 1}: not a number: {token!r}")
        if not math.isfinite(x):
            raise DataFormatError(
                f"{path}: line {i + 1}: non-finite value {token!r} not admitted"
            )
        values.append(x)
    if not values:
        raise DataFormatError(f"{path}: no data values")
    return SeriesFrame(np.array(values), name=name, source_path=str(path))


def embed_lags(series: SeriesFrame, p: int) -> LagDataset:
    """Build the p-lag supervised dataset of a series.

    For every target x_t (t = p .. len-1) the input row is
    [x_{t-1}, ..., x_{t-p}], so the dataset has len(series) - p rows.
    """
    if p < 1:
        raise ValidationError("lag count p must be >= 1")
    v = series.values
    if v.size <= p:
        raise ValidationError(
            f"series too short for p={p}: length {v.size} (need > p)"
        )
    columns = [v[p - 1 - j : v.size - 1 - j] for j in range(p)]
    inputs = np.stack(columns, axis=1)
    return LagDataset(inputs, v[p:], p)


def split(ds: LagDataset, spec: SplitSpec) -> tuple[LagDataset, LagDataset]:
    """Chronological split: first n_train rows, then the next n_test rows."""
    if spec.n_train + spec.n_test > ds.n:
        raise ValidationError(
            f"split ({spec.n_train}+{spec.n_test}) exceeds dataset size {ds.n}"
        )
    train = ds.take(slice(0, spec.n_train))
    test = ds.take(slice(spec.n_train, spec.n_train + spec.n_test))
    return train, test
