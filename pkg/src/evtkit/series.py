"""Time-indexed tables of responses and covariates, and CSV ingestion."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from evtkit.errors import IngestError, SchemaError

META_PREFIX = "# evtkit-meta:"


@dataclass
class Series:
    """A table of one or more responses plus covariates, in time order.

    Missing values are NaN in ``frame``; ``meta`` carries calendar settings
    and, for synthetic data, the generating truth.
    """

    frame: pd.DataFrame
    response: str = "y"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frame = self.frame.reset_index(drop=True)

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def n(self) -> int:
        return len(self.frame)

    @property
    def missing(self) -> pd.DataFrame:
        return self.frame.isna()

    def column(self, name: str) -> np.ndarray:
        if name not in self.frame.columns:
            raise SchemaError(f"unknown column {name!r}; have {list(self.frame.columns)}")
        return self.frame[name].to_numpy(dtype=float)

    @property
    def y(self) -> np.ndarray:
        return self.column(self.response)

    def check_columns(self, names) -> None:
        unknown = [c for c in names if c not in self.frame.columns]
        if unknown:
            raise SchemaError(f"unknown columns {unknown}; have {list(self.frame.columns)}")

    def complete_cases(self, columns) -> tuple["Series", float]:
        """Drop rows with any of ``columns`` missing; return the drop fraction.

        Only the listed columns matter, so a row missing an unused covariate
        is kept.
        """
        columns = list(dict.fromkeys(columns))
        self.check_columns(columns)
        keep = ~self.frame[columns].isna().any(axis=1).to_numpy()
        dropped = 1.0 - keep.mean() if len(keep) else 0.0
        return self.take(np.flatnonzero(keep)), float(dropped)

    def take(self, indices) -> "Series":
        return Series(self.frame.iloc[np.asarray(indices)].copy(), self.response, dict(self.meta))

    def with_response(self, values) -> "Series":
        frame = self.frame.copy()
        frame[self.response] = np.asarray(values, dtype=float)
        return Series(frame, self.response, dict(self.meta))

    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            if self.meta:
                fh.write(META_PREFIX + " " + json.dumps(self.meta, sort_keys=True, default=_json_default) + "\n")
            self.frame.to_csv(fh, index=False, na_rep="NA", float_format="%.17g")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj)}")


def add_calendar(frame: pd.DataFrame, days_per_year: int = 300, days_per_month: int = 25) -> pd.DataFrame:
    """Add ``year``, ``month``, ``day`` and ``season`` columns from row order.

    Months 1-6 form season 1 and months 7-12 season 2. Existing columns of
    the same name are left untouched.
    """
    frame = frame.copy()
    t = np.arange(len(frame))
    months_per_year = days_per_year // days_per_month
    year = t // days_per_year + 1
    day_of_year = t % days_per_year
    month = day_of_year // days_per_month + 1
    derived = {
        "year": year,
        "month": month,
        "day": day_of_year % days_per_month + 1,
        "season": np.where(month <= months_per_year // 2, 1, 2),
    }
    for name, values in derived.items():
        if name not in frame.columns:
            frame[name] = values
    return frame


def ingest_csv(
    path,
    response: str = "y",
    calendar: bool = True,
    days_per_year: int = 300,
    days_per_month: int = 25,
) -> Series:
    """Read a CSV with a header row into a :class:`Series`.

    ``NA`` and empty fields are missing. Rows with the wrong number of
    fields raise :class:`IngestError` naming the line. A leading
    ``# evtkit-meta: {...}`` line is parsed into ``Series.meta``.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    meta = {}
    skip = 0
    while skip < len(lines) and lines[skip].startswith("#"):
        if lines[skip].startswith(META_PREFIX):
            meta = json.loads(lines[skip][len(META_PREFIX):])
        skip += 1
    body = lines[skip:]
    if not body or not body[0].strip():
        raise IngestError(f"{path}: empty file or missing header row")

    reader = csv.reader(body)
    header = next(reader)
    width = len(header)
    for offset, row in enumerate(reader, start=2):
        if row and len(row) != width:
            raise IngestError(f"{path}: line {offset + skip} has {len(row)} fields, expected {width}")

    frame = pd.read_csv(path, skiprows=skip, na_values=["NA", ""], keep_default_na=False)
    for col in frame.columns:
        if frame[col].dtype == object:
            converted = pd.to_numeric(frame[col], errors="coerce")
            bad = converted.isna() & frame[col].notna()
            if bad.any():
                line = int(np.flatnonzero(bad.to_numpy())[0]) + 2 + skip
                raise IngestError(f"{path}: non-numeric value {frame[col][bad].iloc[0]!r} in column {col!r} at line {line}")
            frame[col] = converted
    if calendar:
        meta.setdefault("calendar", {"days_per_year": days_per_year, "days_per_month": days_per_month})
        frame = add_calendar(frame, days_per_year, days_per_month)
    return Series(frame, response, meta)
