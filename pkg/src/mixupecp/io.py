"""CSV ingestion and deterministic report writing.

Accepted CSV layouts, chosen by the header row:

* ``t, value``: a single series.
* ``year, doy, value``: one daily index series per year (onset data).
* ``year, onset_doy``: ground-truth onset day per year.

Extra columns are ignored. Blank lines are skipped.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embedding import TimeSeries
from .errors import DataError, ParseError, SchemaError

MIN_DAYS_PER_YEAR = 180

SERIES_COLUMNS = ("t", "value")
DATASET_COLUMNS = ("year", "doy", "value")
TRUTH_COLUMNS = ("year", "onset_doy")


@dataclass(frozen=True)
class YearSeries:
    """Daily index values of one year keyed by day of year."""

    year: int
    doy: np.ndarray
    values: np.ndarray

    def index_of(self, day: float) -> int:
        """Position of the first sample on or after ``day``."""
        return int(np.searchsorted(self.doy, day, side="left"))

    def series(self) -> TimeSeries:
        return TimeSeries(self.values, self.doy)


@dataclass(frozen=True)
class OnsetDataset:
    """Per-year index series with optional ground-truth onset days."""

    years: tuple
    series: dict
    truth: dict | None = None

    def __post_init__(self):
        for y in self.years:
            if len(self.series[y].values) < MIN_DAYS_PER_YEAR:
                raise DataError(f"year {y} has {len(self.series[y].values)} values, "
                                f"need at least {MIN_DAYS_PER_YEAR}")
        if self.truth is not None:
            missing = sorted(set(self.years) ^ set(self.truth))
            if missing:
                raise DataError("years differ between index series and ground truth: "
                                + ", ".join(str(y) for y in missing))

    def __len__(self) -> int:
        return len(self.years)

    def with_truth(self, truth: dict) -> "OnsetDataset":
        return OnsetDataset(self.years, self.series, {int(k): float(v) for k, v in truth.items()})


@dataclass(frozen=True)
class GroundTruth:
    """Onset day of year per year."""

    onsets: dict = field(default_factory=dict)


def _read_rows(path):
    p = Path(path)
    if not p.is_file():
        raise DataError(f"input file not found: {p}")
    with p.open(newline="") as fh:
        reader = csv.reader(fh)
        header, rows = None, []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if header is None:
                header = [c.strip().lower() for c in row]
                continue
            rows.append((reader.line_num, row))
    if header is None:
        raise ParseError("file is empty; expected a header row", line=1)
    return header, rows


def _columns(header, rows, names):
    missing = [c for c in names if c not in header]
    if missing:
        raise SchemaError(missing)
    pos = [header.index(c) for c in names]
    out = []
    for line, row in rows:
        vals = []
        for name, j in zip(names, pos):
            cell = row[j].strip() if j < len(row) else ""
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"column {name!r}: cannot read {cell!r} as a number", line=line) from None
            if not math.isfinite(v):
                raise ParseError(f"column {name!r}: value {cell!r} is not finite", line=line)
            vals.append(v)
        out.append((line, vals))
    return out


def _as_int(v: float, name: str, line: int) -> int:
    if v != int(v):
        raise ParseError(f"column {name!r}: {v!r} is not an integer", line=line)
    return int(v)


def ingest_csv(path):
    """Read a series, an onset dataset or a ground-truth table.

    Raises
    ------
    ParseError
        For unreadable cells, with the 1-based file line number.
    SchemaError
        When the header matches none of the layouts; the message names the
        columns of the closest layout that are missing.
    """
    header, rows = _read_rows(path)
    if set(TRUTH_COLUMNS) <= set(header):
        table = _columns(header, rows, TRUTH_COLUMNS)
        onsets = {}
        for line, (y, day) in table:
            y = _as_int(y, "year", line)
            if y in onsets:
                raise ParseError(f"year {y} appears twice", line=line)
            onsets[y] = day
        return GroundTruth(onsets)
    if "year" in header:
        table = _columns(header, rows, DATASET_COLUMNS)
        per_year: dict = {}
        for line, (y, day, v) in table:
            per_year.setdefault(_as_int(y, "year", line), []).append((day, v, line))
        series = {}
        for y, items in per_year.items():
            items.sort(key=lambda r: r[0])
            days = np.array([r[0] for r in items])
            dup = np.flatnonzero(np.diff(days) == 0)
            if dup.size:
                raise ParseError(f"year {y}: day {days[dup[0]]:g} appears twice", line=items[dup[0] + 1][2])
            series[y] = YearSeries(y, days, np.array([r[1] for r in items]))
        years = tuple(sorted(series))
        if not years:
            raise ParseError("no data rows", line=2)
        return OnsetDataset(years, series)
    table = _columns(header, rows, SERIES_COLUMNS)
    if len(table) < 2:
        raise ParseError("a series needs at least two rows", line=len(rows) + 1)
    t = np.array([r[1][0] for r in table])
    bad = np.flatnonzero(np.diff(t) <= 0)
    if bad.size:
        raise ParseError("t must be strictly increasing", line=table[bad[0] + 1][0])
    return TimeSeries(np.array([r[1][1] for r in table]), t)


def load_dataset(path, truth_path=None) -> OnsetDataset:
    """Onset dataset from ``path`` with ground truth attached from ``truth_path``."""
    data = ingest_csv(path)
    if not isinstance(data, OnsetDataset):
        raise SchemaError(["year", "doy"], f"{path} is not a year-keyed dataset (need columns year, doy, value)")
    if truth_path is not None:
        truth = ingest_csv(truth_path)
        if not isinstance(truth, GroundTruth):
            raise SchemaError(["onset_doy"], f"{truth_path} is not a ground-truth table (need year, onset_doy)")
        data = data.with_truth(truth.onsets)
    return data


def format_number(v) -> str:
    """Shortest round-trip text for a number; integers print without a point."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    return str(int(f)) if f.is_integer() and abs(f) < 2**53 else repr(f)


def csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_number(c) if isinstance(c, (int, float, np.integer, np.floating)) else c for c in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(csv_text(header, rows))


def series_rows(series: TimeSeries) -> list:
    t = series.timestamps if series.timestamps is not None else np.arange(series.N)
    return list(zip(t.tolist(), series.values.tolist()))


def dataset_rows(data: OnsetDataset) -> list:
    return [(y, d, v) for y in data.years
            for d, v in zip(data.series[y].doy.tolist(), data.series[y].values.tolist())]


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def json_text(obj) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json_text(obj))
