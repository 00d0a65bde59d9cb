"""
Loading, calendar alignment and differencing of raw price series.

Input files are plain CSV: a ``date`` column in ISO-8601 form followed by one
column per series, empty cells meaning "no observation".  Lower-frequency
series (weekly inventories, monthly macro data) are carried forward onto the
daily trading calendar of the price series.
"""
from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

__all__ = [
    "IngestError",
    "RawSeries",
    "AlignedPanel",
    "TRANSFORM_TAGS",
    "load_csv",
    "daily_calendar",
    "align_daily",
    "transform",
    "write_panel",
    "read_panel",
]

TRANSFORM_TAGS = ("log_return", "log_diff", "simple_diff", "level", "asinh_diff")
FREQUENCIES = ("daily", "weekly", "monthly")


class IngestError(ValueError):
    """Raised for malformed input files or inconsistent panels."""


@dataclass(frozen=True)
class RawSeries:
    name: str
    dates: tuple[dt.date, ...]
    values: tuple[float, ...]
    native_frequency: str = "daily"

    def __post_init__(self) -> None:
        if len(self.dates) != len(self.values):
            raise IngestError(f"{self.name}: dates and values differ in length")
        if len(self.dates) < 2:
            raise IngestError(f"{self.name}: at least 2 observations required")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise IngestError(f"{self.name}: dates must be strictly increasing")
        if not all(math.isfinite(v) for v in self.values):
            raise IngestError(f"{self.name}: non-finite value")
        if self.native_frequency not in FREQUENCIES:
            raise IngestError(f"{self.name}: unknown frequency {self.native_frequency!r}")

    def __len__(self) -> int:
        return len(self.dates)

    def to_series(self) -> pd.Series:
        return pd.Series(self.values, index=pd.DatetimeIndex(self.dates), name=self.name)


@dataclass
class AlignedPanel:
    """Date-indexed matrix of series sharing one daily calendar.

    ``frame`` holds one column per series; ``tags`` records for every column
    which transform produced it (``"level"`` for untransformed data).
    """

    frame: pd.DataFrame
    tags: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.frame.index, pd.DatetimeIndex):
            self.frame = self.frame.copy()
            self.frame.index = pd.DatetimeIndex(self.frame.index)
        self.frame.index.name = "date"
        for col in self.frame.columns:
            self.tags.setdefault(col, "level")
        extra = set(self.tags) - set(self.frame.columns)
        if extra:
            raise IngestError(f"tags for unknown columns: {sorted(extra)}")
        if self.frame.isna().to_numpy().any():
            raise IngestError("panel contains missing values")

    @property
    def dates(self) -> pd.DatetimeIndex:
        return self.frame.index

    @property
    def columns(self) -> list[str]:
        return list(self.frame.columns)

    def __len__(self) -> int:
        return len(self.frame)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.frame[name].to_numpy(dtype=float)

    def select(self, columns: Sequence[str]) -> "AlignedPanel":
        missing = [c for c in columns if c not in self.frame.columns]
        if missing:
            raise IngestError(f"unknown column(s): {', '.join(missing)}")
        return AlignedPanel(self.frame[list(columns)].copy(), {c: self.tags[c] for c in columns})

    def rows(self, start: int, stop: int) -> "AlignedPanel":
        """Positional row slice ``[start, stop)``."""
        return AlignedPanel(self.frame.iloc[start:stop].copy(), dict(self.tags))


def _infer_frequency(dates: Sequence[dt.date]) -> str:
    gaps = np.diff(np.array([d.toordinal() for d in dates]))
    med = float(np.median(gaps))
    if med <= 4:
        return "daily"
    if med <= 10:
        return "weekly"
    return "monthly"


def load_csv(
    path: str | Path,
    schema: Mapping[str, str] | None = None,
    frequencies: Mapping[str, str] | None = None,
) -> list[RawSeries]:
    """Read a ``date,<col>,...`` file into one :class:`RawSeries` per column.

    Parameters
    ----------
    path : str or Path
        CSV file with a single header row.
    schema : mapping, optional
        Maps CSV column names to series names.  Only mapped columns are
        returned.  Defaults to every column under its own name.
    frequencies : mapping, optional
        Native frequency per series name; inferred from the median gap
        between observations when absent.

    Raises
    ------
    IngestError
        On an empty file, an unparseable date or number (the message names
        the 1-based data row and the column), or a mapped column that does
        not exist.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not any(cell.strip() for cell in rows[0]):
        raise IngestError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    if not body:
        raise IngestError(f"{path}: no data rows")
    if schema is None:
        schema = {h: h for h in header[1:]}
    missing = [c for c in schema if c not in header[1:]]
    if missing:
        raise IngestError(f"{path}: column(s) not found: {', '.join(missing)}")

    dates: list[dt.date] = []
    collected: dict[str, tuple[list[dt.date], list[float]]] = {c: ([], []) for c in schema}
    for i, row in enumerate(body, start=1):
        raw_date = row[0].strip() if row else ""
        try:
            day = dt.date.fromisoformat(raw_date)
        except ValueError:
            raise IngestError(
                f"{path}: row {i}, column {header[0]!r}: invalid date {raw_date!r}"
            ) from None
        dates.append(day)
        for col in schema:
            j = header.index(col)
            cell = row[j].strip() if j < len(row) else ""
            if not cell:
                continue
            try:
                value = float(cell)
            except ValueError:
                raise IngestError(
                    f"{path}: row {i}, column {col!r}: invalid number {cell!r}"
                ) from None
            if not math.isfinite(value):
                raise IngestError(f"{path}: row {i}, column {col!r}: non-finite value")
            collected[col][0].append(day)
            collected[col][1].append(value)

    out = []
    for col, name in schema.items():
        ds, vs = collected[col]
        freq = (frequencies or {}).get(name)
        if freq is None:
            freq = _infer_frequency(ds) if len(ds) >= 2 else "daily"
        out.append(RawSeries(name, tuple(ds), tuple(vs), freq))
    return out


def daily_calendar(series: Iterable[RawSeries]) -> pd.DatetimeIndex:
    """Union of observed dates of the highest-frequency series."""
    series = list(series)
    if not series:
        raise IngestError("no series given")
    rank = {f: i for i, f in enumerate(FREQUENCIES)}
    best = min(rank[s.native_frequency] for s in series)
    days: set[dt.date] = set()
    for s in series:
        if rank[s.native_frequency] == best:
            days.update(s.dates)
    return pd.DatetimeIndex(sorted(days))


def align_daily(series: Sequence[RawSeries], calendar: Sequence | None = None) -> AlignedPanel:
    """Carry every series forward onto ``calendar`` and trim leading gaps.

    The panel starts at the latest first-observation date among the series,
    so every column is populated from the first row on.
    """
    if calendar is None:
        calendar = daily_calendar(series)
    cal = pd.DatetimeIndex(calendar)
    if len(cal) == 0:
        raise IngestError("calendar is empty")
    cal = cal.sort_values().unique()
    columns = {}
    for s in series:
        ser = s.to_series()
        if ser.index[0] > cal[-1] or ser.index[-1] < cal[0]:
            raise IngestError(f"{s.name}: observations do not overlap the calendar")
        columns[s.name] = ser.reindex(ser.index.union(cal)).ffill().reindex(cal)
    frame = pd.DataFrame(columns, index=cal)
    frame = frame.dropna(how="any")
    if frame.empty:
        raise IngestError("no calendar day on which every series is observed")
    # ffill only leaves NaN at the head, so dropna == trimming leading days
    return AlignedPanel(frame, {s.name: "level" for s in series})


def transform(
    panel: AlignedPanel,
    tags: Mapping[str, str],
    nonpositive: str = "reject",
) -> AlignedPanel:
    """First-difference each column according to its tag.

    ``log_return``/``log_diff`` give ``ln x_t - ln x_{t-1}``, ``simple_diff``
    gives ``x_t - x_{t-1}`` and ``level`` keeps the value.  The result is one
    row shorter than the input.

    Log transforms need strictly positive levels.  With
    ``nonpositive="arcsinh"`` an offending column is differenced on the
    inverse hyperbolic sine scale instead and tagged ``asinh_diff``; the
    default raises :class:`IngestError` naming the first bad date.
    """
    if nonpositive not in ("reject", "arcsinh"):
        raise ValueError("nonpositive must be 'reject' or 'arcsinh'")
    if len(panel) < 2:
        raise IngestError("need at least two rows to difference")
    out = {}
    out_tags = {}
    for col in panel.columns:
        tag = tags.get(col, panel.tags.get(col, "level"))
        if tag not in TRANSFORM_TAGS:
            raise IngestError(f"{col}: unknown transform tag {tag!r}")
        x = panel[col]
        if tag in ("log_return", "log_diff"):
            bad = np.flatnonzero(x <= 0)
            if bad.size:
                if nonpositive == "reject":
                    day = panel.dates[bad[0]].date().isoformat()
                    raise IngestError(
                        f"{col}: nonpositive level {x[bad[0]]!r} on {day} under {tag}"
                    )
                tag = "asinh_diff"
            else:
                lx = np.log(x)
                out[col] = lx[1:] - lx[:-1]
        if tag == "asinh_diff":
            ax = np.arcsinh(x)
            out[col] = ax[1:] - ax[:-1]
        elif tag == "simple_diff":
            out[col] = x[1:] - x[:-1]
        elif tag == "level":
            out[col] = x[1:].copy()
        out_tags[col] = tag
    frame = pd.DataFrame(out, index=panel.dates[1:], columns=panel.columns)
    return AlignedPanel(frame, out_tags)


def write_panel(panel: AlignedPanel, path: str | Path) -> Path:
    """Write the panel CSV plus a ``<stem>.manifest.json`` with the tags."""
    path = Path(path)
    frame = panel.frame.copy()
    frame.index = frame.index.strftime("%Y-%m-%d")
    frame.to_csv(path, index_label="date", float_format=None, lineterminator="\n")
    manifest = path.with_suffix(".manifest.json")
    manifest.write_text(
        json.dumps({"columns": panel.columns, "transform_tags": panel.tags}, indent=2, sort_keys=True)
        + "\n"
    )
    return manifest


def read_panel(path: str | Path) -> AlignedPanel:
    path = Path(path)
    frame = pd.read_csv(path, index_col=0, parse_dates=True, float_precision="round_trip")
    manifest = path.with_suffix(".manifest.json")
    tags = {}
    if manifest.exists():
        tags = json.loads(manifest.read_text())["transform_tags"]
    return AlignedPanel(frame.astype(float), dict(tags))
