"""CSV ingestion, output writers and the run manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from datetime import date, datetime
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .core import (
    Decomposition,
    DuplicateDate,
    NonFiniteValue,
    ParseError,
    TimeSeries,
    log_transform,
    validate_series,
)

log = logging.getLogger(__name__)


def parse_date(text: str):
    text = text.strip()
    try:
        return date.fromisoformat(text)
    except ValueError:
        return datetime.fromisoformat(text)


def format_date(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (date, datetime)):
        return value.isoformat()
    return str(value)


def fmt(value) -> str:
    """17 significant digits: floats survive a write/read round trip."""
    return format(float(value), ".17g")


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def read_rows(path, column: str, date_column: str):
    """``(date, value)`` pairs in file order. Raises ParseError with line numbers."""
    path = Path(path)
    pairs = []
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError(f"{path}: empty file")
        missing = [c for c in (date_column, column) if c not in reader.fieldnames]
        if missing:
            raise ParseError(f"{path}: line 1: missing column(s) {', '.join(missing)}")
        for row in reader:
            line = reader.line_num
            raw_date, raw_value = row.get(date_column), row.get(column)
            if raw_date is None or raw_value is None:
                raise ParseError(f"{path}: line {line}: too few fields")
            try:
                stamp = parse_date(raw_date)
            except ValueError:
                raise ParseError(f"{path}: line {line}: bad date {raw_date!r}") from None
            try:
                value = float(raw_value)
            except ValueError:
                raise ParseError(f"{path}: line {line}: bad number {raw_value!r}") from None
            if not np.isfinite(value):
                raise NonFiniteValue(f"{path}: line {line}: non-finite value {raw_value!r}")
            pairs.append((stamp, value))
    return pairs


def ingest(path, column: str = "close", date_column: str = "date", log_flag: bool = True) -> TimeSeries:
    """Read one dated numeric column, sort by date and optionally take logs."""
    pairs = read_rows(path, column, date_column)
    pairs.sort(key=lambda p: p[0])
    for (d0, _), (d1, _) in zip(pairs, pairs[1:]):
        if d0 == d1:
            raise DuplicateDate(f"{path}: duplicate date {format_date(d1)}")
    series = validate_series(pairs, label=Path(path).stem, min_length=1)
    if log_flag:
        series = log_transform(series)
    if series.dates:
        log.info(
            "%s: %d rows, %s to %s",
            path,
            len(series),
            format_date(series.dates[0]),
            format_date(series.dates[-1]),
        )
    return series


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def date_labels(series: TimeSeries):
    if series.dates is not None:
        return [format_date(d) for d in series.dates]
    return [str(i) for i in range(len(series))]


def write_imfs(path, d: Decomposition) -> None:
    n = d.n_imfs
    header = ["date", "x"] + [f"c_{j + 1}" for j in range(n)] + ["residual"]
    labels = date_labels(d.source)
    x = d.source.values
    rows = (
        [labels[t], float(x[t])] + [float(v) for v in d.imfs[:, t]] + [float(d.residual[t])]
        for t in range(x.size)
    )
    write_csv(path, header, rows)


def read_imfs(path, label: Optional[str] = None) -> Decomposition:
    """Load a decomposition written by :func:`write_imfs`."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["date", "x"] or header[-1] != "residual":
            raise ParseError(f"{path}: line 1: not an imfs.csv header")
        dates, rows = [], []
        for row in reader:
            if len(row) != len(header):
                raise ParseError(f"{path}: line {reader.line_num}: expected {len(header)} fields")
            try:
                dates.append(parse_date(row[0]))
                rows.append([float(v) for v in row[1:]])
            except ValueError:
                raise ParseError(f"{path}: line {reader.line_num}: malformed row") from None
    data = np.array(rows, dtype=np.float64).reshape(len(rows), len(header) - 1)
    series = TimeSeries(
        data[:, 0],
        start_time=dates[0] if dates else None,
        label=label or path.parent.name,
        dates=tuple(dates),
    )
    return Decomposition(
        source=series,
        imfs=data[:, 1:-1].T,
        residual=data[:, -1],
        method="FILE",
    )


def manifest(command: str, options: dict, inputs: Sequence, config: Optional[dict] = None) -> dict:
    """Run record. Deliberately free of wall-clock times and absolute paths."""
    records = []
    for path, series in inputs:
        records.append(
            {
                "name": Path(path).name,
                "sha256": file_digest(path),
                "rows": len(series) if series is not None else None,
                "first_date": format_date(series.dates[0]) if series is not None and series.dates else None,
                "last_date": format_date(series.dates[-1]) if series is not None and series.dates else None,
            }
        )
    return {
        "tool": "acemd",
        "version": __version__,
        "command": command,
        "options": options,
        "config": config,
        "seed": None if config is None else config.get("seed"),
        "inputs": records,
    }
