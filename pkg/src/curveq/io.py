"""Delimited-text input and output.

Datasets are UTF-8 CSV files with a ``group,dose,response`` header (extra
columns are ignored) and exactly two distinct group labels.  Groups are
numbered in order of first appearance.  Floats are written with ``repr``
so a written file reads back bit-for-bit.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

from curveq.errors import DataFormatError
from curveq.fitting import GroupDataset
from curveq.similarity import BandResult

__all__ = [
    "REQUIRED_COLUMNS",
    "BAND_COLUMNS",
    "ingest_dataset",
    "parse_dataset",
    "dataset_csv",
    "write_dataset",
    "band_csv",
    "write_band_csv",
]

REQUIRED_COLUMNS = ("group", "dose", "response")
BAND_COLUMNS = ("dose", "diff", "lower", "upper")


def _number(cell: str, column: str, line: int) -> float:
    try:
        x = float(cell)
    except ValueError:
        raise DataFormatError(f"non-numeric {column} value {cell!r}", line) from None
    if not math.isfinite(x):
        raise DataFormatError(f"{column} value {cell!r} is not finite", line)
    return x


def parse_dataset(text: str) -> tuple[GroupDataset, GroupDataset]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError("empty file", 1) from None
    names = [h.strip().lower() for h in header]
    missing = [c for c in REQUIRED_COLUMNS if c not in names]
    if missing:
        raise DataFormatError(f"missing column(s) {', '.join(missing)}; header is {header}", 1)
    gi, di, ri = (names.index(c) for c in REQUIRED_COLUMNS)
    width = max(gi, di, ri) + 1

    rows: dict[str, tuple[list, list]] = {}
    for line, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < width:
            raise DataFormatError(f"expected at least {width} fields, found {len(row)}", line)
        label = row[gi].strip()
        if not label:
            raise DataFormatError("empty group label", line)
        if label not in rows:
            if len(rows) == 2:
                raise DataFormatError(
                    f"third group {label!r}; exactly two groups are supported ({', '.join(rows)})", line
                )
            rows[label] = ([], [])
        rows[label][0].append(_number(row[di].strip(), "dose", line))
        rows[label][1].append(_number(row[ri].strip(), "response", line))
    if len(rows) < 2:
        found = ", ".join(rows) or "none"
        raise DataFormatError(f"need exactly two groups, found {len(rows)} ({found})")
    return tuple(GroupDataset.from_long(d, y, label) for label, (d, y) in rows.items())


def ingest_dataset(path: str | Path) -> tuple[GroupDataset, GroupDataset]:
    """Read a two-group dataset; errors carry the offending line number."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from None
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"{path} is not UTF-8: {exc}") from None
    return parse_dataset(text)


def dataset_csv(ds1: GroupDataset, ds2: GroupDataset) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(REQUIRED_COLUMNS)
    for i, ds in enumerate((ds1, ds2), start=1):
        label = ds.label or f"group{i}"
        for d, ys in zip(ds.dose_levels, ds.responses):
            for y in ys:
                w.writerow((label, repr(float(d)), repr(float(y))))
    return out.getvalue()


def write_dataset(path: str | Path, ds1: GroupDataset, ds2: GroupDataset) -> None:
    if (ds1.label or "group1") == (ds2.label or "group2"):
        raise DataFormatError("the two groups need different labels")
    Path(path).write_text(dataset_csv(ds1, ds2), encoding="utf-8")


def band_csv(band: BandResult) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(BAND_COLUMNS)
    for row in band.rows():
        w.writerow(tuple(repr(float(x)) for x in row))
    return out.getvalue()


def write_band_csv(path: str | Path, band: BandResult) -> None:
    Path(path).write_text(band_csv(band), encoding="utf-8")
