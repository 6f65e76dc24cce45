"""CSV ingestion and write-back for sample matrices."""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import ParseError
from .kernels import SampleSet


@dataclass(frozen=True)
class CsvTable:
    """A parsed CSV file: samples plus the raw cells needed to write rows back verbatim."""

    samples: SampleSet
    header: Optional[list]
    rows: list
    label_index: Optional[int]
    path: str


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _label_index(label_column: Union[str, int, None], header: Optional[list], width: int) -> Optional[int]:
    if label_column is None:
        return None
    if isinstance(label_column, int) or str(label_column).lstrip("-").isdigit():
        idx = int(label_column)
        idx = idx + width if idx < 0 else idx
        if not 0 <= idx < width:
            raise ParseError(f"label column index {label_column} out of range for {width} columns")
        return idx
    if header is None or label_column not in header:
        raise ParseError(f"label column {label_column!r} not found in header {header}")
    return header.index(label_column)


def load_csv(path, has_header: Optional[bool] = None, label_column: Union[str, int, None] = None) -> CsvTable:
    """Read a rectangular numeric CSV file.

    ``has_header=None`` treats the first row as a header when any of its cells is
    not a number. Errors name the offending row (1-based, as in the file) and
    column.
    """
    path = str(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            raw, lines = [], []
            for row in reader:
                if row and any(c.strip() for c in row):
                    raw.append(row)
                    lines.append(reader.line_num)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except (UnicodeDecodeError, csv.Error) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not raw:
        raise ParseError(f"{path}: no data rows")
    if has_header is None:
        has_header = not all(_is_number(c.strip()) for c in raw[0])
    header = [c.strip() for c in raw[0]] if has_header else None
    body = raw[1:] if has_header else raw
    lines = lines[1:] if has_header else lines
    if not body:
        raise ParseError(f"{path}: no data rows")
    width = len(header) if header is not None else len(body[0])
    lab = _label_index(label_column, header, width)

    values = np.empty((len(body), width - (lab is not None)))
    labels = np.empty(len(body), dtype=np.int64) if lab is not None else None
    for i, row in enumerate(body):
        line = lines[i]
        if len(row) != width:
            raise ParseError(f"{path}: row {line} has {len(row)} cells, expected {width}")
        j_out = 0
        for j, cell in enumerate(row):
            name = header[j] if header else f"#{j}"
            try:
                v = float(cell.strip())
            except ValueError:
                raise ParseError(f"{path}: row {line}, column {name}: non-numeric cell {cell!r}") from None
            if not math.isfinite(v):
                raise ParseError(f"{path}: row {line}, column {name}: non-finite value {cell!r}")
            if j == lab:
                if v != int(v):
                    raise ParseError(f"{path}: row {line}, column {name}: label {cell!r} is not an integer")
                labels[i] = int(v)
            else:
                values[i, j_out] = v
                j_out += 1
    if values.shape[1] == 0:
        raise ParseError(f"{path}: no feature columns")
    return CsvTable(SampleSet(values, labels), header, body, lab, path)


def write_rows(table: CsvTable, rows, path) -> None:
    """Write the selected original rows (raw cells, same header) to ``path``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if table.header is not None:
            writer.writerow(table.header)
        for i in rows:
            writer.writerow(table.rows[int(i)])


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
