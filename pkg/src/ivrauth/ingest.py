"""CSV call-log interchange format.

Layout: a header of credential names followed by the literal `is_fraud`
column, then one row per call. Cells are "1" (pass), "0" (fail) or empty
(missing); the label is "0"/"1". UTF-8, comma-separated, no quoting (values
are restricted so none is needed). Empty string encodes Missing because that
is how common CSV exporters write nulls and it is locale-proof.

The parser never coerces: any malformed cell or ragged row is a hard error
carrying its 1-based line number.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import TextIO

import numpy as np

from .errors import CsvFormatError
from .model import LABEL_COLUMN, Dataset, validate_schema

_CELL_CODE = {"1": 1, "0": 0, "": 2}
_CODE_CELL = {1: "1", 0: "0", 2: ""}


def load_csv(path: str | Path) -> Dataset:
    """Parse a call-log CSV into a Dataset.

    The schema is the header's credential columns in file order; the last
    column must be `is_fraud`.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return read_csv(fh)


def read_csv(fh: TextIO) -> Dataset:
    text = fh.read()
    lines = text.split("\n")
    # Tolerate a single trailing newline and CRLF endings; nothing else.
    if lines and lines[-1] == "":
        lines.pop()
    lines = [line[:-1] if line.endswith("\r") else line for line in lines]
    if not lines:
        raise CsvFormatError("empty file: header row required")
    header = lines[0].split(",")
    if header[-1] != LABEL_COLUMN:
        raise CsvFormatError(
            f"missing {LABEL_COLUMN} column: last header column is {header[-1]!r}", line=1
        )
    try:
        schema = validate_schema(header[:-1])
    except Exception as exc:
        raise CsvFormatError(f"bad header: {exc}", line=1) from exc
    width = len(header)

    n_rows = len(lines) - 1
    codes = np.empty((n_rows, len(schema)), dtype=np.int8)
    fraud = np.empty(n_rows, dtype=bool)
    for r, line in enumerate(lines[1:]):
        lineno = r + 2
        cells = line.split(",")
        if len(cells) != width:
            raise CsvFormatError(
                f"ragged row: expected {width} cells, got {len(cells)}", line=lineno
            )
        for c, cell in enumerate(cells[:-1]):
            try:
                codes[r, c] = _CELL_CODE[cell]
            except KeyError:
                raise CsvFormatError(
                    f"bad outcome {cell!r} in column {schema[c]!r} "
                    "(expected '1', '0' or empty)",
                    line=lineno,
                ) from None
        label = cells[-1]
        if label == "1":
            fraud[r] = True
        elif label == "0":
            fraud[r] = False
        else:
            raise CsvFormatError(
                f"bad label {label!r} in column {LABEL_COLUMN!r} (expected '0' or '1')",
                line=lineno,
            )
    return Dataset(schema, codes, fraud)


def write_csv(d: Dataset, path: str | Path) -> None:
    """Write a Dataset in the interchange format; round-trips bit-for-bit."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        dump_csv(d, fh)


def dump_csv(d: Dataset, fh: TextIO) -> None:
    fh.write(",".join([*d.schema, LABEL_COLUMN]))
    fh.write("\n")
    codes = d.codes
    fraud = d.fraud
    for r in range(d.n_total):
        cells = [_CODE_CELL[int(v)] for v in codes[r]]
        cells.append("1" if fraud[r] else "0")
        fh.write(",".join(cells))
        fh.write("\n")


def dumps_csv(d: Dataset) -> str:
    buf = io.StringIO()
    dump_csv(d, buf)
    return buf.getvalue()
