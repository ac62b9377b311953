"""Result tables and deterministic CSV/JSON emission.

CSV files start with ``# key=value`` provenance lines followed by an
RFC 4180 body (header row, CRLF line ends). Floats are written with
Python's shortest round-trip repr; non-finite values as ``inf``, ``-inf``
and ``nan``. JSON files hold ``{"provenance": {...}, "rows": [{...}, ...]}``
with the same float spelling for non-finite values (as strings).
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

from ..errors import FluxtuneError

__all__ = ["ResultTable", "EmitError", "emit", "render", "read_csv", "FORMATS"]

FORMATS = ("csv", "json")


class EmitError(FluxtuneError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class ResultTable:
    """Named columns, row-major values and a provenance header."""

    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.columns)
        for i, r in enumerate(self.rows):
            if len(r) != n:
                raise ValueError(f"row {i} has {len(r)} values, expected {n}")

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def records(self) -> list[dict]:
        return [dict(zip(self.columns, r)) for r in self.rows]


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    if isinstance(v, int):
        return str(v)
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return _cell(v)
    return v


def render(table: ResultTable, fmt: str = "csv") -> str:
    """Serialize a table to text."""
    if fmt == "csv":
        buf = io.StringIO(newline="")
        for k in sorted(table.provenance):
            buf.write(f"# {k}={table.provenance[k]}\r\n")
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(table.columns)
        for r in table.rows:
            w.writerow([_cell(v) for v in r])
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "provenance": dict(sorted(table.provenance.items())),
            "rows": [{c: _json_value(v) for c, v in zip(table.columns, r)} for r in table.rows],
        }
        return json.dumps(doc, indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(prefix=".fluxtune-", suffix=".tmp", dir=directory)
    except OSError as exc:
        raise EmitError(path, exc.strerror or str(exc)) from None
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise EmitError(path, exc.strerror or str(exc)) from None


def emit(table: ResultTable, fmt: str = "csv", path: str | None = None) -> None:
    """Write ``table`` to ``path`` atomically (temp file plus rename), or to stdout."""
    text = render(table, fmt)
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        _atomic_write(path, text)


def _parse_cell(s: str):
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def read_csv(text: str) -> ResultTable:
    """Inverse of :func:`render` for CSV, restoring numbers and booleans."""
    prov: dict = {}
    body = []
    for line in text.splitlines(keepends=True):
        if line.startswith("# ") and not body:
            k, _, v = line[2:].rstrip("\r\n").partition("=")
            prov[k] = v
        else:
            body.append(line)
    reader = csv.reader(io.StringIO("".join(body), newline=""))
    rows = list(reader)
    if not rows:
        raise ValueError("CSV has no header row")
    cols = tuple(rows[0])
    return ResultTable(cols, tuple(tuple(_parse_cell(c) for c in r) for r in rows[1:]), prov)
