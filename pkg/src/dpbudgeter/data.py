"""CSV ingestion, the raw-data firewall, and codebook import.

Ingestion performs a header check and a row-count pass only; no cell value
is retained. Cells are materialized exclusively through a one-shot accessor
obtained when the session finalizes, and every materialized cell increments
the handle's audit counter, which instrumented tests assert stays at zero
until then. The row count itself is treated as public: error estimates need
it before any release happens.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DigestMismatchError, FirewallError, IngestError
from .variables import VariableKind, VariableMetadata

MISSING_TOKENS = {"", "NA"}

SEALED = "sealed"
OPENED = "opened"


@dataclass
class DatasetHandle:
    path: str
    header: list[str]
    row_count: int
    digest: str
    firewall_state: str = SEALED
    read_audit: int = 0
    _accessor: "ColumnAccessor | None" = field(default=None, repr=False, compare=False)


def file_digest(path: str | Path) -> str:
    sha = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            sha.update(chunk)
    return sha.hexdigest()


def load_csv(path: str | Path) -> DatasetHandle:
    """Ingest a UTF-8 CSV with a mandatory header row.

    Raises IngestError naming the offending line for ragged rows, duplicate
    or empty header names, and files with no header at all.
    """
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"no such dataset file: {path}")
    digest = file_digest(path)
    header: list[str] | None = None
    row_count = 0
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        for row in reader:
            if not row:
                continue  # blank line
            if header is None:
                header = [name.strip() for name in row]
                if any(name == "" for name in header):
                    raise IngestError("header row contains an empty column name")
                if len(set(header)) != len(header):
                    raise IngestError("header row contains duplicate column names")
                continue
            if len(row) != len(header):
                raise IngestError(
                    f"line {reader.line_num}: expected {len(header)} fields, "
                    f"found {len(row)}"
                )
            row_count += 1
    if header is None:
        raise IngestError(f"{path.name} is empty; a header row is required")
    return DatasetHandle(
        path=str(path), header=header, row_count=row_count, digest=digest
    )


class ColumnAccessor:
    """Typed access to dataset columns, available only after finalize opens it."""

    def __init__(self, handle: DatasetHandle, rows: list[list[str]]):
        self._handle = handle
        self._rows = rows
        self._positions = {name: i for i, name in enumerate(handle.header)}

    def numeric_column(self, name: str, meta: VariableMetadata) -> list[float | None]:
        """Parse a column as numbers; empty and NA cells become missing markers."""
        pos = self._position(name)
        out: list[float | None] = []
        for row_index, row in enumerate(self._rows, start=1):
            token = row[pos].strip()
            if token in MISSING_TOKENS:
                out.append(None)
                continue
            try:
                out.append(float(token))
            except ValueError:
                raise IngestError(
                    f"row {row_index}, column {name!r}: cannot interpret "
                    f"{token!r} as a number",
                    row=row_index,
                    column=name,
                ) from None
        self._handle.read_audit += len(out)
        return out

    def label_column(self, name: str) -> list[str | None]:
        """Raw label tokens; empty and NA cells become missing markers."""
        pos = self._position(name)
        out: list[str | None] = []
        for row in self._rows:
            token = row[pos].strip()
            out.append(None if token in MISSING_TOKENS else token)
        self._handle.read_audit += len(out)
        return out

    def _position(self, name: str) -> int:
        try:
            return self._positions[name]
        except KeyError:
            raise IngestError(f"dataset has no column named {name!r}") from None


def open_for_finalize(handle: DatasetHandle) -> ColumnAccessor:
    """One-shot transition sealed -> opened; only the finalize path calls this.

    Refuses if the handle was already opened or if the file changed since
    ingestion (the row count baked into error estimates would be stale).
    """
    if handle.firewall_state == OPENED:
        raise FirewallError("dataset already opened; finalize is one-shot")
    if file_digest(handle.path) != handle.digest:
        raise DigestMismatchError(
            f"dataset file {handle.path} changed since it was ingested"
        )
    rows: list[list[str]] = []
    with open(handle.path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        saw_header = False
        for row in reader:
            if not row:
                continue
            if not saw_header:
                saw_header = True
                continue
            rows.append(row)
    handle.firewall_state = OPENED
    accessor = ColumnAccessor(handle, rows)
    handle._accessor = accessor
    return accessor


def load_codebook(path: str | Path) -> dict[str, VariableMetadata]:
    """Optional variable-name -> metadata mapping, a flat JSON object.

    Keys are variable names; values hold kind plus bounds or categories,
    e.g. {"age": {"kind": "numerical", "lower": 0, "upper": 150}}.
    """
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise IngestError("codebook must be a JSON object keyed by variable name")
    book: dict[str, VariableMetadata] = {}
    for name, entry in raw.items():
        if not isinstance(entry, dict) or "kind" not in entry:
            raise IngestError(f"codebook entry for {name!r} needs a 'kind' field")
        try:
            kind = VariableKind(entry["kind"])
        except ValueError:
            raise IngestError(
                f"codebook entry for {name!r} has unknown kind {entry['kind']!r}"
            ) from None
        categories = entry.get("categories")
        book[name] = VariableMetadata(
            kind=kind,
            lower=entry.get("lower"),
            upper=entry.get("upper"),
            categories=tuple(categories) if categories is not None else None,
            grid_cells=entry.get("grid_cells"),
        )
    return book
