"""Tables, statements, and entity links.

Tables are immutable once loaded: a typed rectangular grid with named
columns, read from CSV (header row mandatory, RFC-4180 quoting).
Statements come from JSONL with keys {"id", "table_id", "text", "label"}
(label optional; extra keys "split", "gold_type", "gold_program",
"gold_decomposition" are carried through when present).

Cell surfaces are normalized to lowercase with collapsed whitespace.
Empty cells are typed as missing and carry a parsed value of None;
kind inference ignores them.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path

from .errors import IngestError

KINDS = ("text", "number", "date")

_WS = re.compile(r"\s+")
_DATE_FORMATS = ("%Y-%m-%d", "%d %B %Y", "%d %b %Y")


def normalize_surface(s: str) -> str:
    return _WS.sub(" ", s.strip().lower())


def _parse_number(surface: str) -> float:
    cleaned = surface.replace(",", "").strip()
    if cleaned == "" or cleaned.lower() in ("nan", "inf", "-inf", "infinity", "-infinity"):
        raise ValueError(f"not a number: {surface!r}")
    return float(cleaned)


def _parse_date(surface: str) -> date:
    for fmt in _DATE_FORMATS:
        try:
            return datetime.strptime(surface.strip(), fmt).date()
        except ValueError:
            continue
    raise ValueError(f"not a date: {surface!r}")


def parse_cell_value(surface: str, kind: str):
    """Parse a cell surface under the declared column kind.

    number accepts thousands separators and decimals ("9,500" -> 9500.0),
    date accepts ISO and "d month yyyy" forms, text returns the normalized
    lowercase surface. Raises ValueError when the surface does not parse
    under the declared kind.
    """
    if kind == "number":
        return _parse_number(surface)
    if kind == "date":
        return _parse_date(surface)
    if kind == "text":
        return normalize_surface(surface)
    raise ValueError(f"unknown column kind: {kind!r}")


def infer_kind(surfaces: list[str]) -> str:
    """Infer a column kind from its non-empty cell surfaces.

    number if all parse as numbers, date if all parse as dates, else text.
    Independent of row order and idempotent.
    """
    non_empty = [s for s in surfaces if s.strip() != ""]
    if not non_empty:
        return "text"
    for kind in ("number", "date"):
        try:
            for s in non_empty:
                parse_cell_value(s, kind)
            return kind
        except ValueError:
            continue
    return "text"


@dataclass(frozen=True)
class Table:
    """Rectangular evidence table with typed, uniquely named columns."""

    id: str
    caption: str | None
    columns: tuple[tuple[str, str], ...]  # (name, kind)
    rows: tuple[tuple[str, ...], ...]  # normalized surfaces
    values: tuple[tuple[object, ...], ...]  # parsed values, None = missing

    @classmethod
    def build(
        cls,
        id: str,
        columns: list[tuple[str, str]],
        rows: list[list[str]],
        caption: str | None = None,
    ) -> "Table":
        names = [normalize_surface(n) for n, _ in columns]
        kinds = [k for _, k in columns]
        if len(set(names)) != len(names):
            raise IngestError(f"table {id!r}: duplicate column names after normalization")
        if not rows or not names:
            raise IngestError(f"table {id!r}: need at least one row and one column")
        for k in kinds:
            if k not in KINDS:
                raise IngestError(f"table {id!r}: unknown column kind {k!r}")
        norm_rows = []
        parsed_rows = []
        for i, row in enumerate(rows):
            if len(row) != len(names):
                raise IngestError(
                    f"table {id!r}: row {i} has {len(row)} cells, expected {len(names)}"
                )
            surfaces = tuple(normalize_surface(c) for c in row)
            parsed = []
            for c, (surface, kind) in enumerate(zip(surfaces, kinds)):
                if surface == "":
                    parsed.append(None)
                    continue
                try:
                    parsed.append(parse_cell_value(surface, kind))
                except ValueError as exc:
                    raise IngestError(
                        f"table {id!r}: cell ({i},{c}) {surface!r} does not parse as {kind}"
                    ) from exc
            norm_rows.append(surfaces)
            parsed_rows.append(tuple(parsed))
        return cls(
            id=id,
            caption=normalize_surface(caption) if caption else None,
            columns=tuple(zip(names, kinds)),
            rows=tuple(norm_rows),
            values=tuple(parsed_rows),
        )

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    def column_names(self) -> list[str]:
        return [n for n, _ in self.columns]

    def col_index(self, name: str) -> int:
        name = normalize_surface(name)
        for i, (n, _) in enumerate(self.columns):
            if n == name:
                return i
        raise KeyError(name)

    def kind_of(self, col: int) -> str:
        return self.columns[col][1]

    def surface(self, row: int, col: int) -> str:
        return self.rows[row][col]

    def value(self, row: int, col: int):
        return self.values[row][col]

    def is_missing(self, row: int, col: int) -> bool:
        return self.rows[row][col] == ""

    def cell_surfaces(self) -> set[str]:
        return {s for row in self.rows for s in row if s != ""}

    def column_surfaces(self, col: int) -> list[str]:
        """Distinct non-empty surfaces of one column, in first-seen order."""
        seen: dict[str, None] = {}
        for row in self.rows:
            if row[col] != "":
                seen.setdefault(row[col])
        return list(seen)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "caption": self.caption,
            "columns": [[n, k] for n, k in self.columns],
            "rows": [list(r) for r in self.rows],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Table":
        return cls.build(
            id=obj["id"],
            columns=[(n, k) for n, k in obj["columns"]],
            rows=[list(r) for r in obj["rows"]],
            caption=obj.get("caption"),
        )


def load_table(path: str | Path, id: str) -> Table:
    """Load a CSV file (header row first) into a typed Table.

    Column kinds are inferred: number if all non-empty cells parse as
    numbers, date if all parse as dates, otherwise text.
    """
    path = Path(path)
    if not path.exists():
        raise IngestError(f"table file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        records = list(csv.reader(fh))
    records = [r for r in records if r]  # drop fully blank lines
    if len(records) < 2:
        raise IngestError(f"table {id!r}: need a header row and at least one data row")
    header, data = records[0], records[1:]
    width = len(header)
    for i, row in enumerate(data):
        if len(row) != width:
            raise IngestError(f"table {id!r}: row {i} has {len(row)} cells, expected {width}")
    kinds = []
    for c in range(width):
        kinds.append(infer_kind([normalize_surface(row[c]) for row in data]))
    return Table.build(id=id, columns=list(zip(header, kinds)), rows=data)


def load_tables_dir(tables_dir: str | Path) -> dict[str, Table]:
    """Load every *.csv in a directory; the table id is the file stem."""
    tables_dir = Path(tables_dir)
    if not tables_dir.is_dir():
        raise IngestError(f"tables directory not found: {tables_dir}")
    tables = {}
    for path in sorted(tables_dir.glob("*.csv")):
        tables[path.stem] = load_table(path, path.stem)
    if not tables:
        raise IngestError(f"no .csv tables under {tables_dir}")
    return tables


@dataclass(frozen=True)
class Statement:
    """A claim about one table; label 1 = entailed, 0 = refuted."""

    id: str
    table_id: str
    text: str
    label: int | None = None
    split: str = "train"
    gold_type: str | None = None
    gold_program: str | None = None
    gold_decomposition: tuple[str, ...] | None = None

    def tokens(self) -> list[str]:
        return self.text.split()

    def to_json(self) -> dict:
        obj = {"id": self.id, "table_id": self.table_id, "text": self.text, "split": self.split}
        if self.label is not None:
            obj["label"] = self.label
        if self.gold_type is not None:
            obj["gold_type"] = self.gold_type
        if self.gold_program is not None:
            obj["gold_program"] = self.gold_program
        if self.gold_decomposition is not None:
            obj["gold_decomposition"] = list(self.gold_decomposition)
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "Statement":
        label = obj.get("label")
        if label is not None:
            label = int(label)
            if label not in (0, 1):
                raise IngestError(f"statement {obj.get('id')!r}: label must be 0 or 1")
        gold_decomp = obj.get("gold_decomposition")
        return cls(
            id=str(obj["id"]),
            table_id=str(obj["table_id"]),
            text=normalize_surface(str(obj["text"])),
            label=label,
            split=str(obj.get("split", "train")),
            gold_type=obj.get("gold_type"),
            gold_program=obj.get("gold_program"),
            gold_decomposition=tuple(gold_decomp) if gold_decomp is not None else None,
        )


def load_statements(path: str | Path, tables: dict[str, Table]) -> list[Statement]:
    """Load statements from JSONL and check each table_id resolves."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"statements file not found: {path}")
    statements = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"{path}:{lineno}: bad JSON") from exc
            if obj.get("schema_version") is not None and "id" not in obj:
                continue  # header record
            stmt = Statement.from_json(obj)
            if stmt.table_id not in tables:
                raise IngestError(f"{path}:{lineno}: unknown table_id {stmt.table_id!r}")
            statements.append(stmt)
    if not statements:
        raise IngestError(f"no statements in {path}")
    return statements


@dataclass(frozen=True)
class EntityLink:
    """A statement token span matching one table cell exactly."""

    start: int  # token index, inclusive
    end: int  # token index, exclusive
    row: int
    col: int
    surface: str


def link_entities(s: Statement, t: Table) -> list[EntityLink]:
    """Link maximal statement token spans to cells with identical surfaces.

    Matching is exact on normalized surfaces. Longer spans shadow the
    shorter spans they contain; scanning is greedy left to right, so the
    result is deterministic. When several cells share a surface the
    first one in row-major order is linked.
    """
    if s.table_id != t.id:
        raise ValueError(f"statement {s.id!r} is about table {s.table_id!r}, not {t.id!r}")
    cell_of: dict[str, tuple[int, int]] = {}
    max_len = 1
    for r in range(t.n_rows):
        for c in range(t.n_cols):
            surface = t.surface(r, c)
            if surface and surface not in cell_of:
                cell_of[surface] = (r, c)
                max_len = max(max_len, len(surface.split()))
    tokens = s.tokens()
    links = []
    i = 0
    while i < len(tokens):
        matched = False
        for length in range(min(max_len, len(tokens) - i), 0, -1):
            span = " ".join(tokens[i : i + length])
            if span in cell_of:
                r, c = cell_of[span]
                links.append(EntityLink(start=i, end=i + length, row=r, col=c, surface=span))
                i += length
                matched = True
                break
        if not matched:
            i += 1
    return links
