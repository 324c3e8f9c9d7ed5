"""Seeded random tables and well-typed random programs for fuzz tests."""

from __future__ import annotations

import random

from tdcomp.program_dsl import ALL_ROWS, ColumnRef, Literal, Op, Program
from tdcomp.table_store import Table

_WORDS = [
    "firhill", "cappielow", "ibrox", "hampden", "tannadice", "pittodrie",
    "dens park", "easter road", "rugby park", "fir park", "celtic park",
    "love street", "gayfield", "palmerston",
]
_COL_TEXT = ["venue", "team", "player", "city", "result"]
_COL_NUM = ["attendance", "score", "round", "goals", "points"]
_COL_DATE = ["date", "played on"]


def random_table(rng: random.Random, max_rows: int = 6, max_cols: int = 4,
                 missing_prob: float = 0.08) -> Table:
    n_rows = rng.randint(1, max_rows)
    n_cols = rng.randint(1, max_cols)
    kinds = [rng.choice(["text", "number", "number", "date"]) for _ in range(n_cols)]
    names = []
    used = set()
    for kind in kinds:
        pool = {"text": _COL_TEXT, "number": _COL_NUM, "date": _COL_DATE}[kind]
        name = rng.choice([p for p in pool if p not in used] or [f"col{len(names)}"])
        used.add(name)
        names.append(name)
    rows = []
    for _ in range(n_rows):
        row = []
        for kind in kinds:
            if rng.random() < missing_prob:
                row.append("")
            elif kind == "text":
                row.append(rng.choice(_WORDS))
            elif kind == "number":
                if rng.random() < 0.2:
                    row.append(f"{rng.randint(0, 99)}.{rng.randint(0, 9)}")
                else:
                    row.append(str(rng.randint(0, 9999)))
            else:
                row.append(f"200{rng.randint(0, 9)}-0{rng.randint(1, 9)}-1{rng.randint(0, 9)}")
        rows.append(row)
    return Table.build("rand", list(zip(names, kinds)), rows)


def _random_literal(rng: random.Random, t: Table, col: int) -> Literal:
    surfaces = t.column_surfaces(col)
    if surfaces and rng.random() < 0.8:
        return Literal(rng.choice(surfaces))
    if t.kind_of(col) == "number":
        return Literal(str(rng.randint(0, 9999)))
    if t.kind_of(col) == "date":
        return Literal(f"200{rng.randint(0, 9)}-05-15")
    return Literal(rng.choice(_WORDS))


def _num_cols(t: Table) -> list[int]:
    return [i for i in range(t.n_cols) if t.kind_of(i) == "number"]


def _random_rowset(rng: random.Random, t: Table, depth: int) -> Program:
    choices = ["all_rows"]
    if depth >= 2:
        choices += ["filter_eq", "filter_not_eq"]
        if _num_cols(t):
            choices += ["filter_greater", "filter_less", "filter_greater_eq",
                        "filter_less_eq", "argmax", "argmin"]
    op = rng.choice(choices)
    if op == "all_rows":
        return ALL_ROWS
    inner = _random_rowset(rng, t, depth - 1)
    if op in ("argmax", "argmin"):
        col = rng.choice(_num_cols(t))
        return Op(op, (inner, ColumnRef(t.columns[col][0])))
    if op in ("filter_eq", "filter_not_eq"):
        col = rng.randrange(t.n_cols)
    else:
        col = rng.choice(_num_cols(t))
    lit = _random_literal(rng, t, col)
    return Op(op, (inner, ColumnRef(t.columns[col][0]), lit))


def _random_value(rng: random.Random, t: Table, depth: int) -> tuple[Program, str]:
    """Returns (program, value kind) for a value-typed subtree."""
    choices = ["count", "hop"]
    if _num_cols(t):
        choices += ["max", "min", "sum", "avg"]
    op = rng.choice(choices)
    rowset = _random_rowset(rng, t, depth - 1)
    if op == "count":
        return Op("count", (rowset,)), "number"
    if op == "hop":
        col = rng.randrange(t.n_cols)
        return Op("hop", (rowset, ColumnRef(t.columns[col][0]))), t.kind_of(col)
    col = rng.choice(_num_cols(t))
    return Op(op, (rowset, ColumnRef(t.columns[col][0]))), "number"


def random_program(rng: random.Random, t: Table, max_depth: int = 4) -> Program:
    """A random well-typed boolean program of depth <= max_depth."""
    op = rng.choice(["eq", "not_eq", "greater", "less", "and", "only", "eq", "greater"])
    if op == "only":
        return Op("only", (_random_rowset(rng, t, max_depth - 1),))
    if op == "and":
        left = random_program(rng, t, max_depth - 1)
        right = random_program(rng, t, max_depth - 1)
        return Op("and", (left, right))
    if op in ("greater", "less"):
        if not _num_cols(t):
            return Op("only", (_random_rowset(rng, t, max_depth - 1),))
        left, _ = _random_value_of_kind(rng, t, max_depth - 1, "number")
        if rng.random() < 0.3:
            right: Program = Literal(str(rng.randint(0, 9999)))
        else:
            right, _ = _random_value_of_kind(rng, t, max_depth - 1, "number")
        return Op(op, (left, right))
    # eq / not_eq on matching value kinds
    left, kind = _random_value(rng, t, max_depth - 1)
    if rng.random() < 0.3:
        if kind == "number":
            right = Literal(str(rng.randint(0, 9999)))
        else:
            cols = [i for i in range(t.n_cols) if t.kind_of(i) == kind]
            right = _random_literal(rng, t, rng.choice(cols))
        return Op(op, (left, right))
    right, rkind = _random_value_of_kind(rng, t, max_depth - 1, kind)
    return Op(op, (left, right))


def _random_value_of_kind(rng: random.Random, t: Table, depth: int, kind: str):
    for _ in range(40):
        v, k = _random_value(rng, t, depth)
        if k == kind:
            return v, k
    # fall back to a count (always a number) or a hop on a column of the kind
    if kind == "number":
        return Op("count", (_random_rowset(rng, t, depth - 1),)), "number"
    cols = [i for i in range(t.n_cols) if t.kind_of(i) == kind]
    col = rng.choice(cols)
    return Op("hop", (_random_rowset(rng, t, depth - 1), ColumnRef(t.columns[col][0]))), kind
