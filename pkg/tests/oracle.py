"""Independent reference interpreter used only by tests.

Deliberately naive: direct recursion over the AST with explicit row
loops, no shared logic with tdcomp.program_dsl.execute. Implements the
same language semantics (missing cells never match filters and are
skipped by aggregates, hop errors on missing/ambiguous cells, numeric
equality at relative tolerance 1e-9, argmax/argmin ties to the lowest
row index).
"""

from __future__ import annotations

from tdcomp.errors import EmptyAggregate, HopAmbiguous, MissingCell, ProgramTypeError
from tdcomp.program_dsl import AllRows, ColumnRef, Literal, Op
from tdcomp.table_store import Table, parse_cell_value


def _num_eq(a, b):
    m = abs(a)
    if abs(b) > m:
        m = abs(b)
    if m < 1.0:
        m = 1.0
    return abs(a - b) <= 1e-9 * m


def _lit_kind(surface):
    try:
        float(surface.replace(",", ""))
        return "number"
    except ValueError:
        pass
    try:
        parse_cell_value(surface, "date")
        return "date"
    except ValueError:
        return "text"


def _lit(surface, kind=None):
    k = kind if kind is not None else _lit_kind(surface)
    return k, parse_cell_value(surface, k)


def reference_eval(node, table: Table):
    """Evaluate a program and return a (kind, value) pair."""
    if isinstance(node, AllRows):
        return "rowset", [i for i in range(len(table.rows))]
    if isinstance(node, Literal):
        return _lit(node.surface)
    if isinstance(node, ColumnRef):
        raise ProgramTypeError("column outside operator")

    assert isinstance(node, Op)
    name = node.name

    if name in ("filter_eq", "filter_not_eq", "filter_greater", "filter_less",
                "filter_greater_eq", "filter_less_eq"):
        _, rows = reference_eval(node.args[0], table)
        col = table.col_index(node.args[1].name)
        kind = table.kind_of(col)
        if name not in ("filter_eq", "filter_not_eq"):
            if kind != "number":
                raise ProgramTypeError("numeric filter on non-number column")
        _, want = _lit(node.args[2].surface, "number" if kind == "number" else kind)
        result = []
        for r in rows:
            if table.rows[r][col] == "":
                continue
            have = table.values[r][col]
            if kind == "number":
                same = _num_eq(have, want)
            else:
                same = have == want
            if name == "filter_eq" and same:
                result.append(r)
            elif name == "filter_not_eq" and not same:
                result.append(r)
            elif name == "filter_greater" and have > want:
                result.append(r)
            elif name == "filter_less" and have < want:
                result.append(r)
            elif name == "filter_greater_eq" and have >= want:
                result.append(r)
            elif name == "filter_less_eq" and have <= want:
                result.append(r)
        return "rowset", result

    if name == "hop":
        _, rows = reference_eval(node.args[0], table)
        col = table.col_index(node.args[1].name)
        kind = table.kind_of(col)
        if len(rows) == 0:
            raise EmptyAggregate("hop on empty")
        seen = []
        for r in rows:
            if table.rows[r][col] == "":
                raise MissingCell("hop on missing")
            seen.append(table.values[r][col])
        for v in seen[1:]:
            if kind == "number":
                if not _num_eq(seen[0], v):
                    raise HopAmbiguous("hop not uniform")
            elif seen[0] != v:
                raise HopAmbiguous("hop not uniform")
        return kind, seen[0]

    if name in ("max", "min", "sum", "avg"):
        _, rows = reference_eval(node.args[0], table)
        col = table.col_index(node.args[1].name)
        present = []
        for r in rows:
            if table.rows[r][col] != "":
                present.append(table.values[r][col])
        if len(present) == 0:
            raise EmptyAggregate(name)
        if name == "max":
            best = present[0]
            for v in present[1:]:
                if v > best:
                    best = v
            return "number", float(best)
        if name == "min":
            best = present[0]
            for v in present[1:]:
                if v < best:
                    best = v
            return "number", float(best)
        acc = 0.0
        for v in present:
            acc += v
        if name == "sum":
            return "number", acc
        return "number", acc / len(present)

    if name == "count":
        _, rows = reference_eval(node.args[0], table)
        return "number", float(len(rows))

    if name in ("argmax", "argmin"):
        _, rows = reference_eval(node.args[0], table)
        col = table.col_index(node.args[1].name)
        best_r = None
        best_v = None
        for r in rows:
            if table.rows[r][col] == "":
                continue
            v = table.values[r][col]
            if best_r is None:
                best_r, best_v = r, v
            elif name == "argmax" and v > best_v:
                best_r, best_v = r, v
            elif name == "argmin" and v < best_v:
                best_r, best_v = r, v
        if best_r is None:
            raise EmptyAggregate(name)
        return "rowset", [best_r]

    if name in ("eq", "not_eq"):
        lk, lv = reference_eval(node.args[0], table)
        rk, rv = reference_eval(node.args[1], table)
        if isinstance(node.args[0], Literal) and not isinstance(node.args[1], Literal) and lk != rk:
            lk, lv = _lit(node.args[0].surface, rk)
        if isinstance(node.args[1], Literal) and not isinstance(node.args[0], Literal) and rk != lk:
            rk, rv = _lit(node.args[1].surface, lk)
        if lk != rk:
            raise ProgramTypeError("eq kinds differ")
        if lk == "number":
            same = _num_eq(lv, rv)
        else:
            same = lv == rv
        return "bool", same if name == "eq" else not same

    if name in ("greater", "less"):
        sides = []
        for a in node.args:
            if isinstance(a, Literal):
                sides.append(_lit(a.surface, "number")[1])
            else:
                k, v = reference_eval(a, table)
                if k != "number":
                    raise ProgramTypeError("comparison on non-number")
                sides.append(v)
        if name == "greater":
            return "bool", sides[0] > sides[1]
        return "bool", sides[0] < sides[1]

    if name == "and":
        _, a = reference_eval(node.args[0], table)
        _, b = reference_eval(node.args[1], table)
        return "bool", bool(a) and bool(b)

    if name == "only":
        _, rows = reference_eval(node.args[0], table)
        return "bool", len(rows) == 1

    raise ProgramTypeError(f"unknown op {name}")
