"""The table-program language: AST, parser, printer, type checker, executor.

Concrete syntax is `name{arg;arg;...}`. Leaf tokens are column names,
literal values, numbers, or `all_rows`; tokens may contain spaces but not
`{`, `}`, or `;`, and there is no quoting. The printer emits canonical
text (no decorative whitespace) such that parse(print(p)) == p.

Fixed operator inventory (21 operators):

    all_rows                                     -> RowSet   (written as a leaf)
    filter_eq / filter_not_eq (rs, col, lit)     -> RowSet
    filter_greater / filter_less /
    filter_greater_eq / filter_less_eq
                             (rs, numcol, numlit)-> RowSet
    hop (rs, col)                                -> cell value
    max / min / sum / avg (rs, numcol)           -> Number
    count (rs)                                   -> Number
    argmax / argmin (rs, numcol)                 -> RowSet of size 1
    eq / not_eq (v, v)                           -> Bool
    greater / less (number, number)              -> Bool
    and (bool, bool)                             -> Bool
    only (rs)                                    -> Bool

Execution semantics:
  - Missing (empty) cells never satisfy a filter, are skipped by
    max/min/sum/avg/argmax/argmin, and raise MissingCell when hit by hop.
  - hop over a multi-row set succeeds iff all rows share one value.
  - max/min/sum/avg over an empty row set (or all-missing cells) raise
    EmptyAggregate; count over an empty row set returns 0.
  - Numeric equality uses relative tolerance 1e-9 (absolute near zero);
    greater/less are strict.
  - argmax/argmin break ties by lowest row index.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date

from .errors import (
    EmptyAggregate,
    HopAmbiguous,
    MissingCell,
    ProgramSyntaxError,
    ProgramTypeError,
)
from .table_store import Table, parse_cell_value

# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Op:
    name: str
    args: tuple["Program", ...]


@dataclass(frozen=True)
class ColumnRef:
    name: str


@dataclass(frozen=True)
class Literal:
    surface: str


@dataclass(frozen=True)
class AllRows:
    pass


Program = Op | ColumnRef | Literal | AllRows

ALL_ROWS = AllRows()

# argument slot kinds:
#   rowset  - AllRows or a RowSet-returning operator
#   col     - bare column-name token
#   numcol  - bare column-name token, must resolve to a number column
#   lit     - bare literal token (interpreted under the column's kind)
#   numlit  - bare literal token that must parse as a number
#   number  - Number-returning operator or numeric literal token
#   value   - Number/Text/Date-returning operator or literal token
#   bool    - Bool-returning operator
SIGNATURES: dict[str, tuple[tuple[str, ...], str]] = {
    "filter_eq": (("rowset", "col", "lit"), "rowset"),
    "filter_not_eq": (("rowset", "col", "lit"), "rowset"),
    "filter_greater": (("rowset", "numcol", "numlit"), "rowset"),
    "filter_less": (("rowset", "numcol", "numlit"), "rowset"),
    "filter_greater_eq": (("rowset", "numcol", "numlit"), "rowset"),
    "filter_less_eq": (("rowset", "numcol", "numlit"), "rowset"),
    "hop": (("rowset", "col"), "cell"),
    "max": (("rowset", "numcol"), "number"),
    "min": (("rowset", "numcol"), "number"),
    "sum": (("rowset", "numcol"), "number"),
    "avg": (("rowset", "numcol"), "number"),
    "count": (("rowset",), "number"),
    "argmax": (("rowset", "numcol"), "rowset"),
    "argmin": (("rowset", "numcol"), "rowset"),
    "eq": (("value", "value"), "bool"),
    "not_eq": (("value", "value"), "bool"),
    "greater": (("number", "number"), "bool"),
    "less": (("number", "number"), "bool"),
    "and": (("bool", "bool"), "bool"),
    "only": (("rowset",), "bool"),
}

BINARY_BOOL_OPS = ("eq", "not_eq", "greater", "less", "and")

REL_TOL = 1e-9


def numbers_equal(a: float, b: float) -> bool:
    """Equality with relative tolerance 1e-9 (absolute for tiny magnitudes)."""
    return abs(a - b) <= REL_TOL * max(1.0, abs(a), abs(b))


# ---------------------------------------------------------------------------
# Parsing

@dataclass
class _RawNode:
    name: str
    children: list
    pos: int


@dataclass
class _RawLeaf:
    token: str
    pos: int


class _Scanner:
    def __init__(self, src: str):
        self.src = src
        self.i = 0

    def _peek(self) -> str:
        return self.src[self.i] if self.i < len(self.src) else ""

    def parse(self):
        node = self._element()
        while self.i < len(self.src) and self.src[self.i].isspace():
            self.i += 1
        if self.i != len(self.src):
            raise ProgramSyntaxError("trailing characters after program", self.i)
        return node

    def _element(self):
        start = self.i
        chars = []
        while self.i < len(self.src) and self.src[self.i] not in "{};":
            chars.append(self.src[self.i])
            self.i += 1
        token = "".join(chars).strip()
        if self._peek() == "{":
            if not token:
                raise ProgramSyntaxError("operator name missing before '{'", start)
            self.i += 1  # consume '{'
            children = [self._element()]
            while self._peek() == ";":
                self.i += 1
                children.append(self._element())
            if self._peek() != "}":
                raise ProgramSyntaxError("expected '}' or ';'", self.i)
            self.i += 1  # consume '}'
            return _RawNode(name=token, children=children, pos=start)
        if not token:
            raise ProgramSyntaxError("empty argument", start)
        return _RawLeaf(token=token, pos=start)


def _result_kind(node: Program) -> str:
    """Structural result kind: rowset / cell / number / bool / leaf kinds."""
    if isinstance(node, AllRows):
        return "rowset"
    if isinstance(node, Op):
        return SIGNATURES[node.name][1]
    if isinstance(node, Literal):
        return "literal"
    return "colref"


def _bind(raw, expected: str) -> Program:
    """Convert a raw parse node into the AST, classifying leaves by the
    argument slot they occupy and checking arities structurally."""
    if isinstance(raw, _RawLeaf):
        if raw.token == "all_rows":
            if expected in ("rowset", "root"):
                return ALL_ROWS
            raise ProgramTypeError(f"all_rows not allowed in a {expected} slot")
        if expected in ("col", "numcol"):
            return ColumnRef(raw.token)
        if expected in ("lit", "numlit", "value", "number"):
            return Literal(raw.token)
        if expected == "rowset":
            raise ProgramTypeError(f"expected a row-set expression, got leaf {raw.token!r}")
        if expected == "bool":
            raise ProgramTypeError(f"expected a boolean expression, got leaf {raw.token!r}")
        raise ProgramTypeError(f"bare leaf {raw.token!r} cannot be a whole program")
    # operator node
    if raw.name not in SIGNATURES:
        raise ProgramTypeError(f"unknown operator {raw.name!r}")
    arg_kinds, result = SIGNATURES[raw.name]
    if len(raw.children) != len(arg_kinds):
        raise ProgramTypeError(
            f"{raw.name} takes {len(arg_kinds)} arguments, got {len(raw.children)}"
        )
    if expected == "rowset" and result != "rowset":
        raise ProgramTypeError(f"{raw.name} does not produce a row set")
    if expected == "bool" and result != "bool":
        raise ProgramTypeError(f"{raw.name} does not produce a boolean")
    if expected == "number" and result not in ("number", "cell"):
        raise ProgramTypeError(f"{raw.name} does not produce a number")
    if expected == "value" and result not in ("number", "cell"):
        raise ProgramTypeError(f"{raw.name} does not produce a value")
    args = tuple(_bind(child, kind) for child, kind in zip(raw.children, arg_kinds))
    return Op(name=raw.name, args=args)


def parse_program(src: str) -> Program:
    """Parse program text into a structurally checked AST.

    Whitespace around tokens and delimiters is ignored; whitespace inside
    a token is part of it. Raises ProgramSyntaxError on malformed text and
    ProgramTypeError on unknown operators, arity, or slot mismatches.
    """
    raw = _Scanner(src).parse()
    return _bind(raw, "root")


def print_program(p: Program) -> str:
    """Canonical text form; parse_program(print_program(p)) == p."""
    if isinstance(p, AllRows):
        return "all_rows"
    if isinstance(p, ColumnRef):
        return p.name
    if isinstance(p, Literal):
        return p.surface
    return f"{p.name}{{{';'.join(print_program(a) for a in p.args)}}}"


def program_depth(p: Program) -> int:
    """Tree depth counting leaves as depth 1."""
    if isinstance(p, Op):
        return 1 + max(program_depth(a) for a in p.args)
    return 1


def operators_of(p: Program) -> list[str]:
    """Operator names in pre-order."""
    if not isinstance(p, Op):
        return []
    out = [p.name]
    for a in p.args:
        out.extend(operators_of(a))
    return out


def literals_of(p: Program) -> list[str]:
    if isinstance(p, Literal):
        return [p.surface]
    if isinstance(p, Op):
        out = []
        for a in p.args:
            out.extend(literals_of(a))
        return out
    return []


# ---------------------------------------------------------------------------
# Type checking against a concrete table

_NUMERIC_RE = re.compile(r"^-?\d+(\.\d+)?$")


def _literal_value_kind(surface: str) -> str:
    cleaned = surface.replace(",", "")
    if _NUMERIC_RE.match(cleaned):
        return "number"
    try:
        parse_cell_value(surface, "date")
        return "date"
    except ValueError:
        return "text"


def type_check(p: Program, t: Table, strict: bool = False) -> str:
    """Resolve column references against a table and return the root type.

    Result is one of "rowset", "number", "text", "date", "bool". With
    strict=True the root must be "bool" (a full statement program).
    Raises ProgramTypeError on unknown columns, numeric operators applied
    to non-number columns, unparseable literals, or mismatched comparisons.
    """
    result = _check(p, t)
    if strict and result != "bool":
        raise ProgramTypeError(f"statement program must be boolean, got {result}")
    return result


def _resolve_col(node: Program, t: Table, numeric: bool) -> int:
    if not isinstance(node, ColumnRef):
        raise ProgramTypeError("expected a column name")
    try:
        c = t.col_index(node.name)
    except KeyError:
        raise ProgramTypeError(f"unknown column {node.name!r}") from None
    if numeric and t.kind_of(c) != "number":
        raise ProgramTypeError(f"column {node.name!r} is not numeric")
    return c


def _check_literal_as(node: Literal, kind: str) -> str:
    try:
        parse_cell_value(node.surface, kind)
    except ValueError:
        raise ProgramTypeError(f"literal {node.surface!r} does not parse as {kind}") from None
    return kind


def _check(p: Program, t: Table) -> str:
    if isinstance(p, AllRows):
        return "rowset"
    if isinstance(p, Literal):
        return _literal_value_kind(p.surface)
    if isinstance(p, ColumnRef):
        raise ProgramTypeError(f"bare column reference {p.name!r} outside an operator")
    arg_kinds, result = SIGNATURES[p.name]
    if p.name.startswith("filter_"):
        _check(p.args[0], t)
        numeric = arg_kinds[1] == "numcol"
        c = _resolve_col(p.args[1], t, numeric)
        lit = p.args[2]
        if not isinstance(lit, Literal):
            raise ProgramTypeError(f"{p.name} needs a literal third argument")
        _check_literal_as(lit, "number" if numeric else t.kind_of(c))
        return "rowset"
    if p.name == "hop":
        _check(p.args[0], t)
        c = _resolve_col(p.args[1], t, numeric=False)
        return t.kind_of(c)
    if p.name in ("max", "min", "sum", "avg", "argmax", "argmin"):
        _check(p.args[0], t)
        _resolve_col(p.args[1], t, numeric=True)
        return result if result != "rowset" else "rowset"
    if p.name == "count":
        _check(p.args[0], t)
        return "number"
    if p.name in ("eq", "not_eq"):
        left, right = p.args
        lkind = _check(left, t)
        rkind = _check(right, t)
        # literals adapt to the other side's type
        if isinstance(left, Literal) and not isinstance(right, Literal):
            lkind = _check_literal_as(left, rkind)
        elif isinstance(right, Literal) and not isinstance(left, Literal):
            rkind = _check_literal_as(right, lkind)
        if lkind != rkind:
            raise ProgramTypeError(f"{p.name} compares {lkind} with {rkind}")
        if lkind not in ("number", "text", "date"):
            raise ProgramTypeError(f"{p.name} cannot compare {lkind} values")
        return "bool"
    if p.name in ("greater", "less"):
        for arg in p.args:
            kind = _check(arg, t)
            if isinstance(arg, Literal):
                kind = _check_literal_as(arg, "number")
            if kind != "number":
                raise ProgramTypeError(f"{p.name} needs numbers, got {kind}")
        return "bool"
    if p.name == "and":
        for arg in p.args:
            if _check(arg, t) != "bool":
                raise ProgramTypeError("and needs boolean arguments")
        return "bool"
    if p.name == "only":
        _check(p.args[0], t)
        return "bool"
    raise ProgramTypeError(f"unknown operator {p.name!r}")


# ---------------------------------------------------------------------------
# Execution

@dataclass(frozen=True)
class RuntimeValue:
    """Tagged runtime result: rowset / number / text / date / bool."""

    kind: str
    value: object

    def as_bool(self) -> bool:
        if self.kind != "bool":
            raise ProgramTypeError(f"expected a boolean result, got {self.kind}")
        return bool(self.value)


def execute(p: Program, t: Table) -> RuntimeValue:
    """Evaluate a program against a table.

    Assumes type_check(p, t) succeeds; raises HopAmbiguous, EmptyAggregate,
    or MissingCell on the runtime contract violations described in the
    module docstring. Pure: identical inputs give bit-identical results.
    """
    return _eval(p, t)


def _rows_with_values(t: Table, rows: list[int], col: int) -> list[tuple[int, float]]:
    out = []
    for r in rows:
        v = t.value(r, col)
        if v is not None:
            out.append((r, v))
    return out


def _eval(p: Program, t: Table) -> RuntimeValue:
    if isinstance(p, AllRows):
        return RuntimeValue("rowset", list(range(t.n_rows)))
    if isinstance(p, Literal):
        kind = _literal_value_kind(p.surface)
        return RuntimeValue(kind, parse_cell_value(p.surface, kind))
    if isinstance(p, ColumnRef):
        raise ProgramTypeError(f"bare column reference {p.name!r} cannot be evaluated")

    name = p.name
    if name.startswith("filter_"):
        rows = _eval(p.args[0], t).value
        numeric = SIGNATURES[name][0][1] == "numcol"
        col = _resolve_col(p.args[1], t, numeric)
        kind = "number" if numeric else t.kind_of(col)
        target = parse_cell_value(p.args[2].surface, kind)
        kept = []
        for r in rows:
            v = t.value(r, col)
            if v is None:
                continue  # missing cells never match a filter
            if name == "filter_eq":
                ok = numbers_equal(v, target) if kind == "number" else v == target
            elif name == "filter_not_eq":
                ok = not (numbers_equal(v, target) if kind == "number" else v == target)
            elif name == "filter_greater":
                ok = v > target
            elif name == "filter_less":
                ok = v < target
            elif name == "filter_greater_eq":
                ok = v >= target
            else:  # filter_less_eq
                ok = v <= target
            if ok:
                kept.append(r)
        return RuntimeValue("rowset", kept)

    if name == "hop":
        rows = _eval(p.args[0], t).value
        col = _resolve_col(p.args[1], t, numeric=False)
        if not rows:
            raise EmptyAggregate("hop over an empty row set")
        values = []
        for r in rows:
            if t.is_missing(r, col):
                raise MissingCell(f"hop hit an empty cell at row {r}")
            values.append(t.value(r, col))
        kind = t.kind_of(col)
        first = values[0]
        for v in values[1:]:
            same = numbers_equal(first, v) if kind == "number" else first == v
            if not same:
                raise HopAmbiguous(f"hop over {len(rows)} rows with differing values")
        return RuntimeValue(kind, first)

    if name in ("max", "min", "sum", "avg"):
        rows = _eval(p.args[0], t).value
        col = _resolve_col(p.args[1], t, numeric=True)
        pairs = _rows_with_values(t, rows, col)
        if not pairs:
            raise EmptyAggregate(f"{name} over an empty row set")
        nums = [v for _, v in pairs]
        if name == "max":
            out = max(nums)
        elif name == "min":
            out = min(nums)
        elif name == "sum":
            out = 0.0
            for v in nums:
                out += v
        else:
            total = 0.0
            for v in nums:
                total += v
            out = total / len(nums)
        return RuntimeValue("number", float(out))

    if name == "count":
        rows = _eval(p.args[0], t).value
        return RuntimeValue("number", float(len(rows)))

    if name in ("argmax", "argmin"):
        rows = _eval(p.args[0], t).value
        col = _resolve_col(p.args[1], t, numeric=True)
        pairs = _rows_with_values(t, rows, col)
        if not pairs:
            raise EmptyAggregate(f"{name} over an empty row set")
        best_row, best_val = pairs[0]
        for r, v in pairs[1:]:
            if (name == "argmax" and v > best_val) or (name == "argmin" and v < best_val):
                best_row, best_val = r, v
        return RuntimeValue("rowset", [best_row])

    if name in ("eq", "not_eq"):
        left = _eval(p.args[0], t)
        right = _eval(p.args[1], t)
        lk, rk = left.kind, right.kind
        # re-parse a literal under the other side's kind (mirrors type_check)
        if isinstance(p.args[0], Literal) and not isinstance(p.args[1], Literal) and lk != rk:
            left = RuntimeValue(rk, parse_cell_value(p.args[0].surface, rk))
        elif isinstance(p.args[1], Literal) and not isinstance(p.args[0], Literal) and lk != rk:
            right = RuntimeValue(lk, parse_cell_value(p.args[1].surface, lk))
        if left.kind != right.kind:
            raise ProgramTypeError(f"{name} compares {left.kind} with {right.kind}")
        if left.kind == "number":
            same = numbers_equal(left.value, right.value)
        else:
            same = left.value == right.value
        return RuntimeValue("bool", same if name == "eq" else not same)

    if name in ("greater", "less"):
        left = _eval_number(p.args[0], t)
        right = _eval_number(p.args[1], t)
        return RuntimeValue("bool", left > right if name == "greater" else left < right)

    if name == "and":
        left = _eval(p.args[0], t).as_bool()
        right = _eval(p.args[1], t).as_bool()
        return RuntimeValue("bool", left and right)

    if name == "only":
        rows = _eval(p.args[0], t).value
        return RuntimeValue("bool", len(rows) == 1)

    raise ProgramTypeError(f"unknown operator {name!r}")


def _eval_number(p: Program, t: Table) -> float:
    if isinstance(p, Literal):
        return parse_cell_value(p.surface, "number")
    res = _eval(p, t)
    if res.kind != "number":
        raise ProgramTypeError(f"expected a number, got {res.kind}")
    return res.value


# ---------------------------------------------------------------------------
# Skeletons and splittability

@dataclass(frozen=True)
class Skeleton:
    """A program tree with every leaf erased to "_"."""

    label: str
    children: tuple["Skeleton", ...] = ()

    def to_text(self) -> str:
        if not self.children:
            return self.label
        return f"{self.label}{{{';'.join(c.to_text() for c in self.children)}}}"

    def contains(self, names: set[str]) -> bool:
        if self.label in names:
            return True
        return any(c.contains(names) for c in self.children)


PLACEHOLDER = Skeleton("_")


def skeleton(p: Program) -> Skeleton:
    """Erase every leaf (column, literal, all_rows) to the placeholder."""
    if isinstance(p, Op):
        return Skeleton(p.name, tuple(skeleton(a) for a in p.args))
    return PLACEHOLDER


def is_splittable(p: Program) -> bool:
    """True iff the root is a binary operator over two operator subtrees."""
    return (
        isinstance(p, Op)
        and p.name in BINARY_BOOL_OPS
        and all(isinstance(a, Op) for a in p.args)
    )


def split_root(p: Program) -> tuple[Program, Program]:
    if not is_splittable(p):
        raise ProgramTypeError("program is not splittable at the root")
    return p.args[0], p.args[1]
