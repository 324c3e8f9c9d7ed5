"""Seeded synthetic corpus: tables plus statements with known labels and
known gold decompositions.

Each statement is produced by sampling a program of the requested
decomposition type (or an atomic comparison), verbalizing it through the
inverse of the decomposition templates, and labeling it by execution.
Entail/refute balance is kept within a few percent by planting literals
that make the program true or false as needed. Tables carry one key
column with distinct values (so single-row lookups are unambiguous), one
category column with planted repetitions (so equal and unequal count
pairs both exist), and distinct-valued number columns.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass
from pathlib import Path

from .decomposer import DecompositionType, instantiate_template
from .program_dsl import ALL_ROWS, ColumnRef, Literal, Op, Program, execute, print_program
from .table_store import Statement, Table

DEFAULT_MIXTURE = {
    DecompositionType.CONJUNCTION: 0.15,
    DecompositionType.SUPERLATIVE: 0.13,
    DecompositionType.COMPARATIVE: 0.13,
    DecompositionType.UNIQUENESS: 0.06,
    DecompositionType.ATOMIC: 0.53,
}

_KEY_COLS = ["team", "player", "venue", "driver", "club"]
_CAT_COLS = ["division", "region", "group", "conference"]
_NUM_COLS = ["score", "points", "attendance", "goals", "wins", "laps", "assists", "podiums"]
_KEY_VALUES = [
    "falcons", "rovers", "united", "albion", "rangers", "thistle", "harps",
    "swifts", "corinthians", "wanderers", "athletic", "hibernian", "clyde",
    "arbroath", "montrose", "stranraer", "dumbarton", "queens park",
    "stenhousemuir", "cowdenbeath", "brechin city", "east fife", "elgin city",
    "peterhead", "forfar", "annan", "stirling", "alloa", "airdrie", "morton",
]
_CAT_VALUES = ["north", "south", "east", "alpha", "beta", "gamma"]


@dataclass
class SyntheticCorpus:
    tables: dict[str, Table]
    statements: list[Statement]


def _make_table(rng: random.Random, table_id: str, rows: int, cols: int) -> Table:
    if rows < 4 or cols < 4:
        raise ValueError("synthetic tables need at least 4 rows and 4 columns")
    key_col = rng.choice(_KEY_COLS)
    cat_col = rng.choice(_CAT_COLS)
    num_names = rng.sample(_NUM_COLS, cols - 2)
    keys = rng.sample(_KEY_VALUES, rows)
    # plant the category column so equal-count and unequal-count value
    # pairs both exist: one majority value plus two singletons
    cats = rng.sample(_CAT_VALUES, 3)
    cat_cells = [cats[0]] * (rows - 2) + [cats[1], cats[2]]
    rng.shuffle(cat_cells)
    columns = [(key_col, "text"), (cat_col, "text")] + [(n, "number") for n in num_names]
    num_cells = {n: rng.sample(range(1, 9999), rows) for n in num_names}
    data = []
    for r in range(rows):
        row = [keys[r], cat_cells[r]] + [str(num_cells[n][r]) for n in num_names]
        data.append(row)
    return Table.build(table_id, columns, data)


def _num_col_names(t: Table) -> list[str]:
    return [n for n, k in t.columns if k == "number"]


def _hop(key_col: str, key: str, num_col: str) -> Op:
    return Op(
        "hop",
        (Op("filter_eq", (ALL_ROWS, ColumnRef(key_col), Literal(key))), ColumnRef(num_col)),
    )


def _count_eq(col: str, value: str) -> Op:
    return Op("count", (Op("filter_eq", (ALL_ROWS, ColumnRef(col), Literal(value))),))


def _column_values(t: Table, name: str) -> list[float]:
    c = t.col_index(name)
    return [t.value(r, c) for r in range(t.n_rows)]


class _Builder:
    """Builds one statement of a given type with a planted label."""

    def __init__(self, rng: random.Random):
        self.rng = rng

    def build(self, t: Table, dtype: DecompositionType, want: int) -> tuple[str, Program]:
        if dtype == DecompositionType.SUPERLATIVE:
            return self._superlative(t, want)
        if dtype == DecompositionType.COMPARATIVE:
            return self._comparative(t, want)
        if dtype == DecompositionType.CONJUNCTION:
            return self._conjunction(t, want)
        if dtype == DecompositionType.UNIQUENESS:
            return self._uniqueness(t, want)
        return self._atomic(t, want)

    def _superlative(self, t: Table, want: int) -> tuple[str, Program]:
        rng = self.rng
        key_col = t.columns[0][0]
        nc = rng.choice(_num_col_names(t))
        values = _column_values(t, nc)
        use_min = rng.random() < 0.5
        target = min(values) if use_min else max(values)
        best_row = values.index(target)
        if want == 1:
            row = best_row
        else:
            row = rng.choice([r for r in range(t.n_rows) if r != best_row])
        key = t.surface(row, 0)
        word = "lowest" if use_min else "highest"
        text = f"the {word} {nc} comes when {key_col} is {key}"
        z = Op("eq", (Op("min" if use_min else "max", (ALL_ROWS, ColumnRef(nc))),
                      _hop(key_col, key, nc)))
        return text, z

    def _comparative(self, t: Table, want: int) -> tuple[str, Program]:
        rng = self.rng
        key_col = t.columns[0][0]
        nc = rng.choice(_num_col_names(t))
        r1, r2 = rng.sample(range(t.n_rows), 2)
        use_less = rng.random() < 0.5
        v1 = t.value(r1, t.col_index(nc))
        v2 = t.value(r2, t.col_index(nc))
        truth = v1 < v2 if use_less else v1 > v2
        if truth != bool(want):
            r1, r2 = r2, r1
        k1, k2 = t.surface(r1, 0), t.surface(r2, 0)
        word = "less" if use_less else "more"
        text = (
            f"the {nc} when {key_col} is {k1} is {word} than "
            f"the {nc} when {key_col} is {k2}"
        )
        z = Op("less" if use_less else "greater",
               (_hop(key_col, k1, nc), _hop(key_col, k2, nc)))
        return text, z

    def _conjunct(self, t: Table, nc: str, side_true: bool) -> tuple[str, Op]:
        rng = self.rng
        values = _column_values(t, nc)
        use_min = rng.random() < 0.5
        use_less = rng.random() < 0.5
        agg_val = min(values) if use_min else max(values)
        delta = rng.randint(1, 60)
        if use_less:  # claim: agg < k
            k = agg_val + delta if side_true else agg_val - delta
        else:  # claim: agg > k
            k = agg_val - delta if side_true else agg_val + delta
        k = max(0, int(k))
        word_agg = "lowest" if use_min else "highest"
        word_cmp = "less" if use_less else "more"
        clause = f"the {word_agg} {nc} is {word_cmp} than {k}"
        prog = Op("less" if use_less else "greater",
                  (Op("min" if use_min else "max", (ALL_ROWS, ColumnRef(nc))), Literal(str(k))))
        return clause, prog

    def _conjunction(self, t: Table, want: int) -> tuple[str, Program]:
        rng = self.rng
        nc1, nc2 = rng.sample(_num_col_names(t), 2)
        if want == 1:
            truths = (True, True)
        else:
            truths = (True, False) if rng.random() < 0.5 else (False, True)
        c1, g1 = self._conjunct(t, nc1, truths[0])
        c2, g2 = self._conjunct(t, nc2, truths[1])
        # candidate enumeration emits conjunctions with text-sorted sides;
        # keep clause order aligned with the program side order
        if print_program(g2) < print_program(g1):
            c1, c2, g1, g2 = c2, c1, g2, g1
        text = f"{c1} and {c2}"
        return text, Op("and", (g1, g2))

    def _uniqueness(self, t: Table, want: int) -> tuple[str, Program]:
        rng = self.rng
        cat_col = t.columns[1][0]
        c = t.col_index(cat_col)
        counts: dict[str, int] = {}
        for r in range(t.n_rows):
            counts[t.surface(r, c)] = counts.get(t.surface(r, c), 0) + 1
        values = sorted(counts)
        equal_pairs = [
            (a, b) for i, a in enumerate(values) for b in values[i + 1 :]
            if counts[a] == counts[b]
        ]
        unequal_pairs = [
            (a, b) for i, a in enumerate(values) for b in values[i + 1 :]
            if counts[a] != counts[b]
        ]
        pool = equal_pairs if want == 1 else unequal_pairs
        v1, v2 = rng.choice(pool)
        if rng.random() < 0.5:
            v1, v2 = v2, v1
        text = (
            f"the number of rows where {cat_col} is {v1} is the same as "
            f"the number of rows where {cat_col} is {v2}"
        )
        z = Op("eq", (_count_eq(cat_col, v1), _count_eq(cat_col, v2)))
        return text, z

    def _atomic(self, t: Table, want: int) -> tuple[str, Program]:
        rng = self.rng
        key_col = t.columns[0][0]
        nc = rng.choice(_num_col_names(t))
        row = rng.randrange(t.n_rows)
        key = t.surface(row, 0)
        true_val = int(t.value(row, t.col_index(nc)))
        if want == 1:
            lit = true_val
        else:
            lit = true_val + rng.choice([-1, 1]) * rng.randint(1, 500)
        text = f"the {nc} when {key_col} is {key} is {lit}"
        z = Op("eq", (_hop(key_col, key, nc), Literal(str(lit))))
        return text, z


def _type_assignment(n: int, mixture: dict[DecompositionType, float],
                     rng: random.Random) -> list[DecompositionType]:
    counts = {c: int(n * share) for c, share in mixture.items()}
    counts[DecompositionType.ATOMIC] += n - sum(counts.values())
    order = []
    for c in (DecompositionType.CONJUNCTION, DecompositionType.SUPERLATIVE,
              DecompositionType.COMPARATIVE, DecompositionType.UNIQUENESS,
              DecompositionType.ATOMIC):
        order.extend([c] * counts.get(c, 0))
    rng.shuffle(order)
    return order


def _split_assignment(n: int, fractions: tuple[float, float, float],
                      rng: random.Random) -> list[str]:
    n_train = int(n * fractions[0])
    n_val = int(n * fractions[1])
    tags = ["train"] * n_train + ["val"] * n_val + ["test"] * (n - n_train - n_val)
    rng.shuffle(tags)
    return tags


def generate_synthetic_corpus(
    n: int,
    table_shape: tuple[int, int] = (6, 4),
    seed: int = 0,
    mixture: dict[DecompositionType, float] | None = None,
    split_fractions: tuple[float, float, float] = (0.7, 0.1, 0.2),
    statements_per_table: int = 5,
) -> SyntheticCorpus:
    """Generate n labeled statements over freshly sampled tables.

    Every statement's label equals the execution of its generating
    program (checked), and non-atomic statements record their gold
    decomposition texts.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(seed)
    mixture = mixture or DEFAULT_MIXTURE
    rows, cols = table_shape
    n_tables = max(1, n // statements_per_table)
    tables = {}
    for j in range(n_tables):
        tid = f"t{j:04d}"
        tables[tid] = _make_table(rng, tid, rows, cols)
    table_ids = sorted(tables)

    types = _type_assignment(n, mixture, rng)
    splits = _split_assignment(n, split_fractions, rng)
    builder = _Builder(rng)
    label_counter: dict[DecompositionType, int] = {}
    statements = []
    for i in range(n):
        t = tables[table_ids[i % n_tables]]
        dtype = types[i]
        want = label_counter.get(dtype, 0) % 2
        label_counter[dtype] = label_counter.get(dtype, 0) + 1
        text, z = builder.build(t, dtype, want)
        got = int(execute(z, t).as_bool())
        if got != want:
            raise AssertionError(
                f"planted label mismatch for {text!r}: wanted {want}, executed {got}"
            )
        stmt = Statement(
            id=f"s{i:05d}",
            table_id=t.id,
            text=text,
            label=got,
            split=splits[i],
            gold_type=dtype.value,
            gold_program=print_program(z),
        )
        if dtype != DecompositionType.ATOMIC:
            subs = instantiate_template(stmt, z, dtype, t)
            stmt = Statement(
                **{**stmt.__dict__, "gold_decomposition": tuple(sub.text for sub in subs)}
            )
        statements.append(stmt)
    return SyntheticCorpus(tables=tables, statements=statements)


def write_corpus(corpus: SyntheticCorpus, tables_dir: str | Path,
                 statements_file: str | Path) -> None:
    """Write tables as CSV files and statements as JSONL."""
    tables_dir = Path(tables_dir)
    tables_dir.mkdir(parents=True, exist_ok=True)
    for tid in sorted(corpus.tables):
        t = corpus.tables[tid]
        with (tables_dir / f"{tid}.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(t.column_names())
            for row in t.rows:
                writer.writerow(row)
    statements_file = Path(statements_file)
    statements_file.parent.mkdir(parents=True, exist_ok=True)
    with statements_file.open("w", encoding="utf-8") as fh:
        for s in corpus.statements:
            fh.write(json.dumps(s.to_json(), sort_keys=True) + "\n")
