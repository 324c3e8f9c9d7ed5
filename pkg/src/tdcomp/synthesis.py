"""Candidate program enumeration and margin-trained program selection.

Candidates are generated by grammar-directed enumeration up to a depth
cap, grounding literals only in linked cell values and numbers that
appear in the statement, and column references only in columns that
share a token with the statement or contain a linked cell. A sparse
logistic scorer over program/statement features is trained with a hinge
margin between the best label-consistent and best label-inconsistent
candidate, then used to pick the program for each statement.
"""

from __future__ import annotations

import json
import math
import random
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ExecError, TrainError
from .program_dsl import (
    ALL_ROWS,
    ColumnRef,
    Literal,
    Op,
    Program,
    execute,
    is_splittable,
    literals_of,
    operators_of,
    print_program,
    program_depth,
)
from .table_store import EntityLink, Statement, Table

DEFAULT_DEPTH = 4
DEFAULT_BUDGET = 200


@dataclass(frozen=True)
class Candidate:
    program: Program
    exec_result: bool
    text: str


@dataclass(frozen=True)
class CandidateSet:
    statement_id: str
    candidates: tuple[Candidate, ...]

    def __len__(self) -> int:
        return len(self.candidates)


# ---------------------------------------------------------------------------
# Enumeration

@dataclass(frozen=True)
class _Entry:
    node: Program
    text: str
    depth: int
    kind: str  # number / text / date
    src: int | None = None  # column the value is about, None for count


def _statement_numbers(s: Statement) -> list[str]:
    out = []
    for tok in s.tokens():
        cleaned = tok.replace(",", "")
        if re.fullmatch(r"-?\d+(\.\d+)?", cleaned):
            out.append(cleaned)
    # preserve first-seen order, drop duplicates
    seen: dict[str, None] = {}
    for x in out:
        seen.setdefault(x)
    return list(seen)


def _allowed_columns(s: Statement, t: Table, links: list[EntityLink]) -> list[int]:
    tokens = set(s.tokens())
    linked_cols = {ln.col for ln in links}
    cols = []
    for c, (name, _) in enumerate(t.columns):
        if c in linked_cols or (set(name.split()) & tokens):
            cols.append(c)
    return cols


def enumerate_candidates(
    s: Statement,
    t: Table,
    links: list[EntityLink],
    budget: int,
    depth: int = DEFAULT_DEPTH,
) -> CandidateSet:
    """Enumerate executable boolean candidate programs for a statement.

    Output is capped at `budget` candidates in (depth, canonical text)
    order; each kept candidate executed without error and its boolean
    result is stored. Statements with no linked entities and no matching
    columns yield an empty set.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    cols = _allowed_columns(s, t, links)
    if not cols and not links:
        return CandidateSet(statement_id=s.id, candidates=())

    num_cols = [c for c in cols if t.kind_of(c) == "number"]
    numbers = _statement_numbers(s)
    col_lits: dict[int, list[str]] = {c: [] for c in cols}
    for ln in links:
        if ln.col in col_lits and ln.surface not in col_lits[ln.col]:
            col_lits[ln.col].append(ln.surface)
    for c in num_cols:
        for n in numbers:
            if n not in col_lits[c]:
                col_lits[c].append(n)

    def col_name(c: int) -> str:
        return t.columns[c][0]

    # --- row sets (depth <= 2: all_rows plus a single operation above it).
    # filter_not_eq and filtered aggregates are excluded: they mostly
    # generate spurious label-consistent programs that drown selection.
    rowsets: list[tuple[Program, str, int, int | None]] = [(ALL_ROWS, "all_rows", 1, None)]
    eq_rowsets: list[tuple[Program, str, int, int]] = []  # filter_eq / argmax / argmin
    for c in cols:
        for lit in col_lits[c]:
            node = Op("filter_eq", (ALL_ROWS, ColumnRef(col_name(c)), Literal(lit)))
            entry = (node, print_program(node), 2, c)
            rowsets.append(entry)
            eq_rowsets.append(entry)
    for c in num_cols:
        for lit in numbers:
            for fname in ("filter_greater", "filter_less", "filter_greater_eq", "filter_less_eq"):
                node = Op(fname, (ALL_ROWS, ColumnRef(col_name(c)), Literal(lit)))
                rowsets.append((node, print_program(node), 2, c))
        for fname in ("argmax", "argmin"):
            node = Op(fname, (ALL_ROWS, ColumnRef(col_name(c))))
            entry = (node, print_program(node), 2, c)
            rowsets.append(entry)
            eq_rowsets.append(entry)

    # --- value subtrees
    values: list[_Entry] = []
    for node, text, d, filter_col in eq_rowsets:
        for c in cols:
            if c == filter_col:
                continue  # hop on the filtered column restates the literal
            hop = Op("hop", (node, ColumnRef(col_name(c))))
            values.append(_Entry(hop, print_program(hop), d + 1, t.kind_of(c), src=c))
    for c in num_cols:
        for agg in ("max", "min", "sum", "avg"):
            v = Op(agg, (ALL_ROWS, ColumnRef(col_name(c))))
            values.append(_Entry(v, print_program(v), 2, "number", src=c))
    # counts: the whole table, or rows matching a linked text value
    values.append(_Entry(Op("count", (ALL_ROWS,)), "count{all_rows}", 2, "number", src=None))
    for node, text, d, filter_col in eq_rowsets:
        if not (isinstance(node, Op) and node.name == "filter_eq"):
            continue
        if t.kind_of(filter_col) != "text":
            continue  # counting rows at an exact numeric value is noise
        cnt = Op("count", (node,))
        values.append(_Entry(cnt, print_program(cnt), d + 1, "number", src=None))

    # --- boolean candidates
    bools: dict[str, tuple[Program, int]] = {}

    def add(node: Program, d: int) -> None:
        if d > depth:
            return
        text = print_program(node)
        if text not in bools:
            bools[text] = (node, d)

    _AGGS = ("max", "min", "sum", "avg")

    def comparable(a: _Entry, b: _Entry) -> bool:
        # compare two counts, or two values about the same column; two
        # different whole-column aggregates are near-constant truths
        # (avg > min, sum >= max, ...) and are skipped
        if a.text == b.text or a.kind != b.kind or a.src != b.src:
            return False
        if (isinstance(a.node, Op) and a.node.name in _AGGS
                and isinstance(b.node, Op) and b.node.name in _AGGS):
            return False
        return True

    num_values = [v for v in values if v.kind == "number"]
    other_values = [v for v in values if v.kind != "number"]

    for a in num_values:
        for b in num_values:
            if not comparable(a, b):
                continue
            d = 1 + max(a.depth, b.depth)
            for opname in ("eq", "not_eq", "greater", "less"):
                add(Op(opname, (a.node, b.node)), d)
        for lit in numbers:
            for opname in ("eq", "not_eq", "greater", "less"):
                add(Op(opname, (a.node, Literal(lit))), a.depth + 1)

    for a in other_values:
        for b in other_values:
            if not comparable(a, b):
                continue
            d = 1 + max(a.depth, b.depth)
            for opname in ("eq", "not_eq"):
                add(Op(opname, (a.node, b.node)), d)
        if a.src is not None:
            for lit in col_lits.get(a.src, []):
                for opname in ("eq", "not_eq"):
                    add(Op(opname, (a.node, Literal(lit))), a.depth + 1)

    for node, text, d, _ in rowsets:
        add(Op("only", (node,)), d + 1)

    # conjunctions of simple claims (literal-grounded comparisons only)
    def conjunct_ok(node: Program) -> bool:
        return (
            isinstance(node, Op)
            and node.name in ("eq", "not_eq", "greater", "less")
            and isinstance(node.args[1], Literal)
        )

    simple = sorted(
        ((d, text, node) for text, (node, d) in bools.items()
         if d < depth and conjunct_ok(node)),
        key=lambda x: (x[0], x[1]),
    )
    for i, (da, ta, na) in enumerate(simple):
        for db, tb, nb in simple[i + 1 :]:
            add(Op("and", (na, nb)), 1 + max(da, db))

    ordered = sorted(((d, text, node) for text, (node, d) in bools.items()),
                     key=lambda x: (x[0], x[1]))

    kept: list[Candidate] = []
    for d, text, node in ordered:
        if len(kept) >= budget:
            break
        try:
            result = execute(node, t)
        except ExecError:
            continue
        kept.append(Candidate(program=node, exec_result=bool(result.value), text=text))
    return CandidateSet(statement_id=s.id, candidates=tuple(kept))


# ---------------------------------------------------------------------------
# Feature extraction and the margin-loss selector

_SUPERLATIVE_STOP = {"west", "test", "rest", "best", "chest", "guest", "nest", "forest", "interest"}
_COMPARATIVE_RE = re.compile(r"\b(?:\w+er|more|less|fewer)\s+than\b")


_LOW_SUPERLATIVES = {
    "least", "minimum", "lowest", "smallest", "shortest", "worst",
    "earliest", "slowest", "fewest", "bottom",
}


def statement_triggers(text: str) -> set[str]:
    tokens = text.split()
    triggers = set()
    for tok in tokens:
        is_est = tok.endswith("est") and len(tok) >= 4 and tok not in _SUPERLATIVE_STOP
        if tok in ("most", "least", "maximum", "minimum") or is_est:
            triggers.add("superlative")
            triggers.add(
                "superlative_low" if tok in _LOW_SUPERLATIVES else "superlative_high"
            )
        if re.fullmatch(r"-?\d+(\.\d+)?", tok.replace(",", "")):
            triggers.add("number")
    if _COMPARATIVE_RE.search(text):
        triggers.add("comparative")
        if re.search(r"\b(?:less|fewer|smaller|lower|shorter|slower)\s+than\b", text):
            triggers.add("comparative_less")
        else:
            triggers.add("comparative_more")
    if "only" in tokens or "unique" in tokens:
        triggers.add("only")
    if "and" in tokens:
        triggers.add("and")
    if "both" in tokens:
        triggers.add("both")
    if "not" in tokens:
        triggers.add("not")
    if "number of rows" in text:
        triggers.add("count")
    return triggers


# operators that realize a trigger word; the overlap count (minus a
# penalty for a root operator with no licensing trigger) ranks candidates
# with equal scores
_TRIGGER_OPS = {
    "superlative": {"max", "min", "argmax", "argmin"},
    "superlative_high": {"max", "argmax"},
    "superlative_low": {"min", "argmin"},
    "comparative": {"greater", "less"},
    "comparative_more": {"greater"},
    "comparative_less": {"less"},
    "and": {"and"},
    "both": {"and"},
    "only": {"only", "count"},
    "count": {"count"},
}

_ROOT_LICENSE = {
    "greater": {"comparative"},
    "less": {"comparative"},
    "and": {"and", "both"},
    "not_eq": {"not"},
    "only": {"only"},
}


def _root_mismatch(z: Program, triggers: set[str]) -> float:
    if isinstance(z, Op) and z.name in _ROOT_LICENSE:
        if not (_ROOT_LICENSE[z.name] & triggers):
            return 1.0
    return 0.0


# an operator realizing the opposite direction of the statement's own
# wording (a "lowest" claim parsed with max, "more than" parsed with less)
_DIRECTION = [
    ({"max", "argmax"}, "superlative_high", "superlative_low"),
    ({"min", "argmin"}, "superlative_low", "superlative_high"),
    ({"greater"}, "comparative_more", "comparative_less"),
    ({"less"}, "comparative_less", "comparative_more"),
]


def _direction_mismatch(ops: set[str], triggers: set[str]) -> float:
    pen = 0.0
    for op_set, licensing, opposite in _DIRECTION:
        if (ops & op_set) and licensing not in triggers and opposite in triggers:
            pen += 1.0
    return pen


def _anchor_pairs(z: Program, tokens: list[str]) -> float:
    """Number of (column, literal) argument pairs whose literal appears in
    the statement shortly after its column mention; crossed pairings (the
    literal of one column attached to another) score lower."""
    first_pos: dict[str, int] = {}
    for i, tok in enumerate(tokens):
        first_pos.setdefault(tok, i)

    def head_pos(name: str) -> int | None:
        return first_pos.get(name.split()[0])

    pairs: list[tuple[str, str]] = []

    def walk(node: Program) -> None:
        if not isinstance(node, Op):
            return
        if node.name.startswith("filter_"):
            pairs.append((node.args[1].name, node.args[2].surface))
        if (
            node.name in ("eq", "not_eq", "greater", "less")
            and isinstance(node.args[1], Literal)
            and isinstance(node.args[0], Op)
            and len(node.args[0].args) == 2
            and isinstance(node.args[0].args[1], ColumnRef)
        ):
            pairs.append((node.args[0].args[1].name, node.args[1].surface))
        for a in node.args:
            walk(a)

    walk(z)
    hits = 0.0
    for col, lit in pairs:
        cp, lp = head_pos(col), head_pos(lit)
        if cp is not None and lp is not None and 0 < lp - cp <= 8:
            hits += 1.0
    return hits


def featurize(
    s: Statement,
    z: Program,
    links: tuple[EntityLink, ...] | list[EntityLink] = (),
    table: Table | None = None,
) -> dict[str, float]:
    """Deterministic sparse features of a (statement, program) pair."""
    feats: dict[str, float] = {}
    ops = operators_of(z)
    for name in ops:
        feats[f"op:{name}"] = feats.get(f"op:{name}", 0.0) + 1.0
    triggers = statement_triggers(s.text)
    for name in set(ops):
        for trig in triggers:
            feats[f"op:{name}|trig:{trig}"] = 1.0
    op_set = set(ops)
    agreement = sum(
        1.0
        for trig in triggers
        if trig in _TRIGGER_OPS and _TRIGGER_OPS[trig] & op_set
    )
    agreement -= _root_mismatch(z, triggers)
    agreement -= _direction_mismatch(op_set, triggers)
    if agreement:
        feats["agreement"] = agreement
    anchors = _anchor_pairs(z, s.tokens())
    if anchors:
        feats["anchor_pairs"] = anchors
    lits = set(literals_of(z))
    if links:
        used = sum(1 for ln in links if ln.surface in lits)
        feats["link_frac"] = used / len(links)
    feats[f"depth:{program_depth(z)}"] = 1.0
    if table is not None and lits:
        surfaces = table.cell_surfaces()
        feats["grounded_lits"] = float(sum(1 for lit in lits if lit in surfaces))
    return feats


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@dataclass
class SelectorModel:
    """Sparse logistic scorer trained with a hinge margin."""

    weights: dict[str, float] = field(default_factory=dict)
    gamma: float = 0.2
    loss_trace: list[float] = field(default_factory=list)

    def score_features(self, feats: dict[str, float]) -> float:
        dot = 0.0
        for name, value in feats.items():
            w = self.weights.get(name)
            if w is not None:
                dot += w * value
        return _sigmoid(dot)


def score(
    m: SelectorModel,
    s: Statement,
    z: Program,
    links: tuple[EntityLink, ...] | list[EntityLink] = (),
    table: Table | None = None,
) -> float:
    """Probability in (0, 1) that z is the semantically consistent parse."""
    return m.score_features(featurize(s, z, links, table))


def _rank_key(m: SelectorModel, feats: dict[str, float]) -> tuple[float, float, float, float]:
    """Argmax key inside the margin objective: score first, then
    trigger/operator agreement and the grounding features break exact
    ties (all-zero models would otherwise tie every candidate at 0.5 and
    fall back to enumeration order)."""
    return (
        m.score_features(feats),
        feats.get("agreement", 0.0),
        feats.get("link_frac", 0.0),
        feats.get("grounded_lits", 0.0),
    )


def _select_key(
    m: SelectorModel, feats: dict[str, float]
) -> tuple[float, float, float, float, float]:
    """Final selection key: the semantic priors (trigger/operator
    agreement, column-literal adjacency, entity-link usage, literal
    grounding) rank first and the trained score refines within a prior
    class. The sparse scorer that stands in for a pretrained consistency
    model is too weak to be trusted against the priors, and a drifting
    score would otherwise pick structurally implausible programs for
    unlabeled statements."""
    return (
        feats.get("agreement", 0.0),
        feats.get("anchor_pairs", 0.0),
        feats.get("link_frac", 0.0),
        feats.get("grounded_lits", 0.0),
        m.score_features(feats),
    )


def filter_label_consistent(
    cs: CandidateSet, label: int
) -> tuple[list[Candidate], list[Candidate]]:
    """Partition candidates into (execution matches label, the rest)."""
    z_plus = [c for c in cs.candidates if c.exec_result == bool(label)]
    z_minus = [c for c in cs.candidates if c.exec_result != bool(label)]
    return z_plus, z_minus


def _program_of(x) -> Program:
    return x.program if isinstance(x, Candidate) else x


def margin_loss(
    m: SelectorModel,
    s: Statement,
    z_plus,
    z_minus,
    links: tuple[EntityLink, ...] | list[EntityLink] = (),
    table: Table | None = None,
) -> float:
    """Hinge between the best-scored consistent and inconsistent candidates:
    max(score(z-) - score(z+) + gamma, 0). Both pools must be non-empty."""
    if not z_plus or not z_minus:
        raise ValueError("margin_loss needs non-empty consistent and inconsistent pools")
    s_plus = max(score(m, s, _program_of(z), links, table) for z in z_plus)
    s_minus = max(score(m, s, _program_of(z), links, table) for z in z_minus)
    return max(s_minus - s_plus + m.gamma, 0.0)


def train_selector(
    data: list[tuple[Statement, CandidateSet]],
    gamma: float = 0.2,
    epochs: int = 20,
    lr: float = 0.5,
    seed: int = 0,
    tables: dict[str, Table] | None = None,
    links_of: dict[str, list[EntityLink]] | None = None,
    candidate_cap: int | None = None,
) -> SelectorModel:
    """Subgradient descent on the summed hinge loss over all statements.

    Statements without a label, or whose consistent/inconsistent pool is
    empty, are skipped; if everything is skipped a TrainError is raised.
    Deterministic for a fixed seed; the fitted model carries a per-epoch
    loss trace.
    """
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    if lr <= 0:
        raise ValueError("lr must be > 0")
    samples = []
    for s, cs in data:
        if s.label is None:
            continue
        candidates = cs.candidates
        if candidate_cap is not None:
            candidates = candidates[:candidate_cap]
        table = tables.get(s.table_id) if tables else None
        links = links_of.get(s.id, []) if links_of else []
        z_plus = [c for c in candidates if c.exec_result == bool(s.label)]
        z_minus = [c for c in candidates if c.exec_result != bool(s.label)]
        if not z_plus or not z_minus:
            continue
        plus_feats = [featurize(s, c.program, links, table) for c in z_plus]
        minus_feats = [featurize(s, c.program, links, table) for c in z_minus]
        samples.append((plus_feats, minus_feats))
    if not samples:
        raise TrainError("no statements with both consistent and inconsistent candidates")

    model = SelectorModel(weights={}, gamma=gamma)
    rng = random.Random(seed)
    order = list(range(len(samples)))
    for _ in range(epochs):
        rng.shuffle(order)
        epoch_loss = 0.0
        for idx in order:
            plus_feats, minus_feats = samples[idx]
            best_plus = max(plus_feats, key=lambda f: _rank_key(model, f))
            best_minus = max(minus_feats, key=lambda f: _rank_key(model, f))
            s_plus = model.score_features(best_plus)
            s_minus = model.score_features(best_minus)
            loss = max(s_minus - s_plus + gamma, 0.0)
            epoch_loss += loss
            if loss > 0.0:
                g_minus = s_minus * (1.0 - s_minus)
                g_plus = s_plus * (1.0 - s_plus)
                for name, value in best_minus.items():
                    model.weights[name] = model.weights.get(name, 0.0) - lr * g_minus * value
                for name, value in best_plus.items():
                    model.weights[name] = model.weights.get(name, 0.0) + lr * g_plus * value
        model.loss_trace.append(epoch_loss)
    return model


def select_program(
    m: SelectorModel,
    s: Statement,
    cs: CandidateSet,
    links: tuple[EntityLink, ...] | list[EntityLink] = (),
    table: Table | None = None,
) -> Program | None:
    """Best splittable candidate, restricted to label-consistent ones when
    the statement is labeled. None when nothing survives the filters.
    Ranking is by semantic priors first with the trained score refining
    within a prior class (see _select_key)."""
    pool = list(cs.candidates)
    if s.label is not None:
        pool = [c for c in pool if c.exec_result == bool(s.label)]
    pool = [c for c in pool if is_splittable(c.program)]
    if not pool:
        return None
    best = pool[0]
    best_key = _select_key(m, featurize(s, best.program, links, table))
    for c in pool[1:]:
        key = _select_key(m, featurize(s, c.program, links, table))
        if key > best_key:
            best, best_key = c, key
    return best.program


# ---------------------------------------------------------------------------
# Persistence

_META_KEYS = ("gamma", "schema_version")


def save_selector(m: SelectorModel, path: str | Path) -> None:
    obj: dict = {name: w for name, w in sorted(m.weights.items())}
    obj["gamma"] = m.gamma
    obj["schema_version"] = 1
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True) + "\n", encoding="utf-8")


def load_selector(path: str | Path) -> SelectorModel:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    gamma = float(obj.get("gamma", 0.2))
    weights = {k: float(v) for k, v in obj.items() if k not in _META_KEYS}
    return SelectorModel(weights=weights, gamma=gamma)


def candidate_set_to_json(cs: CandidateSet) -> dict:
    return {
        "statement_id": cs.statement_id,
        "candidates": [{"program": c.text, "exec": c.exec_result} for c in cs.candidates],
    }


def candidate_set_from_json(obj: dict) -> CandidateSet:
    from .program_dsl import parse_program

    candidates = tuple(
        Candidate(program=parse_program(c["program"]), exec_result=bool(c["exec"]),
                  text=c["program"])
        for c in obj["candidates"]
    )
    return CandidateSet(statement_id=obj["statement_id"], candidates=candidates)
