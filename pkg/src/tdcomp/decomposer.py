"""Statement decomposition: pseudo-dataset construction, augmentation,
type detection, and decomposition generation.

Pseudo decompositions are built from selected programs: the program
skeleton fixes the decomposition type (conjunction, comparative,
superlative, uniqueness), and per-type templates are filled from program
arguments. Two augmentations expand the dataset: swapping a linked
entity for another value from the same column, and inverting a
superlative/comparative word together with its mirrored operator; in
both cases the label is recomputed by re-executing the modified program.

At inference time a statement is decomposed through its selected program
when one exists and the template applies, otherwise through a lexical
type detector with pattern-based slot filling, otherwise it is atomic.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, replace
from enum import Enum

from .errors import ExecError, TemplateError
from .program_dsl import (
    ALL_ROWS,
    AllRows,
    ColumnRef,
    Literal,
    Op,
    Program,
    Skeleton,
    execute,
    is_splittable,
    literals_of,
    print_program,
    skeleton,
)
from .synthesis import CandidateSet, SelectorModel, select_program
from .table_store import EntityLink, Statement, Table, link_entities


class DecompositionType(Enum):
    CONJUNCTION = "conjunction"
    COMPARATIVE = "comparative"
    SUPERLATIVE = "superlative"
    UNIQUENESS = "uniqueness"
    ATOMIC = "atomic"


@dataclass(frozen=True)
class Subproblem:
    kind: str  # "question" | "statement"
    text: str
    probe: Program | None = None

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "text": self.text,
            "probe": print_program(self.probe) if self.probe is not None else None,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Subproblem":
        from .program_dsl import parse_program

        probe = obj.get("probe")
        return cls(
            kind=obj["kind"],
            text=obj["text"],
            probe=parse_program(probe) if probe else None,
        )


@dataclass(frozen=True)
class PseudoSample:
    """One (statement, type, decomposition) training triple."""

    statement_id: str
    statement_text: str
    table_id: str
    dtype: DecompositionType
    subproblems: tuple[Subproblem, ...]
    provenance: str  # original | entity_swap | antonym
    program: Program
    label: int

    def to_json(self) -> dict:
        return {
            "statement_id": self.statement_id,
            "statement_text": self.statement_text,
            "table_id": self.table_id,
            "type": self.dtype.value,
            "provenance": self.provenance,
            "decomposition": [sub.to_json() for sub in self.subproblems],
            "program": print_program(self.program),
            "label": self.label,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PseudoSample":
        from .program_dsl import parse_program

        return cls(
            statement_id=obj["statement_id"],
            statement_text=obj["statement_text"],
            table_id=obj["table_id"],
            dtype=DecompositionType(obj["type"]),
            subproblems=tuple(Subproblem.from_json(x) for x in obj["decomposition"]),
            provenance=obj["provenance"],
            program=parse_program(obj["program"]),
            label=int(obj["label"]),
        )


# ---------------------------------------------------------------------------
# Skeleton-based type classification

_SUPERLATIVE_OPS = {"max", "min", "argmax", "argmin"}


def classify_skeleton(sk: Skeleton) -> DecompositionType:
    """Decomposition type from a program skeleton.

    Overlaps resolve in the fixed precedence
    uniqueness > superlative > comparative > conjunction > atomic.
    """
    kids = sk.children
    if sk.label in ("eq", "not_eq") and any(k.label == "count" for k in kids):
        return DecompositionType.UNIQUENESS
    if sk.label == "only":
        return DecompositionType.UNIQUENESS
    if sk.label == "eq":
        holding = [k for k in kids if k.contains(_SUPERLATIVE_OPS)]
        if len(holding) == 1:
            return DecompositionType.SUPERLATIVE
    if sk.label in ("greater", "less"):
        return DecompositionType.COMPARATIVE
    if sk.label == "and":
        return DecompositionType.CONJUNCTION
    return DecompositionType.ATOMIC


# ---------------------------------------------------------------------------
# Lexical type detection (used when no program is available)

_LOW_WORDS = {
    "lowest", "least", "minimum", "smallest", "shortest", "worst",
    "earliest", "slowest", "bottom", "fewest",
}
_SUPERLATIVE_WORDS = {"most", "least", "maximum", "minimum"} | _LOW_WORDS | {
    "highest", "largest", "longest", "best", "latest", "fastest", "top",
}
_EST_STOP = {"west", "test", "rest", "chest", "guest", "nest", "forest", "interest"}
_COMPARATIVE_RE = re.compile(r"\b(?:\w+er|more|less|fewer)\s+than\b")
_VERB_TOKENS = {
    "is", "are", "was", "were", "has", "have", "had", "equals", "comes",
    "came", "wins", "won", "scored", "scores", "plays", "played", "beat",
    "finished", "belongs",
}


def detect_type_text(s: Statement) -> DecompositionType:
    """Rule cascade over the statement text; deterministic."""
    tokens = s.tokens()
    token_set = set(tokens)
    if "only" in token_set or "unique" in token_set or "uniquely" in token_set:
        return DecompositionType.UNIQUENESS
    if "number of rows" in s.text:
        return DecompositionType.UNIQUENESS
    for tok in tokens:
        if tok in _SUPERLATIVE_WORDS:
            return DecompositionType.SUPERLATIVE
        if tok.endswith("est") and len(tok) >= 4 and tok not in _EST_STOP:
            return DecompositionType.SUPERLATIVE
    if _COMPARATIVE_RE.search(s.text):
        return DecompositionType.COMPARATIVE
    if " and " in f" {s.text} ":
        left, _, right = s.text.partition(" and ")
        if (set(left.split()) & _VERB_TOKENS) and (set(right.split()) & _VERB_TOKENS):
            return DecompositionType.CONJUNCTION
    if "both" in token_set and "and" in token_set:
        return DecompositionType.CONJUNCTION
    return DecompositionType.ATOMIC


# ---------------------------------------------------------------------------
# Verbalization of program fragments

_FILTER_PHRASE = {
    "filter_eq": "is",
    "filter_not_eq": "is not",
    "filter_greater": "is greater than",
    "filter_less": "is less than",
    "filter_greater_eq": "is at least",
    "filter_less_eq": "is at most",
}
_COUNT_PHRASE = {
    "filter_eq": "equal to",
    "filter_not_eq": "not equal to",
    "filter_greater": "greater than",
    "filter_less": "less than",
    "filter_greater_eq": "at least",
    "filter_less_eq": "at most",
}


def _rowset_clause(rs: Program) -> str | None:
    """'when <col> is <val>'-style clause for a filtered row set."""
    if isinstance(rs, Op) and rs.name in _FILTER_PHRASE:
        if isinstance(rs.args[0], AllRows):
            col, lit = rs.args[1], rs.args[2]
            return f"when {col.name} {_FILTER_PHRASE[rs.name]} {lit.surface}"
        return None
    if isinstance(rs, Op) and rs.name == "argmax" and isinstance(rs.args[0], AllRows):
        return f"when {rs.args[1].name} is highest"
    if isinstance(rs, Op) and rs.name == "argmin" and isinstance(rs.args[0], AllRows):
        return f"when {rs.args[1].name} is lowest"
    return None


def question_for_value(v: Program) -> str:
    """A sub-question whose answer is the value of the subtree."""
    if isinstance(v, Op):
        if v.name == "max":
            return f"what is the maximum {v.args[1].name} ?"
        if v.name == "min":
            return f"what is the minimum {v.args[1].name} ?"
        if v.name == "sum":
            return f"what is the total {v.args[1].name} ?"
        if v.name == "avg":
            return f"what is the average {v.args[1].name} ?"
        if v.name == "count":
            rs = v.args[0]
            if isinstance(rs, AllRows):
                return "how many rows are there ?"
            if isinstance(rs, Op) and rs.name in _COUNT_PHRASE and isinstance(rs.args[0], AllRows):
                col, lit = rs.args[1], rs.args[2]
                return f"how many rows have {col.name} {_COUNT_PHRASE[rs.name]} {lit.surface} ?"
            raise TemplateError(f"no question form for {print_program(v)}")
        if v.name == "hop":
            rs, col = v.args
            if isinstance(rs, AllRows):
                return f"what is the {col.name} ?"
            clause = _rowset_clause(rs)
            if clause is not None:
                return f"what is the {col.name} {clause} ?"
            raise TemplateError(f"no question form for {print_program(v)}")
    raise TemplateError(f"no question form for {print_program(v)}")


def phrase_for_value(v: Program) -> str:
    """Noun phrase naming the value of the subtree."""
    if isinstance(v, Literal):
        return v.surface
    if isinstance(v, Op):
        if v.name in ("max", "min"):
            return f"the {'maximum' if v.name == 'max' else 'minimum'} {v.args[1].name}"
        if v.name == "sum":
            return f"the total {v.args[1].name}"
        if v.name == "avg":
            return f"the average {v.args[1].name}"
        if v.name == "count":
            rs = v.args[0]
            if isinstance(rs, AllRows):
                return "the number of rows"
            if isinstance(rs, Op) and rs.name in _COUNT_PHRASE and isinstance(rs.args[0], AllRows):
                col, lit = rs.args[1], rs.args[2]
                return f"the number of rows with {col.name} {_COUNT_PHRASE[rs.name]} {lit.surface}"
            raise TemplateError(f"no phrase for {print_program(v)}")
        if v.name == "hop":
            rs, col = v.args
            if isinstance(rs, AllRows):
                return f"the {col.name}"
            clause = _rowset_clause(rs)
            if clause is not None:
                return f"the {col.name} {clause}"
            raise TemplateError(f"no phrase for {print_program(v)}")
    raise TemplateError(f"no phrase for {print_program(v)}")


def claim_for_bool(b: Program) -> str:
    """Declarative sub-statement verbalizing a boolean subtree."""
    if not isinstance(b, Op):
        raise TemplateError("boolean subtree expected")
    if b.name in ("eq", "not_eq"):
        left, right = b.args
        joiner = "is" if b.name == "eq" else "is not"
        if isinstance(right, Literal):
            return f"{phrase_for_value(left)} {joiner} {right.surface}"
        joiner = "is equal to" if b.name == "eq" else "is not equal to"
        return f"{phrase_for_value(left)} {joiner} {phrase_for_value(right)}"
    if b.name in ("greater", "less"):
        left, right = b.args
        word = "greater" if b.name == "greater" else "less"
        return f"{phrase_for_value(left)} is {word} than {phrase_for_value(right)}"
    if b.name == "only":
        rs = b.args[0]
        if isinstance(rs, AllRows):
            return "there is only one row"
        if isinstance(rs, Op) and rs.name in _COUNT_PHRASE and isinstance(rs.args[0], AllRows):
            col, lit = rs.args[1], rs.args[2]
            return f"only one row has {col.name} {_COUNT_PHRASE[rs.name]} {lit.surface}"
        raise TemplateError(f"no claim for {print_program(b)}")
    if b.name == "and":
        return f"{claim_for_bool(b.args[0])} and {claim_for_bool(b.args[1])}"
    raise TemplateError(f"no claim for {print_program(b)}")


# ---------------------------------------------------------------------------
# Template instantiation

def _literals_in_text(p: Program, text: str) -> bool:
    """True iff every literal of the subtree occurs in the text."""
    padded = f" {text} "
    return all(f" {lit} " in padded for lit in literals_of(p))


def instantiate_template(
    s: Statement, z: Program, c: DecompositionType, t: Table
) -> list[Subproblem]:
    """Fill the decomposition template for type c from program arguments.

    Raises TemplateError when a slot cannot be filled from z.
    """
    if c == DecompositionType.ATOMIC:
        raise TemplateError("atomic statements are not decomposed")
    if not isinstance(z, Op) or not is_splittable(z):
        raise TemplateError("program is not splittable")
    left, right = z.args

    if c == DecompositionType.SUPERLATIVE:
        left_sup = skeleton(left).contains(_SUPERLATIVE_OPS)
        right_sup = skeleton(right).contains(_SUPERLATIVE_OPS)
        if left_sup == right_sup:
            raise TemplateError("superlative side is not unique")
        sup_side, other_side = (left, right) if left_sup else (right, left)
        return [
            Subproblem("question", question_for_value(sup_side), sup_side),
            Subproblem("question", question_for_value(other_side), other_side),
        ]

    if c == DecompositionType.COMPARATIVE:
        if z.name not in ("greater", "less"):
            raise TemplateError("comparative template needs a greater/less root")
        return [
            Subproblem("question", question_for_value(left), left),
            Subproblem("question", question_for_value(right), right),
        ]

    if c == DecompositionType.CONJUNCTION:
        if z.name != "and":
            raise TemplateError("conjunction template needs an and root")
        probes = [left, right]
        clauses = s.text.split(" and ")
        texts = None
        if len(clauses) == 2 and all(cl.strip() for cl in clauses):
            # use the statement's own clauses only when each conjunct's
            # literals occur in the clause it would be paired with
            stripped = [cl.strip() for cl in clauses]
            for assignment in ((0, 1), (1, 0)):
                ok = all(
                    _literals_in_text(probes[j], stripped[i])
                    for j, i in zip((0, 1), assignment)
                )
                if ok:
                    texts = [stripped[i] for i in assignment]
                    break
        if texts is None:
            texts = [claim_for_bool(left), claim_for_bool(right)]
        return [
            Subproblem("statement", texts[0], probes[0]),
            Subproblem("statement", texts[1], probes[1]),
        ]

    # uniqueness: a count side plus a restated property of the named row
    if z.name not in ("eq", "not_eq"):
        raise TemplateError("uniqueness template needs an eq/not_eq root")
    if isinstance(left, Op) and left.name == "count":
        count_side, other_side = left, right
    elif isinstance(right, Op) and right.name == "count":
        count_side, other_side = right, left
    else:
        raise TemplateError("uniqueness template needs a count side")
    joiner = "is equal to" if z.name == "eq" else "is not equal to"
    claim = f"{phrase_for_value(other_side)} {joiner} {phrase_for_value(count_side)}"
    return [
        Subproblem("question", question_for_value(count_side), count_side),
        Subproblem("statement", claim, z),
    ]


# ---------------------------------------------------------------------------
# Pseudo-dataset construction

def build_pseudo_dataset(
    triples: list[tuple[Table, Statement, Program]],
    held_out_ids: frozenset[str] | set[str] = frozenset(),
) -> list[PseudoSample]:
    """Turn selected (table, statement, program) triples into pseudo samples.

    Statements in held_out_ids are excluded; triples whose skeleton is
    atomic or whose template cannot be filled are dropped. Output is
    sorted by statement id.
    """
    samples = []
    for t, s, z in triples:
        if s.id in held_out_ids:
            continue
        c = classify_skeleton(skeleton(z))
        if c == DecompositionType.ATOMIC:
            continue
        try:
            subs = instantiate_template(s, z, c, t)
        except TemplateError:
            continue
        try:
            label = int(execute(z, t).as_bool())
        except ExecError:
            continue
        samples.append(
            PseudoSample(
                statement_id=s.id,
                statement_text=s.text,
                table_id=t.id,
                dtype=c,
                subproblems=tuple(subs),
                provenance="original",
                program=z,
                label=label,
            )
        )
    samples.sort(key=lambda x: x.statement_id)
    return samples


# ---------------------------------------------------------------------------
# Augmentation

def _replace_word(text: str, old: str, new: str) -> str:
    return re.sub(rf"(?<!\w){re.escape(old)}(?!\w)", new, text)


def _replace_literal(p: Program, old: str, new: str) -> Program:
    if isinstance(p, Literal) and p.surface == old:
        return Literal(new)
    if isinstance(p, Op):
        return Op(p.name, tuple(_replace_literal(a, old, new) for a in p.args))
    return p


def augment_entity_swap(
    sample: PseudoSample,
    t: Table,
    links: list[EntityLink],
    rng_seed: int,
) -> PseudoSample | None:
    """Swap one linked entity for a different value from the same column.

    The swap is applied to the statement text, the program (and probes),
    and the subproblem texts; the label is recomputed by executing the
    modified program. Returns None when no linked entity appears in the
    program, the column has no alternative value, or the modified program
    fails to execute.
    """
    lits = set(literals_of(sample.program))
    eligible = [ln for ln in links if ln.surface in lits]
    if not eligible:
        return None
    rng = random.Random(rng_seed)
    link = rng.choice(eligible)
    alternatives = [v for v in t.column_surfaces(link.col) if v != link.surface]
    if not alternatives:
        return None
    new_val = rng.choice(alternatives)
    new_program = _replace_literal(sample.program, link.surface, new_val)
    try:
        new_label = int(execute(new_program, t).as_bool())
    except ExecError:
        return None
    new_subs = tuple(
        Subproblem(
            kind=sub.kind,
            text=_replace_word(sub.text, link.surface, new_val),
            probe=_replace_literal(sub.probe, link.surface, new_val)
            if sub.probe is not None
            else None,
        )
        for sub in sample.subproblems
    )
    return replace(
        sample,
        statement_text=_replace_word(sample.statement_text, link.surface, new_val),
        subproblems=new_subs,
        provenance="entity_swap",
        program=new_program,
        label=new_label,
    )


_ANTONYM_PAIRS = [
    ("higher", "lower"), ("highest", "lowest"), ("longer", "shorter"),
    ("longest", "shortest"), ("most", "least"), ("more", "less"),
    ("greater", "smaller"), ("largest", "smallest"), ("latest", "earliest"),
    ("later", "earlier"), ("best", "worst"), ("fastest", "slowest"),
    ("faster", "slower"), ("maximum", "minimum"), ("top", "bottom"),
]
ANTONYMS: dict[str, str] = {}
for _a, _b in _ANTONYM_PAIRS:
    ANTONYMS[_a] = _b
    ANTONYMS[_b] = _a

_OP_MIRROR = {"max": "min", "min": "max", "argmax": "argmin",
              "argmin": "argmax", "greater": "less", "less": "greater"}


def swap_antonyms(text: str) -> str:
    """Token-wise antonym substitution; an involution on the lexicon."""
    return " ".join(ANTONYMS.get(tok, tok) for tok in text.split())


def mirror_program(p: Program) -> Program:
    if isinstance(p, Op):
        return Op(_OP_MIRROR.get(p.name, p.name), tuple(mirror_program(a) for a in p.args))
    return p


def augment_antonym(sample: PseudoSample, t: Table) -> PseudoSample | None:
    """Invert the superlative/comparative wording and mirror the operators.

    Only superlative and comparative samples are eligible; the label is
    recomputed from the mirrored program. Returns None when the text
    contains no lexicon word or the mirrored program fails to execute.
    """
    if sample.dtype not in (DecompositionType.SUPERLATIVE, DecompositionType.COMPARATIVE):
        return None
    new_text = swap_antonyms(sample.statement_text)
    if new_text == sample.statement_text:
        return None
    new_program = mirror_program(sample.program)
    try:
        new_label = int(execute(new_program, t).as_bool())
    except ExecError:
        return None
    new_subs = tuple(
        Subproblem(
            kind=sub.kind,
            text=swap_antonyms(sub.text),
            probe=mirror_program(sub.probe) if sub.probe is not None else None,
        )
        for sub in sample.subproblems
    )
    return replace(
        sample,
        statement_text=new_text,
        subproblems=new_subs,
        provenance="antonym",
        program=new_program,
        label=new_label,
    )


# ---------------------------------------------------------------------------
# Inference-time decomposition

def _named_numeric_column(s: Statement, t: Table) -> str | None:
    tokens = set(s.tokens())
    for name, kind in t.columns:
        if kind == "number" and set(name.split()) <= tokens:
            return name
    return None


def _link_col_name(t: Table, link: EntityLink) -> str:
    return t.columns[link.col][0]


def _hop_probe(t: Table, link: EntityLink, col: str) -> Program:
    return Op(
        "hop",
        (
            Op("filter_eq", (ALL_ROWS, ColumnRef(_link_col_name(t, link)), Literal(link.surface))),
            ColumnRef(col),
        ),
    )


def _pattern_decompose(
    s: Statement, t: Table, c: DecompositionType, links: list[EntityLink]
) -> list[Subproblem]:
    """Best-effort slot filling from text patterns; [] when slots are missing."""
    if c == DecompositionType.COMPARATIVE:
        col = _named_numeric_column(s, t)
        if col is None or len(links) < 2:
            return []
        out = []
        for link in links[:2]:
            text = f"what is the {col} when {_link_col_name(t, link)} is {link.surface} ?"
            out.append(Subproblem("question", text, _hop_probe(t, link, col)))
        return out

    if c == DecompositionType.SUPERLATIVE:
        col = _named_numeric_column(s, t)
        if col is None or not links:
            return []
        low = any(tok in _LOW_WORDS for tok in s.tokens())
        agg = Op("min" if low else "max", (ALL_ROWS, ColumnRef(col)))
        link = links[0]
        return [
            Subproblem("question", question_for_value(agg), agg),
            Subproblem(
                "question",
                f"what is the {col} when {_link_col_name(t, link)} is {link.surface} ?",
                _hop_probe(t, link, col),
            ),
        ]

    if c == DecompositionType.CONJUNCTION:
        clauses = s.text.split(" and ")
        if len(clauses) != 2 or not all(cl.strip() for cl in clauses):
            return []
        boundary = len(clauses[0].split()) + 1  # token index of the second clause
        out = []
        for i, clause in enumerate(cl.strip() for cl in clauses):
            lo = 0 if i == 0 else boundary
            hi = boundary - 1 if i == 0 else len(s.tokens())
            probe = _clause_probe(clause, t, [ln for ln in links if lo <= ln.start < hi])
            if probe is None:
                return []
            out.append(Subproblem("statement", clause, probe))
        return out

    if c == DecompositionType.UNIQUENESS:
        if "number of rows" not in s.text or len(links) < 2:
            return []
        counts = [
            Op("count", (Op("filter_eq", (ALL_ROWS, ColumnRef(_link_col_name(t, ln)),
                                          Literal(ln.surface))),))
            for ln in links[:2]
        ]
        probe = Op("eq", (counts[0], counts[1]))
        return [
            Subproblem("question", question_for_value(counts[0]), counts[0]),
            Subproblem(
                "statement",
                f"{phrase_for_value(counts[1])} is equal to {phrase_for_value(counts[0])}",
                probe,
            ),
        ]

    return []


_NUM_RE = re.compile(r"^-?\d+(\.\d+)?$")


def _clause_probe(clause: str, t: Table, links: list[EntityLink]) -> Program | None:
    """Probe for one conjunct clause; handles the two clause shapes
    'the <col> when <key> is <val> is <num>' and
    'the highest/lowest <col> is more/less than <num>'."""
    tokens = clause.split()
    numbers = [tok for tok in tokens if _NUM_RE.match(tok.replace(",", ""))]
    col = None
    for name, kind in t.columns:
        if kind == "number" and set(name.split()) <= set(tokens):
            col = name
            break
    if col is None or not numbers:
        return None
    tail = numbers[-1].replace(",", "")
    sup = [tok for tok in tokens if tok in _SUPERLATIVE_WORDS]
    if sup:
        agg = Op("min" if sup[0] in _LOW_WORDS else "max", (ALL_ROWS, ColumnRef(col)))
        if "more than" in clause or "greater than" in clause:
            return Op("greater", (agg, Literal(tail)))
        if "less than" in clause or "smaller than" in clause:
            return Op("less", (agg, Literal(tail)))
        return Op("eq", (agg, Literal(tail)))
    if links:
        link = next((ln for ln in links if ln.surface != tail), links[0])
        return Op("eq", (_hop_probe(t, link, col), Literal(tail)))
    return None


def decompose_statement(
    s: Statement,
    t: Table,
    m: SelectorModel,
    cs: CandidateSet,
) -> tuple[DecompositionType, list[Subproblem]]:
    """Decompose through the selected program when possible, else through
    lexical type detection with pattern-based slots, else atomic.

    Statements the lexical detector marks atomic are never decomposed:
    without that gate an unlabeled statement would always receive some
    splittable candidate, however implausible.
    """
    detected = detect_type_text(s)
    if detected == DecompositionType.ATOMIC:
        return DecompositionType.ATOMIC, []
    links = link_entities(s, t)
    z = select_program(m, s, cs, links, t)
    if z is not None:
        c = classify_skeleton(skeleton(z))
        if c != DecompositionType.ATOMIC:
            try:
                return c, instantiate_template(s, z, c, t)
            except TemplateError:
                pass
    subs = _pattern_decompose(s, t, detected, links)
    if subs:
        return detected, subs
    return DecompositionType.ATOMIC, []


# ---------------------------------------------------------------------------
# Well-formedness filtering

def _mentions_table(text: str, t: Table) -> bool:
    padded = f" {text} "
    for name, _ in t.columns:
        if f" {name} " in padded:
            return True
    for surface in t.cell_surfaces():
        if f" {surface} " in padded:
            return True
    return False


def filter_wellformed(
    subs: list[Subproblem], t: Table, original_text: str | None = None
) -> list[Subproblem]:
    """All-or-nothing filter: every subproblem must reference the table,
    differ from the original statement, and have an executable probe."""
    if not subs:
        return []
    for sub in subs:
        if not sub.text.strip():
            return []
        if original_text is not None and sub.text == original_text:
            return []
        if not _mentions_table(sub.text, t):
            return []
        if sub.probe is not None:
            try:
                execute(sub.probe, t)
            except ExecError:
                return []
    return list(subs)
