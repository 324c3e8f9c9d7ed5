"""Solve decomposed subproblems by probe execution and assemble evidence.

Sub-questions are answered and sub-statements verified by executing the
probe program each subproblem carries; the (subproblem, answer) pairs
form the intermediate evidence consumed by the fusion model. Statements
without a decomposition get the "no evidence" placeholder pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date

from .decomposer import Subproblem
from .errors import ExecError, SolveError
from .program_dsl import RuntimeValue, execute
from .table_store import Table

PLACEHOLDER_ITEM = ("no evidence", "")


@dataclass(frozen=True)
class Evidence:
    """Ordered (subproblem text, answer) pairs."""

    items: tuple[tuple[str, str], ...]

    def pair_texts(self) -> list[str]:
        return [f"{d} {a}".strip() for d, a in self.items]

    def is_placeholder(self) -> bool:
        return self.items == (PLACEHOLDER_ITEM,)

    def to_json(self) -> dict:
        return {"evidence": [{"d": d, "a": a} for d, a in self.items]}

    @classmethod
    def from_json(cls, obj: dict) -> "Evidence":
        return cls(items=tuple((e["d"], e["a"]) for e in obj["evidence"]))


def placeholder_evidence() -> Evidence:
    return Evidence(items=(PLACEHOLDER_ITEM,))


def format_value(result: RuntimeValue) -> str:
    """Canonical answer string: shortest decimal for numbers, ISO for
    dates, verbatim text, true/false for booleans."""
    if result.kind == "number":
        x = result.value
        if x == int(x) and abs(x) < 1e15:
            return str(int(x))
        return repr(x)
    if result.kind == "date":
        assert isinstance(result.value, date)
        return result.value.isoformat()
    if result.kind == "bool":
        return "true" if result.value else "false"
    if result.kind == "rowset":
        raise SolveError("a probe must produce a value, not a row set")
    return str(result.value)


def answer_subquestion(sub: Subproblem, t: Table) -> str:
    """Execute a sub-question's probe and render the answer."""
    if sub.kind != "question":
        raise SolveError(f"not a question: {sub.text!r}")
    if sub.probe is None:
        raise SolveError(f"question has no probe: {sub.text!r}")
    try:
        result = execute(sub.probe, t)
    except ExecError as exc:
        raise SolveError(f"probe failed for {sub.text!r}: {exc}") from exc
    return format_value(result)


def verify_substatement(sub: Subproblem, t: Table) -> str:
    """Execute a sub-statement's boolean probe; returns "true" or "false"."""
    if sub.kind != "statement":
        raise SolveError(f"not a statement: {sub.text!r}")
    if sub.probe is None:
        raise SolveError(f"statement has no probe: {sub.text!r}")
    try:
        result = execute(sub.probe, t)
    except ExecError as exc:
        raise SolveError(f"probe failed for {sub.text!r}: {exc}") from exc
    if result.kind != "bool":
        raise SolveError(f"probe of {sub.text!r} is not boolean")
    return format_value(result)


def assemble_evidence(subs: list[Subproblem], t: Table) -> Evidence:
    """Answer every subproblem and pair it with its answer, in order.

    An empty decomposition yields the placeholder; any solving failure
    also falls back to the placeholder (such decompositions are filtered
    upstream, this is the defensive path).
    """
    if not subs:
        return placeholder_evidence()
    items = []
    try:
        for sub in subs:
            if sub.kind == "question":
                answer = answer_subquestion(sub, t)
            else:
                answer = verify_substatement(sub, t)
            items.append((sub.text, answer))
    except SolveError:
        return placeholder_evidence()
    return Evidence(items=tuple(items))
