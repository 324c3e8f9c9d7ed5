"""Metrics and report schemas: BLEU-4, accuracy by type/split, coverage."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

from .errors import MetricError

# ---------------------------------------------------------------------------
# BLEU-4

def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu4(
    hypotheses: list[list[str]],
    references: list[list[str]],
    smooth: bool = False,
) -> float:
    """Corpus-level BLEU with n-gram orders 1..4.

    Modified n-gram precisions are pooled over the whole corpus, combined
    by geometric mean, and multiplied by the brevity penalty
    exp(1 - r/c) when the hypothesis corpus is shorter than the
    reference corpus. Orders with no hypothesis n-grams anywhere in the
    corpus (very short sentences) are dropped from the mean so that
    identical corpora always score 1. Without smoothing the score is 0
    when any pooled n-gram precision is 0; with smooth=True an add-one
    floor is applied to zero numerators (for spot checks on single
    sentences).
    """
    if not hypotheses or len(hypotheses) != len(references):
        raise MetricError("need equal, non-empty hypothesis and reference lists")
    matches = [0] * 4
    totals = [0] * 4
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, 5):
            counts = _ngram_counts(hyp, n)
            if not counts:
                continue
            ref_counts = _ngram_counts(ref, n)
            totals[n - 1] += sum(counts.values())
            matches[n - 1] += sum(min(c, ref_counts[g]) for g, c in counts.items())
    if hyp_len == 0:
        return 0.0
    logs = []
    for m, t in zip(matches, totals):
        if t == 0:
            continue  # no n-grams of this order anywhere in the corpus
        if m == 0:
            if not smooth:
                return 0.0
            m, t = 1, t + 1
        logs.append(math.log(m / t))
    if not logs:
        return 0.0
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return bp * math.exp(sum(logs) / len(logs))


def bleu4_texts(hypotheses: list[str], references: list[str], smooth: bool = False) -> float:
    """BLEU over whitespace-tokenized, already-lowercased texts."""
    return bleu4([h.split() for h in hypotheses], [r.split() for r in references], smooth)


# ---------------------------------------------------------------------------
# Accuracy report

@dataclass
class Report:
    """Verification accuracy overall, by decomposition type, and by split."""

    overall: float
    n: int
    per_type: dict[str, tuple[float, float]] = field(default_factory=dict)  # acc, share
    per_split: dict[str, float] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "overall": self.overall,
            "n": self.n,
            "per_type": {k: {"accuracy": a, "share": s} for k, (a, s) in self.per_type.items()},
            "per_split": dict(self.per_split),
            "counts": dict(self.counts),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Report":
        return cls(
            overall=obj["overall"],
            n=obj["n"],
            per_type={k: (v["accuracy"], v["share"]) for k, v in obj["per_type"].items()},
            per_split=dict(obj["per_split"]),
            counts={k: int(v) for k, v in obj["counts"].items()},
        )


def _type_name(t) -> str:
    return t.value if hasattr(t, "value") else str(t)


def accuracy_report(
    preds: list[int],
    labels: list[int],
    types: list | None = None,
    splits: list[str] | None = None,
) -> Report:
    """Overall plus per-type and per-split accuracy with type shares."""
    if not preds or len(preds) != len(labels):
        raise MetricError("preds and labels must be aligned and non-empty")
    if types is not None and len(types) != len(preds):
        raise MetricError("types misaligned")
    if splits is not None and len(splits) != len(preds):
        raise MetricError("splits misaligned")
    n = len(preds)
    correct = sum(1 for p, y in zip(preds, labels) if int(p) == int(y))
    report = Report(overall=correct / n, n=n, counts={"total": n})
    if types is not None:
        by_type: dict[str, list[bool]] = {}
        for p, y, c in zip(preds, labels, types):
            by_type.setdefault(_type_name(c), []).append(int(p) == int(y))
        for name in sorted(by_type):
            hits = by_type[name]
            report.per_type[name] = (sum(hits) / len(hits), len(hits) / n)
            report.counts[name] = len(hits)
    if splits is not None:
        by_split: dict[str, list[bool]] = {}
        for p, y, sp in zip(preds, labels, splits):
            by_split.setdefault(sp, []).append(int(p) == int(y))
        for name in sorted(by_split):
            hits = by_split[name]
            report.per_split[name] = sum(hits) / len(hits)
    return report


# ---------------------------------------------------------------------------
# Coverage report

COVERAGE_COLUMNS = ("train", "val", "test", "simple", "complex")


@dataclass
class CoverageReport:
    """Percent of statements with a valid decomposition, per split."""

    percents: dict[str, float | None] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)

    def columns(self) -> list[tuple[str, float | None]]:
        out = [(name, self.percents.get(name)) for name in COVERAGE_COLUMNS]
        for name in sorted(self.percents):
            if name not in COVERAGE_COLUMNS:
                out.append((name, self.percents[name]))
        return out

    def to_json(self) -> dict:
        return {
            "percents": {k: self.percents[k] for k in sorted(self.percents)},
            "counts": {k: self.counts[k] for k in sorted(self.counts)},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CoverageReport":
        return cls(
            percents={k: v for k, v in obj["percents"].items()},
            counts={k: int(v) for k, v in obj["counts"].items()},
        )


def coverage_report(
    decompositions: dict[str, bool],
    split_of: dict[str, str | tuple[str, ...] | list[str]],
) -> CoverageReport:
    """Valid-decomposition percentage per split.

    split_of may map a statement id to one split tag or to several (a
    test statement also tagged simple or complex contributes to each).
    """
    totals: dict[str, int] = {}
    valid: dict[str, int] = {}
    for sid, ok in decompositions.items():
        tags = split_of.get(sid, ())
        if isinstance(tags, str):
            tags = (tags,)
        for tag in tags:
            totals[tag] = totals.get(tag, 0) + 1
            if ok:
                valid[tag] = valid.get(tag, 0) + 1
    report = CoverageReport()
    for tag in totals:
        report.percents[tag] = 100.0 * valid.get(tag, 0) / totals[tag]
        report.counts[tag] = totals[tag]
    return report


# ---------------------------------------------------------------------------
# Plain-text rendering

def _fmt(x: float | None, nd: int = 1) -> str:
    return "-" if x is None else f"{x * 1:.{nd}f}"


def render_accuracy_table(rows: dict[str, Report], split_order: list[str]) -> str:
    """Aligned model-by-split accuracy table (percent)."""
    header = ["model"] + split_order
    lines = [header]
    for name in rows:
        rep = rows[name]
        line = [name]
        for split in split_order:
            acc = rep.per_split.get(split)
            line.append(_fmt(None if acc is None else 100.0 * acc))
        lines.append(line)
    return _align(lines)


def render_type_table(reports: dict[str, Report]) -> str:
    """Per-decomposition-type accuracy table with type shares."""
    names = sorted({t for rep in reports.values() for t in rep.per_type})
    lines = [["type", "share"] + list(reports)]
    for t in names:
        share = None
        for rep in reports.values():
            if t in rep.per_type:
                share = rep.per_type[t][1]
                break
        row = [t, "-" if share is None else f"({share * 100:.0f}%)"]
        for rep in reports.values():
            acc = rep.per_type.get(t)
            row.append(_fmt(None if acc is None else 100.0 * acc[0]))
        lines.append(row)
    return _align(lines)


def render_coverage_table(cov: CoverageReport) -> str:
    cols = cov.columns()
    lines = [[name for name, _ in cols], [_fmt(pct) for _, pct in cols]]
    return _align(lines)


def _align(lines: list[list[str]]) -> str:
    widths = [max(len(row[i]) for row in lines) for i in range(len(lines[0]))]
    out = []
    for row in lines:
        out.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(out) + "\n"


def dumps_report(obj: dict) -> str:
    """Deterministic JSON rendering for report artifacts."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"
