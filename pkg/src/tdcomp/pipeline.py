"""Staged pipeline with persisted JSONL/JSON artifacts.

Stages (in dependency order): ingest, synthesize, select, build-pseudo,
augment, decompose, solve, train-fusion, verify, evaluate, report. Each
stage reads only the documented artifacts of earlier stages and writes
its own under <output_dir>/<stage>/. Every artifact is self-describing
(JSONL files start with a header record carrying "schema_version" and
"kind"; JSON files carry a top-level "schema_version") and re-running a
stage with identical inputs and seeds produces byte-identical files.

All randomness flows from the explicit seeds in the configuration; there
are no wall-clock defaults anywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .decomposer import (
    DecompositionType,
    PseudoSample,
    Subproblem,
    build_pseudo_dataset,
    augment_antonym,
    augment_entity_swap,
    decompose_statement,
    filter_wellformed,
)
from .errors import ConfigError, StageError, TrainError
from .evaluation import (
    CoverageReport,
    Report,
    accuracy_report,
    bleu4_texts,
    coverage_report,
    dumps_report,
    render_accuracy_table,
    render_coverage_table,
    render_type_table,
)
from .fusion import FusionModel, load_fusion, predict, save_fusion, train_fusion
from .program_dsl import parse_program, print_program
from .subsolver import Evidence, assemble_evidence, placeholder_evidence
from .synthesis import (
    CandidateSet,
    candidate_set_from_json,
    candidate_set_to_json,
    enumerate_candidates,
    load_selector,
    save_selector,
    train_selector,
)
from .table_store import Statement, Table, link_entities, load_statements, load_tables_dir

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# Configuration

@dataclass
class PipelineConfig:
    tables_dir: str
    statements_file: str
    output_dir: str
    seeds: dict[str, int]
    gamma: float = 0.2
    enum_budget: int = 200
    enum_depth: int = 4
    selector_epochs: int = 15
    selector_lr: float = 0.5
    selector_candidate_cap: int = 50
    fusion_dim: int = 64
    fusion_lr: float = 0.05
    fusion_epochs: int = 30
    fusion_batch: int = 16
    augment_swaps_per_sample: int = 1
    augment_antonym: bool = True
    synthetic: dict | None = None

    def out(self, *parts: str) -> Path:
        return Path(self.output_dir).joinpath(*parts)


_REQUIRED_SEEDS = ("selector", "fusion", "augment")


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return config_from_json(obj)


def config_from_json(obj: dict) -> PipelineConfig:
    for key in ("tables_dir", "statements_file", "output_dir", "seeds"):
        if key not in obj:
            raise ConfigError(f"config is missing required key {key!r}")
    seeds = obj["seeds"]
    if not isinstance(seeds, dict):
        raise ConfigError("seeds must be an object")
    for name in _REQUIRED_SEEDS:
        if name not in seeds or not isinstance(seeds[name], int):
            raise ConfigError(f"seeds.{name} is required and must be an integer")
    known = {f.name for f in PipelineConfig.__dataclass_fields__.values()}  # type: ignore[attr-defined]
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = PipelineConfig(**obj)
    _validate(cfg)
    return cfg


def _validate(cfg: PipelineConfig) -> None:
    checks = [
        (cfg.gamma > 0, "gamma must be > 0"),
        (cfg.enum_budget >= 1, "enum_budget must be >= 1"),
        (1 <= cfg.enum_depth <= 6, "enum_depth must be in [1, 6]"),
        (cfg.selector_epochs >= 0, "selector_epochs must be >= 0"),
        (cfg.selector_lr > 0, "selector_lr must be > 0"),
        (cfg.selector_candidate_cap >= 1, "selector_candidate_cap must be >= 1"),
        (cfg.fusion_dim >= 2, "fusion_dim must be >= 2"),
        (cfg.fusion_lr > 0, "fusion_lr must be > 0"),
        (cfg.fusion_epochs >= 0, "fusion_epochs must be >= 0"),
        (cfg.fusion_batch >= 1, "fusion_batch must be >= 1"),
        (cfg.augment_swaps_per_sample >= 0, "augment_swaps_per_sample must be >= 0"),
    ]
    for ok, message in checks:
        if not ok:
            raise ConfigError(message)


# ---------------------------------------------------------------------------
# Artifact helpers

def _write_jsonl(path: Path, kind: str, records: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"schema_version": SCHEMA_VERSION, "kind": kind},
                            sort_keys=True) + "\n")
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _read_jsonl(path: Path, kind: str) -> list[dict]:
    if not path.exists():
        raise StageError(f"missing upstream artifact: {path}")
    records = []
    with path.open(encoding="utf-8") as fh:
        header = None
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if lineno == 0:
                header = obj
                if header.get("kind") != kind or header.get("schema_version") != SCHEMA_VERSION:
                    raise StageError(
                        f"{path}: expected kind={kind!r} schema_version={SCHEMA_VERSION}, "
                        f"got {header}"
                    )
                continue
            records.append(obj)
    if header is None:
        raise StageError(f"{path}: empty artifact")
    return records


def _write_json(path: Path, obj: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    obj = {"schema_version": SCHEMA_VERSION, **obj}
    path.write_text(dumps_report(obj), encoding="utf-8")


def _read_json(path: Path) -> dict:
    if not path.exists():
        raise StageError(f"missing upstream artifact: {path}")
    obj = json.loads(path.read_text(encoding="utf-8"))
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise StageError(f"{path}: unsupported schema_version {obj.get('schema_version')}")
    return obj


def _load_ingested(cfg: PipelineConfig) -> tuple[dict[str, Table], list[Statement]]:
    tables_obj = _read_json(cfg.out("ingest", "tables.json"))
    tables = {t["id"]: Table.from_json(t) for t in tables_obj["tables"]}
    records = _read_jsonl(cfg.out("ingest", "statements.jsonl"), "statements")
    statements = [Statement.from_json(r) for r in records]
    return tables, statements


# ---------------------------------------------------------------------------
# Stages

def stage_ingest(cfg: PipelineConfig) -> None:
    tables = load_tables_dir(cfg.tables_dir)
    statements = load_statements(cfg.statements_file, tables)
    _write_json(
        cfg.out("ingest", "tables.json"),
        {"tables": [tables[tid].to_json() for tid in sorted(tables)]},
    )
    _write_jsonl(
        cfg.out("ingest", "statements.jsonl"),
        "statements",
        [s.to_json() for s in statements],
    )


def stage_synthesize(cfg: PipelineConfig) -> None:
    tables, statements = _load_ingested(cfg)
    records = []
    for s in statements:
        t = tables[s.table_id]
        links = link_entities(s, t)
        cs = enumerate_candidates(s, t, links, budget=cfg.enum_budget, depth=cfg.enum_depth)
        records.append(candidate_set_to_json(cs))
    _write_jsonl(cfg.out("synthesize", "candidates.jsonl"), "candidates", records)


def _load_candidates(cfg: PipelineConfig) -> dict[str, CandidateSet]:
    records = _read_jsonl(cfg.out("synthesize", "candidates.jsonl"), "candidates")
    return {r["statement_id"]: candidate_set_from_json(r) for r in records}


def stage_select(cfg: PipelineConfig) -> None:
    tables, statements = _load_ingested(cfg)
    candidates = _load_candidates(cfg)
    links_of = {s.id: link_entities(s, tables[s.table_id]) for s in statements}
    train = [s for s in statements if s.split == "train" and s.label is not None]
    data = [(s, candidates[s.id]) for s in train if s.id in candidates]
    try:
        model = train_selector(
            data,
            gamma=cfg.gamma,
            epochs=cfg.selector_epochs,
            lr=cfg.selector_lr,
            seed=cfg.seeds["selector"],
            tables=tables,
            links_of=links_of,
            candidate_cap=cfg.selector_candidate_cap,
        )
    except TrainError:
        model = None
    if model is None:
        from .synthesis import SelectorModel

        model = SelectorModel(weights={}, gamma=cfg.gamma)
    save_selector(model, cfg.out("select", "selector.json"))
    # label-consistent selections for the train split feed pseudo-dataset
    # construction; this is the weak-supervision path
    from .synthesis import select_program

    selections = []
    for s in train:
        cs = candidates.get(s.id)
        z = None
        if cs is not None:
            z = select_program(model, s, cs, links_of[s.id], tables[s.table_id])
        selections.append(
            {"statement_id": s.id, "program": print_program(z) if z is not None else None}
        )
    _write_jsonl(cfg.out("select", "selections.jsonl"), "selections", selections)


def stage_build_pseudo(cfg: PipelineConfig) -> None:
    tables, statements = _load_ingested(cfg)
    by_id = {s.id: s for s in statements}
    records = _read_jsonl(cfg.out("select", "selections.jsonl"), "selections")
    held_out = {s.id for s in statements if s.split != "train"}
    triples = []
    for rec in records:
        if rec["program"] is None:
            continue
        s = by_id[rec["statement_id"]]
        triples.append((tables[s.table_id], s, parse_program(rec["program"])))
    samples = build_pseudo_dataset(triples, held_out_ids=held_out)
    _write_jsonl(cfg.out("pseudo", "pseudo.jsonl"), "pseudo",
                 [x.to_json() for x in samples])


def stage_augment(cfg: PipelineConfig) -> None:
    tables, statements = _load_ingested(cfg)
    by_id = {s.id: s for s in statements}
    records = _read_jsonl(cfg.out("pseudo", "pseudo.jsonl"), "pseudo")
    samples = [PseudoSample.from_json(r) for r in records]
    out = list(samples)
    seed = cfg.seeds["augment"]
    counts = {"original": len(samples), "entity_swap": 0, "antonym": 0}
    for i, sample in enumerate(samples):
        t = tables[sample.table_id]
        links = link_entities(by_id[sample.statement_id], t)
        for k in range(cfg.augment_swaps_per_sample):
            swapped = augment_entity_swap(sample, t, links, rng_seed=seed + 31 * i + k)
            if swapped is not None:
                out.append(swapped)
                counts["entity_swap"] += 1
        if cfg.augment_antonym:
            inverted = augment_antonym(sample, t)
            if inverted is not None:
                out.append(inverted)
                counts["antonym"] += 1
    _write_jsonl(cfg.out("pseudo", "augmented.jsonl"), "pseudo",
                 [x.to_json() for x in out])
    by_type: dict[str, int] = {}
    for x in out:
        by_type[x.dtype.value] = by_type.get(x.dtype.value, 0) + 1
    _write_json(cfg.out("pseudo", "augment_summary.json"),
                {"provenance": counts, "by_type": by_type, "total": len(out)})


def stage_decompose(cfg: PipelineConfig) -> None:
    tables, statements = _load_ingested(cfg)
    candidates = _load_candidates(cfg)
    selector_path = cfg.out("select", "selector.json")
    if not selector_path.exists():
        raise StageError(f"missing upstream artifact: {selector_path}")
    model = load_selector(selector_path)
    records = []
    for s in statements:
        t = tables[s.table_id]
        cs = candidates.get(s.id, CandidateSet(statement_id=s.id, candidates=()))
        # decomposition never sees the verification label
        unlabeled = replace(s, label=None)
        dtype, subs = decompose_statement(unlabeled, t, model, cs)
        kept = filter_wellformed(subs, t, original_text=s.text)
        records.append(
            {
                "statement_id": s.id,
                "type": dtype.value,
                "subproblems": [sub.to_json() for sub in kept],
                "valid": bool(kept),
            }
        )
    _write_jsonl(cfg.out("decompose", "decompositions.jsonl"), "decompositions", records)


def stage_solve(cfg: PipelineConfig) -> None:
    tables, statements = _load_ingested(cfg)
    by_id = {s.id: s for s in statements}
    records = _read_jsonl(cfg.out("decompose", "decompositions.jsonl"), "decompositions")
    out = []
    for rec in records:
        s = by_id[rec["statement_id"]]
        t = tables[s.table_id]
        subs = [Subproblem.from_json(x) for x in rec["subproblems"]]
        evidence = assemble_evidence(subs, t)
        out.append({"statement_id": s.id, **evidence.to_json()})
    _write_jsonl(cfg.out("solve", "evidence.jsonl"), "evidence", out)


def _load_evidence(cfg: PipelineConfig) -> dict[str, Evidence]:
    records = _read_jsonl(cfg.out("solve", "evidence.jsonl"), "evidence")
    return {r["statement_id"]: Evidence.from_json(r) for r in records}


def stage_train_fusion(cfg: PipelineConfig) -> None:
    tables, statements = _load_ingested(cfg)
    evidence = _load_evidence(cfg)
    train = [s for s in statements if s.split == "train" and s.label is not None]
    if not train:
        raise StageError("no labeled train statements for fusion training")
    data = [(s, tables[s.table_id], evidence[s.id], s.label) for s in train]
    base = FusionModel.create(d=cfg.fusion_dim, seed=cfg.seeds["fusion"])
    model = train_fusion(base, data, epochs=cfg.fusion_epochs, lr=cfg.fusion_lr,
                         seed=cfg.seeds["fusion"], batch_size=cfg.fusion_batch)
    save_fusion(model, cfg.out("fusion", "fusion.json"))
    # ablation twin: identical statements and tables, placeholder evidence
    data_ph = [(s, t, placeholder_evidence(), y) for s, t, _, y in data]
    model_ph = train_fusion(base, data_ph, epochs=cfg.fusion_epochs, lr=cfg.fusion_lr,
                            seed=cfg.seeds["fusion"], batch_size=cfg.fusion_batch)
    save_fusion(model_ph, cfg.out("fusion", "fusion_placeholder.json"))


def stage_verify(cfg: PipelineConfig) -> None:
    tables, statements = _load_ingested(cfg)
    evidence = _load_evidence(cfg)
    model = load_fusion(cfg.out("fusion", "fusion.json"))
    model_ph = load_fusion(cfg.out("fusion", "fusion_placeholder.json"))
    records = []
    for s in statements:
        if s.split not in ("val", "test") or s.label is None:
            continue
        t = tables[s.table_id]
        prob = predict(model, s, t, evidence[s.id])
        prob_ph = predict(model_ph, s, t, placeholder_evidence())
        records.append(
            {
                "statement_id": s.id,
                "split": s.split,
                "label": s.label,
                "prob": prob,
                "pred": int(prob >= 0.5),
                "prob_placeholder": prob_ph,
                "pred_placeholder": int(prob_ph >= 0.5),
            }
        )
    _write_jsonl(cfg.out("verify", "predictions.jsonl"), "predictions", records)


def dataset_stats(tables: dict[str, Table], statements: list[Statement]) -> dict:
    """Per-split sentence/table counts and mean table shape."""
    stats: dict[str, dict] = {}
    splits = sorted({s.split for s in statements})
    for split in splits + ["all"]:
        subset = [s for s in statements if split == "all" or s.split == split]
        used = sorted({s.table_id for s in subset})
        n_tables = len(used)
        mean_rows = sum(tables[tid].n_rows for tid in used) / n_tables if n_tables else 0.0
        mean_cols = sum(tables[tid].n_cols for tid in used) / n_tables if n_tables else 0.0
        stats[split] = {
            "sentences": len(subset),
            "tables": n_tables,
            "mean_rows": mean_rows,
            "mean_cols": mean_cols,
        }
    return stats


def stage_evaluate(cfg: PipelineConfig) -> None:
    tables, statements = _load_ingested(cfg)
    by_id = {s.id: s for s in statements}
    predictions = _read_jsonl(cfg.out("verify", "predictions.jsonl"), "predictions")
    decomp_records = _read_jsonl(cfg.out("decompose", "decompositions.jsonl"),
                                 "decompositions")
    decomp_by_id = {r["statement_id"]: r for r in decomp_records}

    def extra_tags(s: Statement) -> list[str]:
        tags = [s.split]
        if s.split == "test" and s.gold_type is not None:
            tags.append("simple" if s.gold_type == "atomic" else "complex")
        return tags

    metrics: dict = {}
    if predictions:
        labels = [r["label"] for r in predictions]
        types = [decomp_by_id[r["statement_id"]]["type"] for r in predictions]
        tags = [extra_tags(by_id[r["statement_id"]]) for r in predictions]
        for key, pred_key in (("with_evidence", "pred"), ("placeholder", "pred_placeholder")):
            preds = [r[pred_key] for r in predictions]
            report = accuracy_report(preds, labels, types, [t[0] for t in tags])
            # recom pute split accuracy over the expanded simple/complex tags
            by_tag: dict[str, list[bool]] = {}
            for p, y, tag_list in zip(preds, labels, tags):
                for tag in tag_list:
                    by_tag.setdefault(tag, []).append(int(p) == int(y))
            report.per_split = {k: sum(v) / len(v) for k, v in sorted(by_tag.items())}
            metrics[key] = report.to_json()

    valid_map = {r["statement_id"]: bool(r["valid"]) for r in decomp_records}
    split_of = {sid: tuple(extra_tags(by_id[sid])) for sid in valid_map}
    coverage = coverage_report(valid_map, split_of)
    metrics["coverage"] = coverage.to_json()

    hyps, refs = [], []
    for s in statements:
        if s.split != "val" or s.gold_decomposition is None:
            continue
        rec = decomp_by_id.get(s.id)
        if rec is None or not rec["subproblems"]:
            continue
        hyps.append(" ; ".join(x["text"] for x in rec["subproblems"]))
        refs.append(" ; ".join(s.gold_decomposition))
    metrics["bleu4_val"] = bleu4_texts(hyps, refs) if hyps else None
    metrics["bleu4_val_pairs"] = len(hyps)

    aug_path = cfg.out("pseudo", "augment_summary.json")
    metrics["pseudo"] = _read_json(aug_path) if aug_path.exists() else None
    metrics["dataset"] = dataset_stats(tables, statements)
    _write_json(cfg.out("evaluate", "metrics.json"), metrics)


def stage_report(cfg: PipelineConfig) -> None:
    metrics = _read_json(cfg.out("evaluate", "metrics.json"))
    lines = []
    split_order = ["val", "test", "simple", "complex"]
    if "with_evidence" in metrics:
        reports = {
            "placeholder": Report.from_json(metrics["placeholder"]),
            "with evidence": Report.from_json(metrics["with_evidence"]),
        }
        lines.append("verification accuracy (%)")
        lines.append(render_accuracy_table(reports, split_order))
        lines.append("accuracy by predicted decomposition type (%)")
        lines.append(render_type_table(reports))
    lines.append("valid decomposition coverage (%)")
    lines.append(render_coverage_table(CoverageReport.from_json(metrics["coverage"])))
    if metrics.get("bleu4_val") is not None:
        lines.append(
            f"decomposition bleu-4 on val: {metrics['bleu4_val']:.4f} "
            f"({metrics['bleu4_val_pairs']} pairs)"
        )
        lines.append("")
    if metrics.get("pseudo"):
        pseudo = metrics["pseudo"]
        lines.append("pseudo decomposition dataset")
        type_line = "  ".join(f"{k}={v}" for k, v in sorted(pseudo["by_type"].items()))
        prov_line = "  ".join(f"{k}={v}" for k, v in sorted(pseudo["provenance"].items()))
        lines.append(f"by type: {type_line}")
        lines.append(f"by provenance: {prov_line}")
        lines.append(f"total: {pseudo['total']}")
        lines.append("")
    lines.append("dataset statistics")
    header = ["split", "sentences", "tables", "mean rows", "mean cols"]
    stat_lines = [header]
    for split in sorted(metrics["dataset"]):
        st = metrics["dataset"][split]
        stat_lines.append(
            [split, str(st["sentences"]), str(st["tables"]),
             f"{st['mean_rows']:.1f}", f"{st['mean_cols']:.1f}"]
        )
    widths = [max(len(r[i]) for r in stat_lines) for i in range(len(header))]
    for row in stat_lines:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    text = "\n".join(lines) + "\n"
    path = cfg.out("report", "report.txt")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    _write_json(cfg.out("report", "report.json"), {"metrics": metrics})


# ---------------------------------------------------------------------------
# Stage registry

@dataclass(frozen=True)
class _Stage:
    name: str
    run: object  # callable(cfg)
    inputs: tuple[str, ...]  # artifact paths relative to output_dir


STAGES: list[_Stage] = [
    _Stage("ingest", stage_ingest, ()),
    _Stage("synthesize", stage_synthesize,
           ("ingest/tables.json", "ingest/statements.jsonl")),
    _Stage("select", stage_select,
           ("ingest/statements.jsonl", "synthesize/candidates.jsonl")),
    _Stage("build-pseudo", stage_build_pseudo,
           ("ingest/statements.jsonl", "select/selections.jsonl")),
    _Stage("augment", stage_augment,
           ("ingest/tables.json", "pseudo/pseudo.jsonl")),
    _Stage("decompose", stage_decompose,
           ("synthesize/candidates.jsonl", "select/selector.json")),
    _Stage("solve", stage_solve,
           ("ingest/tables.json", "decompose/decompositions.jsonl")),
    _Stage("train-fusion", stage_train_fusion,
           ("ingest/statements.jsonl", "solve/evidence.jsonl")),
    _Stage("verify", stage_verify,
           ("fusion/fusion.json", "fusion/fusion_placeholder.json",
            "solve/evidence.jsonl")),
    _Stage("evaluate", stage_evaluate,
           ("verify/predictions.jsonl", "decompose/decompositions.jsonl")),
    _Stage("report", stage_report, ("evaluate/metrics.json",)),
]

STAGE_NAMES = [st.name for st in STAGES]


def run_stage(name: str, cfg: PipelineConfig) -> None:
    """Run one stage after checking its upstream artifacts exist."""
    stage = next((st for st in STAGES if st.name == name), None)
    if stage is None:
        raise StageError(f"unknown stage {name!r}; expected one of {STAGE_NAMES}")
    for rel in stage.inputs:
        path = cfg.out(*rel.split("/"))
        if not path.exists():
            raise StageError(f"stage {name!r} is missing upstream artifact: {path}")
    stage.run(cfg)


def run_all(cfg: PipelineConfig) -> None:
    for stage in STAGES:
        run_stage(stage.name, cfg)
