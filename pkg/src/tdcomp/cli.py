"""Command-line entry point.

    tdcomp <stage> --config config.json
    tdcomp all --config config.json
    tdcomp synth --config config.json   # write a synthetic corpus first

Exit codes: 0 success, 2 configuration error, 3 stage error.

The bundled pipeline runs at desk scale on synthetic corpora (see
`tdcomp synth`); the accuracy numbers it reports are properties of those
corpora, not of any external benchmark.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, StageError
from .pipeline import STAGE_NAMES, load_config, run_all, run_stage


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdcomp",
        description=(
            "Program-guided statement decomposition and evidence fusion "
            "for table-based fact verification."
        ),
    )
    parser.add_argument(
        "stage",
        choices=STAGE_NAMES + ["all", "synth"],
        help="pipeline stage to run, 'all' for the whole pipeline, or "
             "'synth' to generate the configured synthetic corpus",
    )
    parser.add_argument("--config", required=True, help="path to the JSON config file")
    return parser


def _run_synth(cfg) -> None:
    from .synthetic import generate_synthetic_corpus, write_corpus

    if not cfg.synthetic:
        raise ConfigError("config has no 'synthetic' section")
    spec = dict(cfg.synthetic)
    try:
        n = int(spec.pop("n"))
        seed = int(spec.pop("seed"))
    except KeyError as exc:
        raise ConfigError(f"synthetic section is missing {exc}") from exc
    rows = int(spec.pop("rows", 6))
    cols = int(spec.pop("cols", 4))
    if spec:
        raise ConfigError(f"unknown synthetic keys: {sorted(spec)}")
    corpus = generate_synthetic_corpus(n, table_shape=(rows, cols), seed=seed)
    write_corpus(corpus, cfg.tables_dir, cfg.statements_file)
    print(f"wrote {len(corpus.tables)} tables and {len(corpus.statements)} statements")


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.stage == "all":
            run_all(cfg)
        elif args.stage == "synth":
            _run_synth(cfg)
        else:
            run_stage(args.stage, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"stage error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
