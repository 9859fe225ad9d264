"""Command-line entry point.

Subcommands mirror the pipeline stages: ingest -> conditions -> run ->
extract -> score -> report. Every stage reads and writes JSON-lines stores
under the configured cache directory, so stages can be rerun independently.

Exit codes: 0 success, 2 configuration error, 3 partial failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import runner as rn
from .conditions import save_assignments
from .corpus import Task, save_items, save_vocabulary
from .errors import ConfigurationError, MuqevalError
from .extraction import ExtractionCache, HttpExtractorClient
from .storage import canonical_dumps, read_jsonl, write_jsonl

EXIT_OK = 0
EXIT_GENERIC = 1
EXIT_CONFIG = 2
EXIT_PARTIAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="muqeval", description="Music QA evaluation harness")
    parser.add_argument("--config", required=True, help="path to the YAML run configuration")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--cache-dir", default=None, help="override the config cache directory")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", help="load and validate the configured corpora")
    sub.add_parser("conditions", help="materialize condition assignments")
    sub.add_parser("run", help="collect model transcripts for every (item, condition, model)")
    sub.add_parser("extract", help="run keyword extraction over factual transcripts")
    sub.add_parser("score", help="compute per-item metrics and aggregates")

    report = sub.add_parser("report", help="render the aggregate report")
    report.add_argument("--format", choices=("csv", "markdown"), default="csv")
    report.add_argument("--out", default=None, help="write the report here instead of the cache dir")
    return parser


def _extractor_from_config(config: rn.RunConfig):
    kind = (config.extractor or {}).get("kind", "fallback")
    if kind == "fallback":
        return "fallback"
    if kind == "http":
        base_url = config.extractor.get("base_url")
        if not base_url:
            raise ConfigurationError("extractor.kind=http requires extractor.base_url")
        return HttpExtractorClient(base_url)
    raise ConfigurationError(f"unknown extractor kind {kind!r}")


def cmd_ingest(config: rn.RunConfig) -> int:
    items, vocabs = rn.ingest(config)
    save_items(items, config.cache_dir / "items.jsonl")
    for task, vocab in vocabs.items():
        save_vocabulary(vocab, config.cache_dir / f"vocab_{task.value}.json")
    meta = {
        "created_at": datetime.now(timezone.utc).isoformat(),
        "seed": config.seed,
        "conditions": [c.value for c in config.conditions],
        "tasks": [t.value for t in config.tasks],
        "items": len(items),
        "note": (
            "every item runs under every requested condition; paraphrase and "
            "adversarial apply to free-form items only"
        ),
    }
    (config.cache_dir / "run_meta.json").write_text(canonical_dumps(meta) + "\n", encoding="utf-8")
    print(f"ingested {len(items)} items across {len(vocabs)} factual vocabularies")
    return EXIT_OK


def cmd_conditions(config: rn.RunConfig) -> int:
    items, _ = rn.ingest(config)
    assignments = rn.build_assignments(config, items)
    for condition, assigned in assignments.items():
        path = config.cache_dir / f"assignments_{condition.value}.jsonl"
        save_assignments(assigned, path)
        print(f"{condition.value}: {len(assigned)} assignments -> {path}")
    return EXIT_OK


def cmd_run(config: rn.RunConfig) -> int:
    result = rn.run(config)
    print(
        f"transcripts: {len(result.store)} persisted, {len(result.failures)} failures, "
        f"{result.requested} requested"
    )
    return EXIT_PARTIAL if result.failures else EXIT_OK


def cmd_extract(config: rn.RunConfig) -> int:
    items, vocabs = rn.ingest(config)
    store = rn.TranscriptStore(config.cache_dir / "transcripts.jsonl")
    extractor = _extractor_from_config(config)
    cache = ExtractionCache(config.cache_dir / "extraction_cache.jsonl")
    any_failed = False
    for task, vocab in vocabs.items():
        if task not in config.tasks:
            continue
        _, audits, _ = rn.score_factual(
            store,
            items,
            vocab,
            extractor=extractor,
            tree_mode=config.tree_mode,
            extraction_cache=cache,
            persist_path=config.cache_dir / f"extractions_{task.value}.jsonl",
            failed_policy=config.failed_policy,
        )
        failed = sum(1 for a in audits if a["status"] == "failed")
        any_failed = any_failed or failed > 0
        print(f"{task.value}: extracted {len(audits)} transcripts ({failed} failed)")
    return EXIT_PARTIAL if any_failed else EXIT_OK


def cmd_score(config: rn.RunConfig) -> int:
    items, vocabs = rn.ingest(config)
    store = rn.TranscriptStore(config.cache_dir / "transcripts.jsonl")
    rows = []
    any_failed = False

    if Task.FREE_FORM in config.tasks:
        references = {
            item.item_id: item.reference_answer for item in items if item.task is Task.FREE_FORM
        }
        if references:
            provider = rn.build_provider(config)
            freeform_rows, _ = rn.score_freeform(
                store,
                references,
                metrics=config.metrics,
                provider=provider,
                persist_path=config.cache_dir / "metrics_freeform.jsonl",
            )
            rows.extend(freeform_rows)

    extractor = _extractor_from_config(config)
    cache = ExtractionCache(config.cache_dir / "extraction_cache.jsonl")
    for task, vocab in vocabs.items():
        if task not in config.tasks:
            continue
        factual_rows, audits, _ = rn.score_factual(
            store,
            items,
            vocab,
            extractor=extractor,
            tree_mode=config.tree_mode,
            extraction_cache=cache,
            persist_path=config.cache_dir / f"extractions_{task.value}.jsonl",
            failed_policy=config.failed_policy,
        )
        rows.extend(factual_rows)
        any_failed = any_failed or any(a["status"] == "failed" for a in audits)

    rn.save_aggregate_rows(rows, config.cache_dir / "aggregates.jsonl")
    print(f"aggregates: {len(rows)} rows -> {config.cache_dir / 'aggregates.jsonl'}")
    return EXIT_PARTIAL if any_failed else EXIT_OK


def cmd_report(config: rn.RunConfig, format: str, out: str | None) -> int:
    rows = rn.load_aggregate_rows(config.cache_dir / "aggregates.jsonl")
    document = rn.render_report(rows, format=format)
    suffix = "csv" if format == "csv" else "md"
    target = Path(out) if out else config.cache_dir / f"report.{suffix}"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(document, encoding="utf-8")
    print(document, end="")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = rn.load_config(args.config, seed=args.seed, cache_dir=args.cache_dir)
        config.cache_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "ingest":
            return cmd_ingest(config)
        if args.command == "conditions":
            return cmd_conditions(config)
        if args.command == "run":
            return cmd_run(config)
        if args.command == "extract":
            return cmd_extract(config)
        if args.command == "score":
            return cmd_score(config)
        if args.command == "report":
            return cmd_report(config, args.format, args.out)
        raise ConfigurationError(f"unknown command {args.command!r}")
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MuqevalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GENERIC


if __name__ == "__main__":
    sys.exit(main())
