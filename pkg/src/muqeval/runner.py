"""Experiment orchestration: config, model execution, scoring, report rendering.

The flow mirrors the two evaluation tracks: free-form transcripts are scored
against references with the similarity metric battery; factual transcripts
go through per-chunk extraction, union merging, and set scoring. Everything
persists as JSON-lines under the run's cache directory, and reruns over a
warm cache issue zero model requests.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import yaml

from . import conditions as cond
from . import corpus, extraction
from .clients import bounded_map, post_json
from .conditions import Condition, ConditionAssignment
from .corpus import DatasetTag, LabelVocabulary, QAItem, Task
from .embedding_metrics import (
    CachedEmbeddingProvider,
    EmbeddingProvider,
    HttpEmbeddingProvider,
    MockEmbeddingProvider,
    bertscore_f1,
    claptext,
)
from .errors import ConfigurationError, EmptyAggregateError, MuqevalError, UpstreamError
from .extraction import ExtractionCache, HttpExtractorClient, TreeMode, fallback_extract
from .factual_scoring import AggregateRow, SetScore, merge_chunk_labels, rows_from_scores, score_item
from .ngram_metrics import IdfTable, bleu_mean, bleu_n, build_idf, cider, meteor_lite, rouge_l, tokenize
from .prompts import TASK_PROMPTS
from .storage import canonical_dumps, read_jsonl, write_jsonl

log = logging.getLogger(__name__)

FREEFORM_METRICS = ("BLEU", "BLEU-4", "METEOR", "ROUGE", "BERTScore", "CIDEr", "CLAPText")
FACTUAL_METRICS = ("Precision", "Recall", "F1-Score", "Accuracy")
METRIC_COLUMN_ORDER = FREEFORM_METRICS + FACTUAL_METRICS


# --- Endpoints and transcripts ----------------------------------------------------


@dataclass
class ModelEndpoint:
    model_id: str
    kind: str  # "http" or "replay"
    base_url: str | None = None
    transcript_path: str | None = None
    chunk_seconds: int | None = None
    decoding: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind == "http":
            if not self.base_url:
                raise ConfigurationError(f"model {self.model_id}: http endpoint needs base_url")
        elif self.kind == "replay":
            if not self.transcript_path:
                raise ConfigurationError(f"model {self.model_id}: replay endpoint needs transcript_path")
        else:
            raise ConfigurationError(f"model {self.model_id}: unknown kind {self.kind!r}")
        if self.chunk_seconds is not None and self.chunk_seconds <= 0:
            raise ConfigurationError(f"model {self.model_id}: chunk_seconds must be positive")


@dataclass
class ModelTranscript:
    item_id: str
    condition: str
    model_id: str
    chunks: list[tuple[int, str]]
    created_at: str = ""
    prompt_hash: str = ""

    def __post_init__(self):
        if not self.chunks:
            raise ValueError(f"{self.item_id}: transcript needs at least one chunk")
        indices = [i for i, _ in self.chunks]
        if indices != list(range(len(indices))):
            raise ValueError(f"{self.item_id}: chunk indices must be contiguous from 0")

    @property
    def text(self) -> str:
        """Chunks concatenated with a single space, for similarity scoring."""
        return " ".join(text for _, text in self.chunks)

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "condition": self.condition,
            "model_id": self.model_id,
            "chunks": [{"index": i, "text": t} for i, t in self.chunks],
            "created_at": self.created_at,
            "prompt_hash": self.prompt_hash,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelTranscript":
        chunks = [(int(c["index"]), str(c["text"])) for c in data["chunks"]]
        chunks.sort(key=lambda pair: pair[0])
        return cls(
            item_id=data["item_id"],
            condition=data["condition"],
            model_id=data["model_id"],
            chunks=chunks,
            created_at=data.get("created_at", ""),
            prompt_hash=data.get("prompt_hash", ""),
        )


class TranscriptStore:
    """(item_id, condition, model_id) -> ModelTranscript, persisted as JSON-lines."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[tuple[str, str, str], ModelTranscript] = {}
        if self.path is not None and self.path.exists():
            for _, record in read_jsonl(self.path):
                transcript = ModelTranscript.from_dict(record)
                self._entries[self._key(transcript)] = transcript

    @staticmethod
    def _key(t: ModelTranscript) -> tuple[str, str, str]:
        return (t.item_id, t.condition, t.model_id)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: tuple[str, str, str]) -> bool:
        return key in self._entries

    def get(self, item_id: str, condition: str, model_id: str) -> ModelTranscript | None:
        return self._entries.get((item_id, condition, model_id))

    def put(self, transcript: ModelTranscript) -> None:
        key = self._key(transcript)
        if key in self._entries:
            return
        self._entries[key] = transcript

    def transcripts(self) -> list[ModelTranscript]:
        return [self._entries[key] for key in sorted(self._entries)]

    def save(self) -> None:
        if self.path is None:
            return
        write_jsonl(self.path, [t.to_dict() for t in self.transcripts()])


# --- Model clients ------------------------------------------------------------------


class HttpModelClient:
    """POST {base_url}/v1/answer with {question, audio_uri, decoding}."""

    def __init__(self, endpoint: ModelEndpoint, timeout: float = 120.0, retries: int = 2):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries

    def answer(self, question: str, audio_uri: str) -> list[tuple[int, str]]:
        body = post_json(
            f"{self.endpoint.base_url.rstrip('/')}/v1/answer",
            {"question": question, "audio_uri": audio_uri, "decoding": self.endpoint.decoding},
            timeout=self.timeout,
            retries=self.retries,
        )
        chunks = [(int(c["index"]), str(c["text"])) for c in body.get("chunks", [])]
        chunks.sort(key=lambda pair: pair[0])
        if not chunks:
            raise UpstreamError(f"model {self.endpoint.model_id} returned no chunks")
        return chunks


class ReplayModelClient:
    """Serve transcripts from a fixture file instead of a live model."""

    def __init__(self, endpoint: ModelEndpoint):
        self.endpoint = endpoint
        self._fixtures: dict[tuple[str, str, str], list[tuple[int, str]]] = {}
        for _, record in read_jsonl(endpoint.transcript_path):
            key = (record["item_id"], record["condition"], record.get("model_id", endpoint.model_id))
            chunks = [(int(c["index"]), str(c["text"])) for c in record["chunks"]]
            chunks.sort(key=lambda pair: pair[0])
            self._fixtures[key] = chunks

    def answer_for(self, item_id: str, condition: str) -> list[tuple[int, str]]:
        key = (item_id, condition, self.endpoint.model_id)
        if key not in self._fixtures:
            raise UpstreamError(f"replay fixture missing transcript for {key}")
        return self._fixtures[key]


# --- Configuration -------------------------------------------------------------------


@dataclass
class RunConfig:
    seed: int
    cache_dir: Path
    datasets: dict
    models: list[ModelEndpoint]
    conditions: list[Condition]
    tasks: list[Task]
    prompts: dict[str, str] = field(default_factory=dict)
    metrics: tuple[str, ...] = FREEFORM_METRICS
    workers: int = 4
    embedding: dict = field(default_factory=lambda: {"provider": "mock"})
    extractor: dict = field(default_factory=lambda: {"kind": "fallback"})
    rewrites: dict = field(default_factory=dict)
    tree_mode: TreeMode = TreeMode.SAME_NODE
    failed_policy: str = "exclude"

    def __post_init__(self):
        self.cache_dir = Path(self.cache_dir)
        for task_name, prompt_name in self.prompts.items():
            grid = TASK_PROMPTS.get(task_name)
            if grid is None or prompt_name not in grid:
                raise ConfigurationError(f"unknown prompt template {task_name}/{prompt_name}")
        for metric in self.metrics:
            if metric not in FREEFORM_METRICS:
                raise ConfigurationError(f"unknown metric name {metric!r}")
        if self.failed_policy not in ("exclude", "zero"):
            raise ConfigurationError(f"failed_policy must be exclude or zero, got {self.failed_policy!r}")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")


def load_config(
    path: str | Path,
    seed: int | None = None,
    cache_dir: str | Path | None = None,
) -> RunConfig:
    """Parse the YAML run configuration; CLI overrides win over file values."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config file is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be a mapping")

    try:
        models = [ModelEndpoint(**m) for m in raw.get("models", [])]
        config_conditions = [Condition(c) for c in raw.get("conditions", ["correct"])]
        tasks = [Task(t) for t in raw.get("tasks", ["free_form"])]
        tree_mode = TreeMode(raw.get("tree_mode", "same_node"))
    except (ValueError, TypeError) as exc:
        raise ConfigurationError(f"invalid config: {exc}") from exc

    return RunConfig(
        seed=seed if seed is not None else int(raw.get("seed", 0)),
        cache_dir=Path(cache_dir if cache_dir is not None else raw.get("cache_dir", "muqeval_cache")),
        datasets=raw.get("datasets", {}),
        models=models,
        conditions=config_conditions,
        tasks=tasks,
        prompts=raw.get("prompts", {}),
        metrics=tuple(raw.get("metrics", FREEFORM_METRICS)),
        workers=int(raw.get("workers", 4)),
        embedding=raw.get("embedding", {"provider": "mock"}),
        extractor=raw.get("extractor", {"kind": "fallback"}),
        rewrites=raw.get("rewrites", {}),
        tree_mode=tree_mode,
        failed_policy=raw.get("failed_policy", "exclude"),
    )


def build_provider(config: RunConfig) -> EmbeddingProvider:
    spec = config.embedding or {}
    kind = spec.get("provider", "mock")
    if kind == "mock":
        inner: EmbeddingProvider = MockEmbeddingProvider(dim=int(spec.get("dim", 64)))
    elif kind == "http":
        if not spec.get("base_url"):
            raise ConfigurationError("embedding.provider=http requires embedding.base_url")
        inner = HttpEmbeddingProvider(spec["base_url"])
    else:
        raise ConfigurationError(f"unknown embedding provider {kind!r}")
    if spec.get("cache", True):
        return CachedEmbeddingProvider(inner, path=config.cache_dir / "embeddings_cache.jsonl")
    return inner


# --- Ingest ---------------------------------------------------------------------------


def ingest(config: RunConfig) -> tuple[list[QAItem], dict[Task, LabelVocabulary]]:
    """Load every configured dataset and keep items for the configured tasks."""
    items: list[QAItem] = []
    vocabs: dict[Task, LabelVocabulary] = {}
    datasets = config.datasets or {}
    if "musicqa" in datasets:
        entry = datasets["musicqa"]
        tag = DatasetTag(entry.get("tag", "musicqa_jamendo"))
        items.extend(corpus.load_musicqa(entry["path"], dataset_tag=tag))
    if "fma_small" in datasets:
        entry = datasets["fma_small"]
        fma_items, genre_vocab = corpus.load_fma_small(entry["metadata"], entry["hierarchy"])
        items.extend(fma_items)
        vocabs[Task.GENRE] = genre_vocab
    if "musicnet" in datasets:
        entry = datasets["musicnet"]
        net_items, inst_vocab, comp_vocab = corpus.load_musicnet(entry["annotations"])
        items.extend(net_items)
        vocabs[Task.INSTRUMENT] = inst_vocab
        vocabs[Task.COMPOSER] = comp_vocab
    wanted = set(config.tasks)
    items = [item for item in items if item.task in wanted]
    items.sort(key=lambda it: it.item_id)
    return items, vocabs


def question_for(item: QAItem, config: RunConfig, vocabs: dict[Task, LabelVocabulary]) -> str:
    """Resolve the question text: the item's own for free-form, the configured
    prompt-grid template for factual tasks."""
    if item.task is Task.FREE_FORM:
        return item.question
    template_name = config.prompts.get(item.task.value, "default")
    template = TASK_PROMPTS.get(item.task.value, {}).get(template_name)
    if template is None:
        return item.question
    if "{options}" in template:
        vocab = vocabs.get(item.task)
        options = ", ".join(vocab.canonical) if vocab else ""
        return template.format(options=options)
    return template


def build_assignments(
    config: RunConfig, items: list[QAItem]
) -> dict[Condition, list[ConditionAssignment]]:
    out: dict[Condition, list[ConditionAssignment]] = {}
    rewrites_map = None
    rewrite_client = None
    rewrite_cache = None
    if any(c in cond.REWRITE_MODES for c in config.conditions):
        source = (config.rewrites or {}).get("source", "fixture")
        if source == "fixture":
            fixture_path = config.rewrites.get("path")
            if not fixture_path:
                raise ConfigurationError("rewrites.source=fixture requires rewrites.path")
            rewrites_map = cond.load_rewrites(fixture_path)
        elif source == "http":
            if not config.rewrites.get("base_url"):
                raise ConfigurationError("rewrites.source=http requires rewrites.base_url")
            rewrite_client = cond.HttpRewriteClient(
                config.rewrites["base_url"], decoding=config.rewrites.get("decoding")
            )
            rewrite_cache = cond.RewriteCache(config.cache_dir / "rewrite_cache.jsonl")
        else:
            raise ConfigurationError(f"unknown rewrites.source {source!r}")

    for condition in config.conditions:
        if condition is Condition.CORRECT:
            out[condition] = cond.assign_correct(items, seed=config.seed)
        elif condition is Condition.RANDOM:
            out[condition] = cond.assign_random_audio(items, seed=config.seed)
        else:
            eligible = [item for item in items if item.task is Task.FREE_FORM]
            out[condition] = cond.assign_rewrites(
                eligible,
                condition,
                seed=config.seed,
                rewrites=rewrites_map,
                llm=rewrite_client,
                cache=rewrite_cache,
            )
    return out


# --- Run ------------------------------------------------------------------------------


@dataclass
class RunResult:
    store: TranscriptStore
    failures: list[dict]
    requested: int
    performed_requests: int = 0


def _prompt_hash(payload: dict) -> str:
    return hashlib.sha256(canonical_dumps(payload).encode("utf-8")).hexdigest()


def run(
    config: RunConfig,
    items: list[QAItem] | None = None,
    vocabs: dict[Task, LabelVocabulary] | None = None,
    assignments: dict[Condition, list[ConditionAssignment]] | None = None,
) -> RunResult:
    """Produce one transcript per (item, condition, model); idempotent over the cache."""
    if items is None or vocabs is None:
        items, vocabs = ingest(config)
    if assignments is None:
        assignments = build_assignments(config, items)
    if not config.models:
        raise ConfigurationError("run requires at least one model endpoint")

    items_by_id = {item.item_id: item for item in items}
    store = TranscriptStore(config.cache_dir / "transcripts.jsonl")
    failures: list[dict] = []
    requested = 0
    performed = 0

    for endpoint in config.models:
        replay = ReplayModelClient(endpoint) if endpoint.kind == "replay" else None
        http = HttpModelClient(endpoint) if endpoint.kind == "http" else None

        for condition, assigned in assignments.items():
            pending: list[tuple[QAItem, ConditionAssignment]] = []
            for assignment in assigned:
                requested += 1
                key = (assignment.item_id, condition.value, endpoint.model_id)
                if key in store:
                    continue
                pending.append((items_by_id[assignment.item_id], assignment))

            def task_fn(pair: tuple[QAItem, ConditionAssignment]) -> ModelTranscript:
                item, assignment = pair
                now = datetime.now(timezone.utc).isoformat()
                if assignment.condition in cond.REWRITE_MODES:
                    payload = {
                        "instruction": cond.REWRITE_INSTRUCTIONS[assignment.condition],
                        "reference": item.reference_answer,
                    }
                    return ModelTranscript(
                        item_id=item.item_id,
                        condition=assignment.condition.value,
                        model_id=endpoint.model_id,
                        chunks=[(0, assignment.rewritten_text)],
                        created_at=now,
                        prompt_hash=_prompt_hash(payload),
                    )
                question = question_for(item, config, vocabs)
                audio_uri = assignment.assigned_audio.uri
                payload = {"question": question, "audio_uri": audio_uri, "decoding": endpoint.decoding}
                if replay is not None:
                    chunks = replay.answer_for(item.item_id, assignment.condition.value)
                else:
                    chunks = http.answer(question, audio_uri)
                return ModelTranscript(
                    item_id=item.item_id,
                    condition=assignment.condition.value,
                    model_id=endpoint.model_id,
                    chunks=chunks,
                    created_at=now,
                    prompt_hash=_prompt_hash(payload),
                )

            workers = config.workers if endpoint.kind == "http" else 1
            for (result, error), (item, assignment) in zip(
                bounded_map(task_fn, pending, workers=workers), pending
            ):
                performed += 1
                if error is not None:
                    log.warning("model call failed for %s/%s: %s", item.item_id, condition.value, error)
                    failures.append(
                        {
                            "item_id": item.item_id,
                            "condition": condition.value,
                            "model_id": endpoint.model_id,
                            "status": "failed",
                            "error": str(error),
                        }
                    )
                else:
                    store.put(result)

    store.save()
    write_jsonl(config.cache_dir / "failures.jsonl", failures)
    return RunResult(store=store, failures=failures, requested=requested, performed_requests=performed)


# --- Scoring --------------------------------------------------------------------------


def _freeform_metric_values(
    candidate_text: str,
    reference_text: str,
    metrics: tuple[str, ...],
    idf: IdfTable,
    provider: EmbeddingProvider | None,
) -> dict[str, float]:
    cand = tokenize(candidate_text)
    ref = tokenize(reference_text)
    values: dict[str, float] = {}
    for metric in metrics:
        if metric not in FREEFORM_METRICS:
            raise ConfigurationError(f"unknown metric name {metric!r}")
        if not candidate_text.strip() or not cand:
            # Model produced nothing usable; every similarity bottoms out.
            values[metric] = 0.0
            continue
        if metric == "BLEU":
            values[metric] = bleu_mean(cand, ref)
        elif metric == "BLEU-4":
            values[metric] = bleu_n(cand, ref, 4)
        elif metric == "METEOR":
            values[metric] = meteor_lite(cand, ref)
        elif metric == "ROUGE":
            values[metric] = rouge_l(cand, ref)
        elif metric == "CIDEr":
            values[metric] = cider(cand, ref, idf)
        elif metric == "BERTScore":
            if provider is None:
                raise ConfigurationError("BERTScore requires an embedding provider")
            values[metric] = bertscore_f1(candidate_text, reference_text, provider)
        elif metric == "CLAPText":
            if provider is None:
                raise ConfigurationError("CLAPText requires an embedding provider")
            values[metric] = claptext(candidate_text, reference_text, provider)
    return values


def score_freeform(
    store: TranscriptStore,
    references: dict[str, str],
    metrics: tuple[str, ...] = FREEFORM_METRICS,
    provider: EmbeddingProvider | None = None,
    persist_path: str | Path | None = None,
) -> tuple[list[AggregateRow], list[dict]]:
    """Score every stored transcript that has a reference; macro-average rows."""
    idf = build_idf([tokenize(text) for text in references.values()])
    per_item: list[dict] = []
    grouped: dict[tuple[str, str, str], list[float]] = {}
    for transcript in store.transcripts():
        reference = references.get(transcript.item_id)
        if reference is None:
            continue
        values = _freeform_metric_values(transcript.text, reference, metrics, idf, provider)
        per_item.append(
            {
                "item_id": transcript.item_id,
                "condition": transcript.condition,
                "model_id": transcript.model_id,
                "metrics": values,
            }
        )
        for metric, value in values.items():
            grouped.setdefault((transcript.model_id, transcript.condition, metric), []).append(value)

    rows = [
        AggregateRow(
            model_id=model_id,
            condition=condition,
            task=Task.FREE_FORM.value,
            metric_name=metric,
            mean=sum(values) / len(values),
            count=len(values),
        )
        for (model_id, condition, metric), values in sorted(grouped.items())
    ]
    if persist_path is not None:
        write_jsonl(persist_path, per_item)
    return rows, per_item


def aggregate_rows_from_per_item(per_item: list[dict], task: str = Task.FREE_FORM.value) -> list[AggregateRow]:
    """Re-derive aggregate rows from persisted per-item metric records."""
    grouped: dict[tuple[str, str, str], list[float]] = {}
    for record in per_item:
        for metric, value in record["metrics"].items():
            grouped.setdefault((record["model_id"], record["condition"], metric), []).append(value)
    return [
        AggregateRow(model_id=m, condition=c, task=task, metric_name=metric,
                     mean=sum(vals) / len(vals), count=len(vals))
        for (m, c, metric), vals in sorted(grouped.items())
    ]


def score_factual(
    store: TranscriptStore,
    items: list[QAItem],
    vocab: LabelVocabulary,
    extractor: extraction.ExtractorClient | str = "fallback",
    tree_mode: TreeMode = TreeMode.SAME_NODE,
    extraction_cache: ExtractionCache | None = None,
    persist_path: str | Path | None = None,
    failed_policy: str = "exclude",
) -> tuple[list[AggregateRow], list[dict], list[SetScore]]:
    """Per-chunk extraction, union merge, set scoring, macro aggregation."""
    task_items = {item.item_id: item for item in items if item.task is vocab.task}
    audits: list[dict] = []
    scored: dict[tuple[str, str], list[SetScore]] = {}
    all_scores: list[SetScore] = []

    for transcript in store.transcripts():
        item = task_items.get(transcript.item_id)
        if item is None:
            continue
        truth = item.truth_labels
        if tree_mode is TreeMode.SAME_TREE:
            truth = frozenset(extraction.canonicalize(truth, vocab, tree_mode))
        per_chunk: list[set[str]] = []
        chunk_audits: list[dict] = []
        failed = False
        for _, chunk_text in transcript.chunks:
            if not chunk_text.strip():
                per_chunk.append(set())
                continue
            try:
                if extractor == "fallback":
                    result = fallback_extract(chunk_text, vocab, tree_mode, item_id=item.item_id)
                else:
                    result = extraction.extract(
                        item, chunk_text, extractor, vocab, tree_mode, cache=extraction_cache
                    )
            except UpstreamError as exc:
                log.warning("extractor failed for %s: %s", item.item_id, exc)
                failed = True
                break
            per_chunk.append(result.labels_canonical)
            chunk_audits.append(
                {
                    "extractor_output": result.extractor_output,
                    "labels_ordered": result.labels_ordered,
                    "labels_canonical": sorted(result.labels_canonical),
                    "extractor_version": result.extractor_version,
                }
            )
        if failed:
            status = "failed"
            predicted: set[str] = set()
        else:
            status = "ok"
            predicted = merge_chunk_labels(per_chunk) if per_chunk else set()
        audits.append(
            {
                "item_id": item.item_id,
                "condition": transcript.condition,
                "model_id": transcript.model_id,
                "status": status,
                "chunks": chunk_audits,
                "predicted": sorted(predicted),
                "truth": sorted(truth),
            }
        )
        if failed and failed_policy == "exclude":
            continue
        score = score_item(predicted, set(truth), item_id=item.item_id)
        all_scores.append(score)
        scored.setdefault((transcript.model_id, transcript.condition), []).append(score)

    rows: list[AggregateRow] = []
    for (model_id, condition), scores in sorted(scored.items()):
        rows.extend(rows_from_scores(scores, model_id, condition, vocab.task.value))
    if persist_path is not None:
        write_jsonl(persist_path, audits)
    return rows, audits, all_scores


# --- Reports --------------------------------------------------------------------------


def _pivot(rows: list[AggregateRow]) -> tuple[list[str], list[tuple]]:
    present = {row.metric_name for row in rows}
    metric_columns = [m for m in METRIC_COLUMN_ORDER if m in present]
    metric_columns += sorted(present - set(METRIC_COLUMN_ORDER))
    cells: dict[tuple[str, str, str], dict[str, float]] = {}
    for row in rows:
        cells.setdefault((row.model_id, row.condition, row.task), {})[row.metric_name] = row.mean
    ordered = []
    for key in sorted(cells):
        ordered.append((key, cells[key]))
    return metric_columns, ordered


def render_report(rows: list[AggregateRow], format: str = "csv") -> str:
    """Deterministic pivoted report; metric columns follow the canonical order."""
    if not rows:
        raise EmptyAggregateError("cannot render a report from zero rows")
    if format not in ("csv", "markdown"):
        raise ConfigurationError(f"unknown report format {format!r}")
    metric_columns, ordered = _pivot(rows)
    header = ["model", "condition", "task"] + metric_columns
    body: list[list[str]] = []
    for (model_id, condition, task), values in ordered:
        cells = [model_id, condition, task]
        for metric in metric_columns:
            cells.append(f"{values[metric]:.4f}" if metric in values else "")
        body.append(cells)
    if format == "csv":
        lines = [",".join(header)] + [",".join(row) for row in body]
        return "\n".join(lines) + "\n"
    widths = [max(len(header[i]), *(len(row[i]) for row in body)) for i in range(len(header))]
    def fmt(cells):
        return "| " + " | ".join(cell.ljust(widths[i]) for i, cell in enumerate(cells)) + " |"
    lines = [fmt(header), "| " + " | ".join("-" * w for w in widths) + " |"]
    lines += [fmt(row) for row in body]
    return "\n".join(lines) + "\n"


def save_aggregate_rows(rows: list[AggregateRow], path: str | Path) -> None:
    write_jsonl(
        path,
        [
            {
                "model_id": r.model_id,
                "condition": r.condition,
                "task": r.task,
                "metric_name": r.metric_name,
                "mean": r.mean,
                "count": r.count,
            }
            for r in rows
        ],
    )


def load_aggregate_rows(path: str | Path) -> list[AggregateRow]:
    return [
        AggregateRow(
            model_id=record["model_id"],
            condition=record["condition"],
            task=record["task"],
            metric_name=record["metric_name"],
            mean=record["mean"],
            count=record["count"],
        )
        for _, record in read_jsonl(path)
    ]
