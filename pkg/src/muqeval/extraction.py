"""Turn free-form answers into canonical label lists.

Pipeline: build a rule-constrained prompt, send it to the extractor LLM,
parse the comma-separated output, then canonicalize through the task
vocabulary's alias map (and genre tree when scoring same-tree). A
deterministic word-boundary scanner (:func:`fallback_extract`) substitutes
for the LLM in offline runs and tests.
"""

from __future__ import annotations

import hashlib
import logging
import re
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Protocol

from .clients import SingleFlight, post_json
from .corpus import LabelVocabulary, QAItem
from .errors import ConfigurationError
from .prompts import EXTRACTION_TEMPLATE_VERSION, render_extraction_prompt, render_extraction_system
from .storage import JsonlWriter, read_jsonl

log = logging.getLogger(__name__)

# Parsed labels longer than this are almost certainly prose, not keywords.
MAX_LABEL_WORDS = 6


class TreeMode(str, Enum):
    SAME_NODE = "same_node"
    SAME_TREE = "same_tree"


@dataclass
class ExtractionResult:
    item_id: str
    raw_response: str
    extractor_output: str
    labels_ordered: list[str] = field(default_factory=list)
    labels_canonical: set[str] = field(default_factory=set)
    extractor_version: str = EXTRACTION_TEMPLATE_VERSION

    def __post_init__(self):
        if len(set(self.labels_ordered)) != len(self.labels_ordered):
            raise ValueError(f"{self.item_id}: labels_ordered contains duplicates")


class ExtractorClient(Protocol):
    def complete(self, system: str, user: str) -> str: ...


class HttpExtractorClient:
    """POST {system, user} -> {text}."""

    def __init__(self, base_url: str, timeout: float = 60.0, retries: int = 2):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries

    def complete(self, system: str, user: str) -> str:
        body = post_json(
            self.base_url, {"system": system, "user": user}, timeout=self.timeout, retries=self.retries
        )
        return str(body.get("text", ""))


def build_extraction_prompt(task: str, response: str, vocabulary_hint=None) -> str:
    """Deterministic, versioned prompt embedding the extraction rule list."""
    if not response:
        raise ValueError("response must be non-empty")
    return render_extraction_prompt(task, response, vocabulary_hint)


def parse_extraction_output(text: str) -> list[str]:
    """Comma-split, trim, lowercase, drop empties, dedup keeping first occurrence."""
    labels: list[str] = []
    seen: set[str] = set()
    for part in text.split(","):
        label = part.strip().lower()
        if not label or label in seen:
            continue
        if len(label.split()) > MAX_LABEL_WORDS:
            log.warning("suspicious extracted label (>%d words): %r", MAX_LABEL_WORDS, label)
        seen.add(label)
        labels.append(label)
    return labels


def canonicalize(labels, vocab: LabelVocabulary, tree_mode: TreeMode = TreeMode.SAME_NODE) -> set[str]:
    """Alias-map and lowercase labels; same_tree additionally folds subgenres.

    Labels with no alias and no tree entry pass through unchanged so they can
    count as false positives downstream.
    """
    if tree_mode is TreeMode.SAME_TREE and vocab.tree is None:
        raise ConfigurationError(f"{vocab.task.value} vocabulary has no tree; same_tree unavailable")
    out = set()
    for label in labels:
        label = label.strip().lower()
        if not label:
            continue
        label = vocab.aliases.get(label, label)
        if tree_mode is TreeMode.SAME_TREE and vocab.tree is not None:
            label = vocab.tree.get(label, label)
        out.add(label)
    return out


class ExtractionCache:
    """Keyed by (template version, task, SHA-256 of the transcript)."""

    def __init__(self, path: str | Path | None = None):
        self._entries: dict[str, str] = {}
        self._writer = None
        self.singleflight = SingleFlight()
        if path is not None:
            path = Path(path)
            if path.exists():
                for _, record in read_jsonl(path):
                    self._entries[record["key"]] = record["output"]
            self._writer = JsonlWriter(path)

    @staticmethod
    def key(task: str, transcript: str) -> str:
        digest = hashlib.sha256(transcript.encode("utf-8")).hexdigest()
        return f"{EXTRACTION_TEMPLATE_VERSION}:{task}:{digest}"

    def get(self, key: str) -> str | None:
        return self._entries.get(key)

    def put(self, key: str, output: str) -> None:
        if key in self._entries:
            return
        self._entries[key] = output
        if self._writer is not None:
            self._writer.append(
                {
                    "key": key,
                    "template_version": EXTRACTION_TEMPLATE_VERSION,
                    "output": output,
                    "timestamp": time.time(),
                }
            )


def extract(
    item: QAItem,
    transcript_text: str,
    llm: ExtractorClient,
    vocab: LabelVocabulary,
    tree_mode: TreeMode = TreeMode.SAME_NODE,
    cache: ExtractionCache | None = None,
) -> ExtractionResult:
    """Prompt the extractor LLM over one transcript and canonicalize its output."""
    if not transcript_text:
        raise ValueError(f"{item.item_id}: transcript must be non-empty")
    task = item.task.value
    key = ExtractionCache.key(task, transcript_text)
    output = cache.get(key) if cache is not None else None
    if output is None:
        system = render_extraction_system(task, vocab.canonical)
        log.debug("extraction prompt for %s:\n%s", item.item_id,
                  build_extraction_prompt(task, transcript_text, vocab.canonical))

        def _call() -> str:
            hit = cache.get(key) if cache is not None else None
            if hit is not None:
                return hit
            text = llm.complete(system, transcript_text)
            if cache is not None:
                cache.put(key, text)
            return text

        if cache is not None:
            output = cache.singleflight.do(key, _call)
        else:
            output = _call()
    labels = parse_extraction_output(output)
    return ExtractionResult(
        item_id=item.item_id,
        raw_response=transcript_text,
        extractor_output=output,
        labels_ordered=labels,
        labels_canonical=canonicalize(labels, vocab, tree_mode),
    )


FALLBACK_EXTRACTOR_VERSION = "fallback-v1"


def fallback_extract(
    transcript_text: str,
    vocab: LabelVocabulary,
    tree_mode: TreeMode = TreeMode.SAME_NODE,
    item_id: str = "",
) -> ExtractionResult:
    """Deterministic extractor: word-boundary scan for vocabulary terms.

    Emits terms in order of first appearance; overlapping surface forms that
    canonicalize to the same label are folded into the earliest one. Only
    exact mentions (canonical labels or their aliases) are ever returned, so
    rule-2 "no guessing" holds by construction.
    """
    if not vocab.canonical:
        raise ValueError("fallback extraction needs a non-empty vocabulary")
    text = transcript_text.lower()
    hits: list[tuple[int, int, str]] = []  # (start, -length, term)
    for term in list(vocab.canonical) + list(vocab.aliases):
        for match in re.finditer(rf"\b{re.escape(term)}\b", text):
            hits.append((match.start(), -len(term), term))
    hits.sort()

    labels_ordered: list[str] = []
    seen_canonical: set[str] = set()
    for _, _, term in hits:
        canon = next(iter(canonicalize([term], vocab, tree_mode)))
        if canon in seen_canonical:
            continue
        seen_canonical.add(canon)
        labels_ordered.append(term)
    return ExtractionResult(
        item_id=item_id,
        raw_response=transcript_text,
        extractor_output=", ".join(labels_ordered),
        labels_ordered=labels_ordered,
        labels_canonical=canonicalize(labels_ordered, vocab, tree_mode),
        extractor_version=FALLBACK_EXTRACTOR_VERSION,
    )
