"""Experimental conditions: correct pairing, random audio, paraphrase, adversarial.

The random baseline re-pairs each question with an audio drawn uniformly from
the corpus excluding the item's own recording (sampling with replacement
across items). The paraphrase and adversarial conditions rewrite the
reference answer through an LLM client; rewrites are cached by content hash
so reruns perform zero client requests. Gaussian-noise style audio
corruption is deliberately not offered.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Protocol

from .clients import SingleFlight, post_json
from .corpus import AudioRef, QAItem
from .errors import DerangementError, DuplicateKeyError, InvalidRewriteError, MalformedRecordError
from .prompts import ADVERSARIAL_INSTRUCTION, PARAPHRASE_INSTRUCTION, REWRITE_PROMPT_VERSION
from .storage import JsonlWriter, read_jsonl, write_jsonl


class Condition(str, Enum):
    CORRECT = "correct"
    RANDOM = "random"
    PARAPHRASE = "paraphrase"
    ADVERSARIAL = "adversarial"


REWRITE_MODES = (Condition.PARAPHRASE, Condition.ADVERSARIAL)

REWRITE_INSTRUCTIONS = {
    Condition.PARAPHRASE: PARAPHRASE_INSTRUCTION,
    Condition.ADVERSARIAL: ADVERSARIAL_INSTRUCTION,
}


@dataclass(frozen=True)
class ConditionAssignment:
    item_id: str
    condition: Condition
    seed: int = 0
    assigned_audio: AudioRef | None = None
    rewritten_text: str | None = None

    def __post_init__(self):
        if self.condition in (Condition.CORRECT, Condition.RANDOM):
            if self.assigned_audio is None:
                raise ValueError(f"{self.item_id}: {self.condition.value} requires assigned_audio")
        else:
            if not self.rewritten_text:
                raise ValueError(f"{self.item_id}: {self.condition.value} requires rewritten_text")


def assign_correct(items: list[QAItem], seed: int = 0) -> list[ConditionAssignment]:
    return [
        ConditionAssignment(item_id=it.item_id, condition=Condition.CORRECT, seed=seed, assigned_audio=it.audio)
        for it in items
    ]


def assign_random_audio(items: list[QAItem], seed: int) -> list[ConditionAssignment]:
    """Pair each item with a uniformly random audio that is not its own.

    Deterministic for a fixed (items, seed): audios are indexed in sorted
    audio_id order and draws come from ``random.Random(seed)``.
    """
    audio_by_id: dict[str, AudioRef] = {}
    for item in items:
        audio_by_id.setdefault(item.audio.audio_id, item.audio)
    audio_ids = sorted(audio_by_id)
    if len(audio_ids) < 2:
        raise DerangementError("random-audio condition needs at least 2 distinct audios")
    position = {aid: i for i, aid in enumerate(audio_ids)}

    rng = random.Random(seed)
    assignments = []
    for item in items:
        own = position[item.audio.audio_id]
        draw = rng.randrange(len(audio_ids) - 1)
        if draw >= own:
            draw += 1
        assignments.append(
            ConditionAssignment(
                item_id=item.item_id,
                condition=Condition.RANDOM,
                seed=seed,
                assigned_audio=audio_by_id[audio_ids[draw]],
            )
        )
    return assignments


# --- Rewrites ------------------------------------------------------------------


class RewriteClient(Protocol):
    def rewrite(self, instruction: str, text: str) -> str: ...


class HttpRewriteClient:
    """POST {instruction, text} -> {text}; decoding parameters pass through."""

    def __init__(
        self,
        base_url: str,
        timeout: float = 60.0,
        retries: int = 2,
        decoding: dict | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.decoding = decoding or {}

    def rewrite(self, instruction: str, text: str) -> str:
        payload: dict = {"instruction": instruction, "text": text}
        if self.decoding:
            payload["decoding"] = self.decoding
        body = post_json(self.base_url, payload, timeout=self.timeout, retries=self.retries)
        return str(body.get("text", ""))


def _content_key(mode: Condition, reference: str) -> str:
    digest = hashlib.sha256(reference.encode("utf-8")).hexdigest()
    return f"{mode.value}:{digest}"


class RewriteCache:
    """Content-addressed rewrite cache with optional JSON-lines persistence.

    Concurrent reads are lock-free on the dict snapshot; writes are
    serialized through the JSONL writer; duplicate in-flight generations of
    one key are coalesced.
    """

    def __init__(self, path: str | Path | None = None):
        self._entries: dict[str, str] = {}
        self._writer = None
        self.singleflight = SingleFlight()
        if path is not None:
            self.path = Path(path)
            if self.path.exists():
                for _, record in read_jsonl(self.path):
                    self._entries[record["key"]] = record["text"]
            self._writer = JsonlWriter(self.path)

    def get(self, mode: Condition, reference: str) -> str | None:
        return self._entries.get(_content_key(mode, reference))

    def put(self, mode: Condition, reference: str, text: str) -> None:
        key = _content_key(mode, reference)
        if key in self._entries:
            return
        self._entries[key] = text
        if self._writer is not None:
            self._writer.append(
                {"key": key, "mode": mode.value, "prompt_version": REWRITE_PROMPT_VERSION, "text": text}
            )


def generate_rewrite(
    reference: str,
    mode: Condition,
    llm: RewriteClient,
    cache: RewriteCache | None = None,
) -> str:
    """Rewrite the reference under the given mode, consulting the cache first."""
    if mode not in REWRITE_MODES:
        raise ValueError(f"mode must be paraphrase or adversarial, got {mode}")
    if not reference:
        raise ValueError("reference text must be non-empty")
    if cache is not None:
        cached = cache.get(mode, reference)
        if cached is not None:
            return cached

    def _call() -> str:
        hit = cache.get(mode, reference) if cache is not None else None
        if hit is not None:
            return hit
        text = llm.rewrite(REWRITE_INSTRUCTIONS[mode], reference)
        if not text or not text.strip():
            raise InvalidRewriteError(f"{mode.value} rewrite came back empty")
        if text.strip() == reference.strip():
            raise InvalidRewriteError(f"{mode.value} rewrite echoed the reference verbatim")
        if cache is not None:
            cache.put(mode, reference, text)
        return text

    if cache is not None:
        return cache.singleflight.do(_content_key(mode, reference), _call)
    return _call()


def load_rewrites(path: str | Path) -> dict[tuple[str, str], str]:
    """Load a rewrite fixture into a ((item_id, mode) -> text) map."""
    mapping: dict[tuple[str, str], str] = {}
    for lineno, record in read_jsonl(path):
        for required in ("item_id", "mode", "text"):
            if required not in record:
                raise MalformedRecordError(f"{path}:{lineno}: missing field {required!r}")
        key = (record["item_id"], record["mode"])
        if key in mapping:
            raise DuplicateKeyError(f"{path}:{lineno}: duplicate rewrite for {key}")
        mapping[key] = record["text"]
    return mapping


def save_rewrites(mapping: dict[tuple[str, str], str], path: str | Path) -> None:
    records = [
        {"item_id": item_id, "mode": mode, "prompt_version": REWRITE_PROMPT_VERSION, "text": text}
        for (item_id, mode), text in sorted(mapping.items())
    ]
    write_jsonl(path, records)


def missing_rewrites(
    items: list[QAItem], mapping: dict[tuple[str, str], str], modes=REWRITE_MODES
) -> list[tuple[str, str]]:
    """Coverage report: (item_id, mode) pairs absent from the fixture map."""
    gaps = []
    for item in items:
        for mode in modes:
            if (item.item_id, mode.value) not in mapping:
                gaps.append((item.item_id, mode.value))
    return gaps


def assign_rewrites(
    items: list[QAItem],
    mode: Condition,
    seed: int = 0,
    rewrites: dict[tuple[str, str], str] | None = None,
    llm: RewriteClient | None = None,
    cache: RewriteCache | None = None,
) -> list[ConditionAssignment]:
    """Build paraphrase/adversarial assignments from a fixture map or a live client."""
    assignments = []
    for item in items:
        if item.reference_answer is None:
            raise ValueError(f"{item.item_id}: {mode.value} condition needs a reference answer")
        text: str | None = None
        if rewrites is not None:
            text = rewrites.get((item.item_id, mode.value))
        if text is None:
            if llm is None:
                raise MalformedRecordError(
                    f"{item.item_id}: no {mode.value} rewrite in fixture and no client configured"
                )
            text = generate_rewrite(item.reference_answer, mode, llm, cache)
        assignments.append(
            ConditionAssignment(item_id=item.item_id, condition=mode, seed=seed, rewritten_text=text)
        )
    return assignments


# --- Persistence -----------------------------------------------------------------


def assignment_to_dict(assignment: ConditionAssignment) -> dict:
    out: dict = {
        "item_id": assignment.item_id,
        "condition": assignment.condition.value,
        "seed": assignment.seed,
    }
    if assignment.assigned_audio is not None:
        audio: dict = {"audio_id": assignment.assigned_audio.audio_id, "uri": assignment.assigned_audio.uri}
        if assignment.assigned_audio.duration_seconds is not None:
            audio["duration_seconds"] = assignment.assigned_audio.duration_seconds
        out["assigned_audio"] = audio
    if assignment.rewritten_text is not None:
        out["rewritten_text"] = assignment.rewritten_text
    return out


def assignment_from_dict(data: dict) -> ConditionAssignment:
    audio = None
    if "assigned_audio" in data:
        raw = data["assigned_audio"]
        audio = AudioRef(
            audio_id=raw["audio_id"], uri=raw["uri"], duration_seconds=raw.get("duration_seconds")
        )
    return ConditionAssignment(
        item_id=data["item_id"],
        condition=Condition(data["condition"]),
        seed=data.get("seed", 0),
        assigned_audio=audio,
        rewritten_text=data.get("rewritten_text"),
    )


def save_assignments(assignments: list[ConditionAssignment], path: str | Path) -> None:
    write_jsonl(path, [assignment_to_dict(a) for a in assignments])


def load_assignments(path: str | Path) -> list[ConditionAssignment]:
    return [assignment_from_dict(record) for _, record in read_jsonl(path)]
