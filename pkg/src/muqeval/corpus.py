"""Corpus loaders: MusicQA free-form pairs, FMA-Small genres, MusicNet annotations.

Input formats (see DATA.md for the full field reference):

* MusicQA: JSON-lines, one record per (audio, question) pair with fields
  ``audio_id``, ``question``, ``answer`` and optional ``uri``,
  ``duration_seconds``, ``item_id``.
* FMA-Small: metadata CSV with header ``track_id,genre_top[,uri]`` plus a
  hierarchy CSV with header ``genre,parent`` listing subgenre edges.
* MusicNet: CSV with header ``recording_id,composer,instruments[,uri]``;
  ``instruments`` is a semicolon-separated list.

Truth labels are canonicalized at load time with the same alias tables the
extractor uses, so there is exactly one normalization code path.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import DuplicateKeyError, MalformedRecordError, UnknownLabelError
from .prompts import TASK_PROMPTS
from .storage import canonical_dumps, read_jsonl


class Task(str, Enum):
    FREE_FORM = "free_form"
    GENRE = "genre"
    INSTRUMENT = "instrument"
    COMPOSER = "composer"
    BINARY_CHOICE = "binary_choice"
    TRUE_FALSE = "true_false"


class DatasetTag(str, Enum):
    MUSICQA_JAMENDO = "musicqa_jamendo"
    MUSICQA_MTAT = "musicqa_mtat"
    FMA_SMALL = "fma_small"
    MUSICNET = "musicnet"


@dataclass(frozen=True)
class AudioRef:
    audio_id: str
    uri: str
    duration_seconds: float | None = None

    def __post_init__(self):
        if not self.audio_id:
            raise ValueError("audio_id must be non-empty")
        if not self.uri:
            raise ValueError("uri must be non-empty")
        if self.duration_seconds is not None and self.duration_seconds < 0:
            raise ValueError("duration_seconds must be non-negative")


@dataclass(frozen=True)
class QAItem:
    item_id: str
    audio: AudioRef
    question: str
    task: Task
    dataset_tag: DatasetTag
    reference_answer: str | None = None
    truth_labels: frozenset[str] | None = None

    def __post_init__(self):
        has_ref = self.reference_answer is not None
        has_labels = self.truth_labels is not None
        if self.task is Task.FREE_FORM:
            if not has_ref or has_labels:
                raise ValueError(f"{self.item_id}: free_form items carry reference_answer only")
        else:
            if has_ref or not has_labels:
                raise ValueError(f"{self.item_id}: factual items carry truth_labels only")


@dataclass
class LabelVocabulary:
    """Closed label set for one factual task, plus alias and hierarchy maps."""

    task: Task
    canonical: tuple[str, ...]
    aliases: dict[str, str] = field(default_factory=dict)
    tree: dict[str, str] | None = None

    def __post_init__(self):
        seen = set()
        for label in self.canonical:
            if label != label.lower():
                raise ValueError(f"canonical label not lowercase: {label!r}")
            if label in seen:
                raise ValueError(f"duplicate canonical label: {label!r}")
            seen.add(label)
        for alias, target in self.aliases.items():
            if target not in seen:
                raise ValueError(f"alias {alias!r} maps to unknown label {target!r}")
        if self.tree is not None:
            for sub, root in self.tree.items():
                if root not in seen:
                    raise ValueError(f"tree root {root!r} for {sub!r} is not canonical")

    def to_dict(self) -> dict:
        out = {
            "task": self.task.value,
            "canonical": list(self.canonical),
            "aliases": self.aliases,
        }
        if self.tree is not None:
            out["tree"] = self.tree
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "LabelVocabulary":
        return cls(
            task=Task(data["task"]),
            canonical=tuple(data["canonical"]),
            aliases=dict(data.get("aliases", {})),
            tree=dict(data["tree"]) if "tree" in data else None,
        )


FMA_TOP_GENRES = (
    "electronic",
    "experimental",
    "folk",
    "hip-hop",
    "instrumental",
    "international",
    "pop",
    "rock",
)

MUSICNET_INSTRUMENTS = (
    "bass",
    "bassoon",
    "cello",
    "clarinet",
    "flute",
    "harpsichord",
    "horn",
    "oboe",
    "piano",
    "viola",
    "violin",
)

MUSICNET_COMPOSERS = (
    "bach",
    "beethoven",
    "brahms",
    "cambini",
    "dvorak",
    "faure",
    "haydn",
    "mozart",
    "ravel",
    "schubert",
)

# Surface variants folded into one canonical instrument. Piano variants map
# to piano, horn variants to horn, and contrabass / double bass to bass.
INSTRUMENT_ALIASES: dict[str, str] = {
    "acoustic grand piano": "piano",
    "grand piano": "piano",
    "upright piano": "piano",
    "fortepiano": "piano",
    "pianoforte": "piano",
    "pianos": "piano",
    "french horn": "horn",
    "french horns": "horn",
    "horns": "horn",
    "double bass": "bass",
    "double basses": "bass",
    "contrabass": "bass",
    "contrabasses": "bass",
    "upright bass": "bass",
    "string bass": "bass",
    "basses": "bass",
    "violins": "violin",
    "violas": "viola",
    "cellos": "cello",
    "violoncello": "cello",
    "violoncellos": "cello",
    "flutes": "flute",
    "oboes": "oboe",
    "clarinets": "clarinet",
    "bassoons": "bassoon",
    "harpsichords": "harpsichord",
}

# Ten MusicNet composers reduced to their widely recognized surnames.
COMPOSER_ALIASES: dict[str, str] = {
    "j.s. bach": "bach",
    "j. s. bach": "bach",
    "js bach": "bach",
    "johann sebastian bach": "bach",
    "ludwig van beethoven": "beethoven",
    "l. van beethoven": "beethoven",
    "l.v. beethoven": "beethoven",
    "johannes brahms": "brahms",
    "giuseppe cambini": "cambini",
    "giuseppe maria cambini": "cambini",
    "antonin dvorak": "dvorak",
    "antonín dvořák": "dvorak",
    "antonin dvořák": "dvorak",
    "dvořák": "dvorak",
    "gabriel faure": "faure",
    "gabriel fauré": "faure",
    "fauré": "faure",
    "joseph haydn": "haydn",
    "franz joseph haydn": "haydn",
    "wolfgang amadeus mozart": "mozart",
    "w.a. mozart": "mozart",
    "w. a. mozart": "mozart",
    "johannes chrysostomus wolfgangus theophilus mozart": "mozart",
    "maurice ravel": "ravel",
    "franz schubert": "schubert",
}

# The four captioning questions asked of every MusicQA audio, as opposed to
# the audio-specific ones; matched exactly up to case and trailing ?/./!
GENERIC_CAPTIONING_QUESTIONS = (
    "describe the music",
    "describe the music in detail",
    "what do you hear in the audio",
    "what can be inferred from the audio",
)


def is_generic_captioning_question(question: str) -> bool:
    return question.strip().rstrip("?.!").strip().lower() in GENERIC_CAPTIONING_QUESTIONS


def instrument_vocabulary() -> LabelVocabulary:
    return LabelVocabulary(
        task=Task.INSTRUMENT, canonical=MUSICNET_INSTRUMENTS, aliases=dict(INSTRUMENT_ALIASES)
    )


def composer_vocabulary() -> LabelVocabulary:
    return LabelVocabulary(
        task=Task.COMPOSER, canonical=MUSICNET_COMPOSERS, aliases=dict(COMPOSER_ALIASES)
    )


# --- MusicQA -----------------------------------------------------------------


def load_musicqa(path: str | Path, dataset_tag: DatasetTag = DatasetTag.MUSICQA_JAMENDO) -> list[QAItem]:
    """One free-form item per (question, audio) record, ordered by item_id."""
    items: list[QAItem] = []
    seen_ids: set[str] = set()
    question_index: dict[str, int] = {}
    for lineno, record in read_jsonl(path):
        for required in ("audio_id", "question", "answer"):
            if required not in record or record[required] in (None, ""):
                raise MalformedRecordError(f"{path}:{lineno}: missing field {required!r}")
        audio_id = str(record["audio_id"])
        qidx = question_index.get(audio_id, 0)
        question_index[audio_id] = qidx + 1
        item_id = record.get("item_id") or f"{dataset_tag.value}/{audio_id}/{qidx}"
        if item_id in seen_ids:
            raise DuplicateKeyError(f"{path}:{lineno}: duplicate item_id {item_id!r}")
        seen_ids.add(item_id)
        audio = AudioRef(
            audio_id=audio_id,
            uri=str(record.get("uri") or audio_id),
            duration_seconds=record.get("duration_seconds"),
        )
        items.append(
            QAItem(
                item_id=item_id,
                audio=audio,
                question=str(record["question"]),
                task=Task.FREE_FORM,
                dataset_tag=dataset_tag,
                reference_answer=str(record["answer"]),
            )
        )
    items.sort(key=lambda it: it.item_id)
    return items


# --- FMA-Small ---------------------------------------------------------------


def _read_csv(path: str | Path, required: tuple[str, ...]) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise MalformedRecordError(f"{path}: empty CSV (no header row)")
        missing = [col for col in required if col not in reader.fieldnames]
        if missing:
            raise MalformedRecordError(f"{path}: missing columns {missing}")
        return list(reader)


def _resolve_genre_tree(edges: dict[str, str]) -> dict[str, str]:
    """Map every subgenre to its top-level root by walking parent edges."""
    roots = set(FMA_TOP_GENRES)
    tree: dict[str, str] = {}
    for sub in edges:
        node = sub
        hops = 0
        while node not in roots:
            if node not in edges or hops > len(edges):
                raise UnknownLabelError(f"genre hierarchy does not reach a top-level genre from {sub!r}")
            node = edges[node]
            hops += 1
        tree[sub] = node
    return tree


def load_fma_small(
    metadata: str | Path,
    hierarchy: str | Path,
    resolve_subgenres: bool = True,
) -> tuple[list[QAItem], LabelVocabulary]:
    """Genre-task items with singleton truth labels over the 8 top genres."""
    edges: dict[str, str] = {}
    for row in _read_csv(hierarchy, ("genre", "parent")):
        edges[row["genre"].strip().lower()] = row["parent"].strip().lower()
    tree = _resolve_genre_tree(edges)
    vocab = LabelVocabulary(task=Task.GENRE, canonical=FMA_TOP_GENRES, tree=tree)

    items: list[QAItem] = []
    seen_ids: set[str] = set()
    question = TASK_PROMPTS["genre"]["default"]
    for row in _read_csv(metadata, ("track_id", "genre_top")):
        track_id = row["track_id"].strip()
        if not track_id:
            raise MalformedRecordError(f"{metadata}: blank track_id")
        label = row["genre_top"].strip().lower()
        if not label:
            raise MalformedRecordError(f"{metadata}: track {track_id}: blank genre_top")
        if label not in vocab.canonical:
            if label in tree and resolve_subgenres:
                label = tree[label]
            else:
                raise UnknownLabelError(
                    f"{metadata}: track {track_id}: genre {label!r} is neither a "
                    "top-level genre nor in the hierarchy"
                )
        item_id = f"{DatasetTag.FMA_SMALL.value}/{track_id}/0"
        if item_id in seen_ids:
            raise DuplicateKeyError(f"{metadata}: duplicate track_id {track_id!r}")
        seen_ids.add(item_id)
        items.append(
            QAItem(
                item_id=item_id,
                audio=AudioRef(audio_id=f"fma:{track_id}", uri=row.get("uri") or f"{track_id}.mp3"),
                question=question,
                task=Task.GENRE,
                dataset_tag=DatasetTag.FMA_SMALL,
                truth_labels=frozenset({label}),
            )
        )
    items.sort(key=lambda it: it.item_id)
    return items, vocab


# --- MusicNet ----------------------------------------------------------------


def load_musicnet(
    annotations: str | Path,
) -> tuple[list[QAItem], LabelVocabulary, LabelVocabulary]:
    """Per recording: one instrument-set item and one composer item."""
    inst_vocab = instrument_vocabulary()
    comp_vocab = composer_vocabulary()
    items: list[QAItem] = []
    seen_ids: set[str] = set()
    for row in _read_csv(annotations, ("recording_id", "composer", "instruments")):
        rid = row["recording_id"].strip()
        if not rid:
            raise MalformedRecordError(f"{annotations}: blank recording_id")
        if f"{DatasetTag.MUSICNET.value}/{rid}/0" in seen_ids:
            raise DuplicateKeyError(f"{annotations}: duplicate recording_id {rid!r}")

        raw_instruments = [part.strip() for part in row["instruments"].split(";") if part.strip()]
        if not raw_instruments:
            raise MalformedRecordError(f"{annotations}: recording {rid}: empty instrument list")
        instruments = set()
        for name in raw_instruments:
            low = name.lower()
            canon = inst_vocab.aliases.get(low, low)
            if canon not in inst_vocab.canonical:
                raise UnknownLabelError(f"{annotations}: recording {rid}: unknown instrument {name!r}")
            instruments.add(canon)

        composer_raw = row["composer"].strip().lower()
        composer = comp_vocab.aliases.get(composer_raw, composer_raw)
        if composer not in comp_vocab.canonical:
            raise UnknownLabelError(f"{annotations}: recording {rid}: unknown composer {row['composer']!r}")

        audio = AudioRef(audio_id=f"musicnet:{rid}", uri=row.get("uri") or f"{rid}.wav")
        inst_id = f"{DatasetTag.MUSICNET.value}/{rid}/0"
        comp_id = f"{DatasetTag.MUSICNET.value}/{rid}/1"
        seen_ids.update((inst_id, comp_id))
        items.append(
            QAItem(
                item_id=inst_id,
                audio=audio,
                question=TASK_PROMPTS["instrument"]["default"],
                task=Task.INSTRUMENT,
                dataset_tag=DatasetTag.MUSICNET,
                truth_labels=frozenset(instruments),
            )
        )
        items.append(
            QAItem(
                item_id=comp_id,
                audio=audio,
                question=TASK_PROMPTS["composer"]["default"],
                task=Task.COMPOSER,
                dataset_tag=DatasetTag.MUSICNET,
                truth_labels=frozenset({composer}),
            )
        )
    items.sort(key=lambda it: it.item_id)
    return items, inst_vocab, comp_vocab


# --- Canonical serialization ---------------------------------------------------


def item_to_dict(item: QAItem) -> dict:
    audio: dict = {"audio_id": item.audio.audio_id, "uri": item.audio.uri}
    if item.audio.duration_seconds is not None:
        audio["duration_seconds"] = item.audio.duration_seconds
    out: dict = {
        "item_id": item.item_id,
        "audio": audio,
        "question": item.question,
        "task": item.task.value,
        "dataset_tag": item.dataset_tag.value,
    }
    if item.reference_answer is not None:
        out["reference_answer"] = item.reference_answer
    if item.truth_labels is not None:
        out["truth_labels"] = sorted(item.truth_labels)
    return out


def item_from_dict(data: dict) -> QAItem:
    audio = data["audio"]
    return QAItem(
        item_id=data["item_id"],
        audio=AudioRef(
            audio_id=audio["audio_id"],
            uri=audio["uri"],
            duration_seconds=audio.get("duration_seconds"),
        ),
        question=data["question"],
        task=Task(data["task"]),
        dataset_tag=DatasetTag(data["dataset_tag"]),
        reference_answer=data.get("reference_answer"),
        truth_labels=frozenset(data["truth_labels"]) if "truth_labels" in data else None,
    )


def serialize_items(items: list[QAItem]) -> str:
    return "".join(canonical_dumps(item_to_dict(item)) + "\n" for item in items)


def save_items(items: list[QAItem], path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(serialize_items(items), encoding="utf-8")


def load_items(path: str | Path) -> list[QAItem]:
    return [item_from_dict(record) for _, record in read_jsonl(path)]


def save_vocabulary(vocab: LabelVocabulary, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(canonical_dumps(vocab.to_dict()) + "\n", encoding="utf-8")


def load_vocabulary(path: str | Path) -> LabelVocabulary:
    return LabelVocabulary.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
