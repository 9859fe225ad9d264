"""Set-based factual scoring: P/R/F1, chunk merging, binary-choice, true-false.

Orientation is the standard one: precision over predicted labels, recall
over truth labels. Aggregation is macro (arithmetic mean of per-item
scores). Majority votes over an even chunk count resolve to false.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .corpus import LabelVocabulary
from .errors import ConfigurationError, CoverageError, EmptyAggregateError, InvalidItemError
from .prompts import BINARY_CHOICE_PROMPTS


@dataclass(frozen=True)
class SetScore:
    item_id: str
    precision: float
    recall: float
    f1: float
    predicted: frozenset[str]
    truth: frozenset[str]


@dataclass(frozen=True)
class AggregateRow:
    model_id: str
    condition: str
    task: str
    metric_name: str
    mean: float
    count: int


@dataclass(frozen=True)
class BooleanJudgment:
    item_id: str
    label: str
    per_chunk: tuple[bool, ...]
    merged_any: bool = field(init=False)
    merged_majority: bool = field(init=False)

    def __post_init__(self):
        if not self.per_chunk:
            raise ValueError(f"{self.item_id}/{self.label}: needs at least one chunk")
        trues = sum(self.per_chunk)
        object.__setattr__(self, "merged_any", trues > 0)
        object.__setattr__(self, "merged_majority", trues > len(self.per_chunk) - trues)


def score_item(predicted: set[str], truth: set[str], item_id: str = "") -> SetScore:
    """Standard set P/R/F1; empty prediction scores zero, empty truth is an error."""
    if not truth:
        raise InvalidItemError(f"{item_id}: truth label set must be non-empty")
    predicted = frozenset(predicted)
    truth = frozenset(truth)
    hits = len(predicted & truth)
    precision = hits / len(predicted) if predicted else 0.0
    recall = hits / len(truth)
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return SetScore(
        item_id=item_id, precision=precision, recall=recall, f1=f1, predicted=predicted, truth=truth
    )


def merge_chunk_labels(per_chunk: list[set[str]]) -> set[str]:
    """Union of per-chunk extracted label sets."""
    if not per_chunk:
        raise ValueError("merge requires at least one chunk")
    merged: set[str] = set()
    for labels in per_chunk:
        merged |= labels
    return merged


def aggregate(scores: list[SetScore]) -> tuple[float, float, float, int]:
    """Macro means of per-item precision, recall, F1 plus the item count."""
    if not scores:
        raise EmptyAggregateError("cannot aggregate zero scores")
    n = len(scores)
    return (
        sum(s.precision for s in scores) / n,
        sum(s.recall for s in scores) / n,
        sum(s.f1 for s in scores) / n,
        n,
    )


def rows_from_scores(
    scores: list[SetScore], model_id: str, condition: str, task: str
) -> list[AggregateRow]:
    p, r, f1, count = aggregate(scores)
    return [
        AggregateRow(model_id, condition, task, "Precision", p, count),
        AggregateRow(model_id, condition, task, "Recall", r, count),
        AggregateRow(model_id, condition, task, "F1-Score", f1, count),
    ]


# --- Binary choice ---------------------------------------------------------------


def make_binary_choice_item(
    truth_label: str,
    vocab: LabelVocabulary,
    rng: random.Random,
    truth_first: bool | None = None,
) -> tuple[str, int]:
    """One Between-style prompt; returns (prompt, position of the truth: 0 or 1).

    The distractor is uniform over the vocabulary minus the truth. When
    ``truth_first`` is None the order is a fair coin; batch construction
    should use :func:`make_binary_choice_items` to get an exact 50/50 split.
    """
    if len(vocab.canonical) < 2:
        raise ConfigurationError("binary choice needs a vocabulary of at least 2 labels")
    others = [label for label in vocab.canonical if label != truth_label]
    if len(others) == len(vocab.canonical):
        raise ConfigurationError(f"truth label {truth_label!r} not in vocabulary")
    distractor = others[rng.randrange(len(others))]
    if truth_first is None:
        truth_first = bool(rng.getrandbits(1))
    first, second = (truth_label, distractor) if truth_first else (distractor, truth_label)
    template = BINARY_CHOICE_PROMPTS.get(
        vocab.task.value, "Between {first} and {second}, which better describes this piece of music?"
    )
    prompt = template.format(first=first, second=second)
    return prompt, 0 if truth_first else 1


def make_binary_choice_items(
    truth_labels: list[str], vocab: LabelVocabulary, seed: int
) -> list[tuple[str, int]]:
    """Batch of Between-prompts with the truth first in exactly half of them."""
    rng = random.Random(seed)
    n = len(truth_labels)
    order = [True] * (n // 2) + [False] * (n - n // 2)
    rng.shuffle(order)
    return [
        make_binary_choice_item(truth, vocab, rng, truth_first=first)
        for truth, first in zip(truth_labels, order)
    ]


# --- True-false grid ---------------------------------------------------------------


def score_true_false(
    judgments: list[BooleanJudgment],
    truth: dict[str, set[str]],
    strategy: str = "any",
    labels: tuple[str, ...] | None = None,
) -> tuple[float, float, float, float]:
    """Score a per-(item, label) boolean grid: (P, R, F1, accuracy).

    ``strategy`` selects which merged chunk vote counts as the prediction.
    ``labels`` fixes the label universe; by default it is the union of
    judged labels. Every (item, label) cell must be judged exactly once.
    """
    if strategy not in ("any", "majority"):
        raise ConfigurationError(f"unknown merge strategy {strategy!r}")
    universe = tuple(labels) if labels is not None else tuple(sorted({j.label for j in judgments}))
    judged: dict[tuple[str, str], BooleanJudgment] = {}
    for judgment in judgments:
        cell = (judgment.item_id, judgment.label)
        if cell in judged:
            raise CoverageError(f"duplicate judgment for {cell}", gaps=[cell])
        judged[cell] = judgment
    gaps = [
        (item_id, label)
        for item_id in truth
        for label in universe
        if (item_id, label) not in judged
    ]
    if gaps:
        raise CoverageError(f"{len(gaps)} unjudged (item, label) cells", gaps=gaps)

    tp = fp = tn = fn = 0
    for item_id, truth_labels in truth.items():
        for label in universe:
            judgment = judged[(item_id, label)]
            predicted = judgment.merged_any if strategy == "any" else judgment.merged_majority
            actual = label in truth_labels
            if predicted and actual:
                tp += 1
            elif predicted:
                fp += 1
            elif actual:
                fn += 1
            else:
                tn += 1
    total = tp + fp + tn + fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    accuracy = (tp + tn) / total if total else 0.0
    return precision, recall, f1, accuracy
