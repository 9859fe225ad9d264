"""Acceptance criteria, one test per criterion.

The whole module runs with no ML stack and no network: replay model
endpoints, the fallback extractor, and the mock embedding provider.
A summary line per criterion is printed at the end of the pytest run.
"""

import itertools
import json
import math
import random
import time

import pytest
import yaml

import oracles
from muqeval.cli import main
from muqeval.conditions import assign_random_audio, assignment_to_dict
from muqeval.corpus import AudioRef, DatasetTag, LabelVocabulary, QAItem, Task
from muqeval.factual_scoring import (
    BooleanJudgment,
    make_binary_choice_items,
    score_item,
)
from muqeval.ngram_metrics import (
    TokenSequence,
    bleu_mean,
    bleu_n,
    build_idf,
    cider,
    meteor_lite,
    rouge_l,
)
from muqeval.runner import ModelTranscript, TranscriptStore, score_factual
from muqeval.storage import canonical_dumps

TOL = 1e-9

GENRES = ("electronic", "experimental", "folk", "hip-hop", "instrumental", "international", "pop", "rock")


def seq(text: str) -> TokenSequence:
    return TokenSequence(tuple(text.split()))


def genre_vocab() -> LabelVocabulary:
    return LabelVocabulary(task=Task.GENRE, canonical=GENRES)


def test_metric_oracle_suite():
    """Worked examples to 1e-9 plus exhaustive brute-force equivalence (< 1 min)."""
    started = time.monotonic()

    # Hand-computed worked examples.
    assert bleu_n(seq("a b c d e f"), seq("a b c d e f"), 4) == pytest.approx(1.0, abs=TOL)
    assert bleu_n(seq("the the the"), seq("the cat"), 1) == pytest.approx(1 / 3, abs=TOL)
    assert bleu_n(seq("the cat"), seq("the cat sat"), 1) == pytest.approx(math.exp(-0.5), abs=TOL)
    assert bleu_mean(seq("a b c d"), seq("a b x d")) == pytest.approx(0.31266308030118056, abs=TOL)
    assert rouge_l(seq("cat the sat"), seq("the cat sat")) == pytest.approx(2 / 3, abs=TOL)
    assert rouge_l(seq("a b"), seq("x y")) == 0.0
    assert meteor_lite(seq("a b c d e"), seq("a b c d e")) == pytest.approx(0.996, abs=TOL)
    assert meteor_lite(seq("running"), seq("runs")) == pytest.approx(0.5, abs=TOL)
    idf = build_idf([seq("a b c d e"), seq("f g h i j")])
    assert cider(seq("a b c d e"), seq("a b c d e"), idf) == pytest.approx(10.0, abs=TOL)
    assert cider(seq("a b c"), seq("x y z"), idf) == 0.0
    single = build_idf([seq("a b c d")])
    assert cider(seq("a b c d"), seq("a b c d"), single) == 0.0

    # Exhaustive equivalence over every ordered pair of sequences with
    # length <= 5 drawn from a 3-symbol alphabet.
    pool = [list(p) for size in range(1, 6) for p in itertools.product("abc", repeat=size)]
    sequences = [(tokens, TokenSequence(tuple(tokens))) for tokens in pool]
    assert len(pool) == 363
    for cand_tokens, cand_seq in sequences:
        for ref_tokens, ref_seq in sequences:
            for n in range(1, 5):
                got = bleu_n(cand_seq, ref_seq, n)
                want = oracles.bleu_n(cand_tokens, ref_tokens, n)
                assert abs(got - want) < 1e-12, (cand_tokens, ref_tokens, n)
            got = rouge_l(cand_seq, ref_seq)
            want = oracles.rouge_l(cand_tokens, ref_tokens)
            assert abs(got - want) < 1e-12, (cand_tokens, ref_tokens)

    assert time.monotonic() - started < 60.0


def test_identity_and_range_properties():
    """metric(x,x) identities; declared bounds over 10,000 randomized pairs."""
    rng = random.Random(20240809)
    alphabet = ["a", "b", "c", "d", "e"]

    # Identities.
    for length in (4, 5, 7, 10):
        tokens = tuple(rng.choice(alphabet) for _ in range(length))
        s = TokenSequence(tokens)
        assert bleu_mean(s, s) == pytest.approx(1.0, abs=TOL)
        assert bleu_n(s, s, 4) == pytest.approx(1.0, abs=TOL)
        assert rouge_l(s, s) == pytest.approx(1.0, abs=TOL)
        assert meteor_lite(s, s) == pytest.approx(1.0 - 0.5 / length**3, abs=TOL)
    idf2 = build_idf([seq("p q r s t"), seq("u v w x y")])
    assert cider(seq("p q r s t"), seq("p q r s t"), idf2) == pytest.approx(10.0, abs=TOL)

    # Bounds across 10,000 randomized pairs.
    idf = build_idf(
        [TokenSequence(tuple(rng.choice(alphabet) for _ in range(rng.randint(1, 10)))) for _ in range(50)]
    )
    for _ in range(10_000):
        cand = TokenSequence(tuple(rng.choice(alphabet) for _ in range(rng.randint(1, 12))))
        ref = TokenSequence(tuple(rng.choice(alphabet) for _ in range(rng.randint(1, 12))))
        assert 0.0 <= bleu_n(cand, ref, 4) <= 1.0
        assert 0.0 <= bleu_mean(cand, ref) <= 1.0
        assert 0.0 <= rouge_l(cand, ref) <= 1.0
        assert 0.0 <= meteor_lite(cand, ref) <= 1.0
        assert 0.0 <= cider(cand, ref, idf) <= 10.0


def test_hedged_answer_scoring():
    """The hedged genre answer scores F1 = 0.667 via the fallback extractor."""
    item = QAItem(
        item_id="fma_small/hedged/0",
        audio=AudioRef(audio_id="t3", uri="t3.mp3"),
        question="What genre does this piece of music fall under?",
        task=Task.GENRE,
        dataset_tag=DatasetTag.FMA_SMALL,
        truth_labels=frozenset({"pop"}),
    )
    store = TranscriptStore()
    store.put(
        ModelTranscript(
            item_id=item.item_id,
            condition="correct",
            model_id="hedging-model",
            chunks=[(0, "This piece of music falls under the genre of pop/soft rock.")],
        )
    )
    rows, audits, scores = score_factual(store, [item], genre_vocab(), extractor="fallback")
    assert scores[0].predicted == frozenset({"pop", "rock"})
    f1_row = next(r for r in rows if r.metric_name == "F1-Score")
    assert f1_row.mean == pytest.approx(2 / 3, abs=TOL)


def test_random_guess_calibration():
    """Uniform random genre answers over a balanced 8,000-item fixture: F1 ~ 0.125."""
    started = time.monotonic()
    items = []
    store = TranscriptStore()
    rng = random.Random(1234)
    for i in range(8000):
        truth = GENRES[i % 8]
        item = QAItem(
            item_id=f"fma_small/{i:05d}/0",
            audio=AudioRef(audio_id=f"fma:{i:05d}", uri=f"{i:05d}.mp3"),
            question="What genre does this piece of music fall under?",
            task=Task.GENRE,
            dataset_tag=DatasetTag.FMA_SMALL,
            truth_labels=frozenset({truth}),
        )
        items.append(item)
        guess = GENRES[rng.randrange(8)]
        store.put(
            ModelTranscript(
                item_id=item.item_id,
                condition="random",
                model_id="uniform-guesser",
                chunks=[(0, f"I would call this {guess} music.")],
            )
        )
    rows, _, scores = score_factual(store, items, genre_vocab(), extractor="fallback")
    assert len(scores) == 8000
    f1_row = next(r for r in rows if r.metric_name == "F1-Score")
    assert 0.115 <= f1_row.mean <= 0.135
    assert time.monotonic() - started < 120.0


def test_derangement_and_determinism():
    """10,000 random-audio assignments: no self-pairings, byte-identical reruns."""
    items = []
    for i in range(10_000):
        aid = f"audio_{i % 200:04d}"
        items.append(
            QAItem(
                item_id=f"musicqa_jamendo/{aid}/{i // 200}",
                audio=AudioRef(audio_id=aid, uri=f"{aid}.mp3"),
                question="Describe the music",
                task=Task.FREE_FORM,
                dataset_tag=DatasetTag.MUSICQA_JAMENDO,
                reference_answer=f"reference {i}",
            )
        )
    own = {item.item_id: item.audio.audio_id for item in items}
    first = assign_random_audio(items, seed=42)
    assert len(first) == 10_000
    assert sum(1 for a in first if a.assigned_audio.audio_id == own[a.item_id]) == 0
    second = assign_random_audio(items, seed=42)
    blob1 = "\n".join(canonical_dumps(assignment_to_dict(a)) for a in first).encode()
    blob2 = "\n".join(canonical_dumps(assignment_to_dict(a)) for a in second).encode()
    assert blob1 == blob2


def test_binary_choice_balance():
    """A 1,000-item batch puts the truth first exactly 500 times."""
    truths = [GENRES[i % 8] for i in range(1000)]
    batch = make_binary_choice_items(truths, genre_vocab(), seed=99)
    positions = [pos for _, pos in batch]
    assert positions.count(0) == 500
    assert positions.count(1) == 500
    for (prompt, _), truth in zip(batch, truths):
        assert truth in prompt


def test_chunk_merge_truth_table():
    """per_chunk [T,F,F] -> any=T, majority=F; [T,T,F] -> any=T, majority=T."""
    j1 = BooleanJudgment(item_id="i", label="piano", per_chunk=(True, False, False))
    assert j1.merged_any is True
    assert j1.merged_majority is False
    j2 = BooleanJudgment(item_id="i", label="piano", per_chunk=(True, True, False))
    assert j2.merged_any is True
    assert j2.merged_majority is True


def test_end_to_end_replay_determinism(tmp_path, data_dir):
    """Two fresh pipeline invocations produce byte-identical CSV reports."""

    def one_invocation(tag: str) -> bytes:
        cache = tmp_path / f"cache_{tag}"
        config = {
            "seed": 7,
            "cache_dir": str(cache),
            "datasets": {"musicqa": {"path": str(data_dir / "musicqa.jsonl"), "tag": "musicqa_jamendo"}},
            "models": [
                {
                    "model_id": "replaymodel",
                    "kind": "replay",
                    "transcript_path": str(data_dir / "replay_transcripts.jsonl"),
                }
            ],
            "conditions": ["correct", "random"],
            "tasks": ["free_form"],
            "embedding": {"provider": "mock"},
            "extractor": {"kind": "fallback"},
        }
        config_path = tmp_path / f"config_{tag}.yaml"
        config_path.write_text(yaml.safe_dump(config))
        assert main(["--config", str(config_path), "ingest"]) == 0
        assert main(["--config", str(config_path), "run"]) == 0
        assert main(["--config", str(config_path), "score"]) == 0
        assert main(["--config", str(config_path), "report", "--format", "csv"]) == 0
        return (cache / "report.csv").read_bytes()

    first = one_invocation("a")
    second = one_invocation("b")
    assert first == second
    header = first.decode().splitlines()[0]
    assert header == "model,condition,task,BLEU,BLEU-4,METEOR,ROUGE,BERTScore,CIDEr,CLAPText"
    # 20 items under each of the two conditions contributed
    aggregates = [
        json.loads(line) for line in (tmp_path / "cache_a" / "aggregates.jsonl").read_text().splitlines()
    ]
    assert all(record["count"] == 20 for record in aggregates)
