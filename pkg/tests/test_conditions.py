import json
import threading

import pytest
from scipy import stats

from muqeval.conditions import (
    Condition,
    RewriteCache,
    assign_random_audio,
    assignment_to_dict,
    generate_rewrite,
    load_rewrites,
    missing_rewrites,
    save_rewrites,
)
from muqeval.corpus import AudioRef, DatasetTag, QAItem, Task
from muqeval.errors import DerangementError, DuplicateKeyError, InvalidRewriteError
from muqeval.storage import canonical_dumps


def make_items(n_items: int, n_audios: int) -> list[QAItem]:
    items = []
    for i in range(n_items):
        aid = f"audio_{i % n_audios:04d}"
        items.append(
            QAItem(
                item_id=f"musicqa_jamendo/{aid}/{i // n_audios}",
                audio=AudioRef(audio_id=aid, uri=f"{aid}.mp3"),
                question="Describe the music",
                task=Task.FREE_FORM,
                dataset_tag=DatasetTag.MUSICQA_JAMENDO,
                reference_answer=f"reference text {i}",
            )
        )
    return items


def test_two_audio_corpus_forces_the_other():
    items = make_items(2, 2)
    for assignment, item in zip(assign_random_audio(items, seed=3), items):
        assert assignment.assigned_audio.audio_id != item.audio.audio_id


def test_derangement_and_determinism():
    items = make_items(500, 50)
    first = assign_random_audio(items, seed=11)
    second = assign_random_audio(items, seed=11)
    own = {it.item_id: it.audio.audio_id for it in items}
    assert all(a.assigned_audio.audio_id != own[a.item_id] for a in first)
    blob1 = "".join(canonical_dumps(assignment_to_dict(a)) for a in first)
    blob2 = "".join(canonical_dumps(assignment_to_dict(a)) for a in second)
    assert blob1 == blob2


def test_different_seeds_differ():
    items = make_items(200, 40)
    a = [x.assigned_audio.audio_id for x in assign_random_audio(items, seed=1)]
    b = [x.assigned_audio.audio_id for x in assign_random_audio(items, seed=2)]
    assert a != b


def test_single_audio_raises():
    items = make_items(3, 1)
    with pytest.raises(DerangementError):
        assign_random_audio(items, seed=0)


def test_random_assignment_uniformity_chi_square():
    # 1,000 items spread over 100 audios, seed 7: no self-pairings and the
    # pooled assignment histogram is uniform at the 1% level.
    items = make_items(1000, 100)
    assignments = assign_random_audio(items, seed=7)
    own = {it.item_id: it.audio.audio_id for it in items}
    assert all(a.assigned_audio.audio_id != own[a.item_id] for a in assignments)
    counts: dict[str, int] = {f"audio_{i:04d}": 0 for i in range(100)}
    for assignment in assignments:
        counts[assignment.assigned_audio.audio_id] += 1
    result = stats.chisquare(list(counts.values()))
    assert result.pvalue > 0.01


class CountingClient:
    def __init__(self, reply="a different wording of the input"):
        self.calls = 0
        self.reply = reply

    def rewrite(self, instruction, text):
        self.calls += 1
        return self.reply


class OfflineClient:
    def rewrite(self, instruction, text):
        raise AssertionError("client must not be called on a cache hit")


def test_generate_rewrite_caches(tmp_path):
    cache = RewriteCache(tmp_path / "cache.jsonl")
    client = CountingClient()
    first = generate_rewrite("some reference", Condition.PARAPHRASE, client, cache)
    second = generate_rewrite("some reference", Condition.PARAPHRASE, client, cache)
    assert first == second
    assert client.calls == 1


def test_cache_hit_with_offline_client(tmp_path):
    path = tmp_path / "cache.jsonl"
    cache = RewriteCache(path)
    generate_rewrite("ref text", Condition.ADVERSARIAL, CountingClient("changed meaning"), cache)
    # new process: reload the persisted cache, client unreachable
    warm = RewriteCache(path)
    assert generate_rewrite("ref text", Condition.ADVERSARIAL, OfflineClient(), warm) == "changed meaning"


def test_cache_coalesces_concurrent_requests(tmp_path):
    import time

    class SlowClient:
        def __init__(self):
            self.calls = 0
            self.lock = threading.Lock()

        def rewrite(self, instruction, text):
            with self.lock:
                self.calls += 1
            time.sleep(0.05)
            return "slow rewrite result"

    cache = RewriteCache()
    client = SlowClient()
    results = []

    def work():
        results.append(generate_rewrite("same ref", Condition.PARAPHRASE, client, cache))

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert client.calls == 1
    assert set(results) == {"slow rewrite result"}


def test_empty_rewrite_rejected():
    with pytest.raises(InvalidRewriteError):
        generate_rewrite("ref", Condition.PARAPHRASE, CountingClient(""))


def test_verbatim_rewrite_rejected():
    with pytest.raises(InvalidRewriteError):
        generate_rewrite("ref", Condition.PARAPHRASE, CountingClient("ref"))


def test_mode_validation():
    with pytest.raises(ValueError):
        generate_rewrite("ref", Condition.CORRECT, CountingClient())
    with pytest.raises(ValueError):
        generate_rewrite("", Condition.PARAPHRASE, CountingClient())


def test_load_rewrites_fixture(data_dir):
    mapping = load_rewrites(data_dir / "rewrites.jsonl")
    assert len(mapping) == 3
    assert ("musicqa_jamendo/jam_000/0", "paraphrase") in mapping


def test_load_rewrites_duplicate(tmp_path):
    record = {"item_id": "x", "mode": "paraphrase", "text": "t"}
    path = tmp_path / "rw.jsonl"
    path.write_text(json.dumps(record) + "\n" + json.dumps(record) + "\n")
    with pytest.raises(DuplicateKeyError):
        load_rewrites(path)


def test_rewrites_save_load_round_trip(tmp_path):
    mapping = {
        ("item/1", "paraphrase"): "first text",
        ("item/1", "adversarial"): "second text",
        ("item/2", "paraphrase"): "third text",
    }
    path = tmp_path / "fixture.jsonl"
    save_rewrites(mapping, path)
    assert load_rewrites(path) == mapping


def test_missing_rewrites_report(data_dir):
    items = make_items(2, 2)
    mapping = {(items[0].item_id, "paraphrase"): "text"}
    gaps = missing_rewrites(items, mapping)
    assert (items[0].item_id, "adversarial") in gaps
    assert (items[1].item_id, "paraphrase") in gaps
    assert (items[0].item_id, "paraphrase") not in gaps


def test_assignment_requires_payload():
    from muqeval.conditions import ConditionAssignment

    with pytest.raises(ValueError):
        ConditionAssignment(item_id="x", condition=Condition.RANDOM)
    with pytest.raises(ValueError):
        ConditionAssignment(item_id="x", condition=Condition.PARAPHRASE, rewritten_text="")
