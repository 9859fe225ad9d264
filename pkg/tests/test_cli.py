import json

import yaml

from muqeval.cli import main


def write_config(tmp_path, data_dir, cache_name="cache", **overrides):
    config = {
        "seed": 7,
        "cache_dir": str(tmp_path / cache_name),
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
    config.update(overrides)
    path = tmp_path / f"{cache_name}_config.yaml"
    path.write_text(yaml.safe_dump(config))
    return path


def test_full_pipeline(tmp_path, data_dir, capsys):
    config = write_config(tmp_path, data_dir)
    cache = tmp_path / "cache"

    assert main(["--config", str(config), "ingest"]) == 0
    assert len((cache / "items.jsonl").read_text().splitlines()) == 20
    assert json.loads((cache / "run_meta.json").read_text())["seed"] == 7

    assert main(["--config", str(config), "conditions"]) == 0
    assert (cache / "assignments_correct.jsonl").exists()
    assert (cache / "assignments_random.jsonl").exists()

    assert main(["--config", str(config), "run"]) == 0
    assert len((cache / "transcripts.jsonl").read_text().splitlines()) == 40

    assert main(["--config", str(config), "score"]) == 0
    assert (cache / "aggregates.jsonl").exists()
    assert (cache / "metrics_freeform.jsonl").exists()

    assert main(["--config", str(config), "report", "--format", "csv"]) == 0
    report = (cache / "report.csv").read_text()
    header = report.splitlines()[0]
    assert header == "model,condition,task,BLEU,BLEU-4,METEOR,ROUGE,BERTScore,CIDEr,CLAPText"
    assert len(report.splitlines()) == 3  # header + (correct, random)

    assert main(["--config", str(config), "report", "--format", "markdown"]) == 0
    assert (cache / "report.md").read_text().startswith("| model")


def test_missing_config_exits_2(tmp_path):
    assert main(["--config", str(tmp_path / "none.yaml"), "ingest"]) == 2


def test_invalid_config_exits_2(tmp_path, data_dir):
    config = write_config(tmp_path, data_dir, metrics=["BLEU", "NOT-A-METRIC"])
    assert main(["--config", str(config), "ingest"]) == 2


def test_partial_failure_exits_3(tmp_path, data_dir):
    partial = tmp_path / "partial.jsonl"
    lines = (data_dir / "replay_transcripts.jsonl").read_text().splitlines(keepends=True)
    partial.write_text("".join(lines[:6]))
    config = write_config(
        tmp_path,
        data_dir,
        cache_name="partialcache",
        models=[{"model_id": "replaymodel", "kind": "replay", "transcript_path": str(partial)}],
    )
    assert main(["--config", str(config), "run"]) == 3


def test_seed_and_cache_dir_overrides(tmp_path, data_dir):
    config = write_config(tmp_path, data_dir)
    override_cache = tmp_path / "override"
    assert main(["--config", str(config), "--seed", "123", "--cache-dir", str(override_cache), "ingest"]) == 0
    assert json.loads((override_cache / "run_meta.json").read_text())["seed"] == 123


def test_factual_pipeline_via_cli(tmp_path, data_dir):
    # FMA genre task with a replay model that answers the truth verbatim.
    from muqeval.corpus import load_fma_small

    items, _ = load_fma_small(data_dir / "fma_metadata.csv", data_dir / "fma_hierarchy.csv")
    transcripts = []
    for item in items:
        label = next(iter(item.truth_labels))
        for condition in ("correct", "random"):
            transcripts.append(
                {
                    "item_id": item.item_id,
                    "condition": condition,
                    "model_id": "oraclemodel",
                    "chunks": [{"index": 0, "text": f"This is clearly a {label} track."}],
                }
            )
    fixture = tmp_path / "fma_replay.jsonl"
    fixture.write_text("".join(json.dumps(t) + "\n" for t in transcripts))

    config = write_config(
        tmp_path,
        data_dir,
        cache_name="fmacache",
        datasets={
            "fma_small": {
                "metadata": str(data_dir / "fma_metadata.csv"),
                "hierarchy": str(data_dir / "fma_hierarchy.csv"),
            }
        },
        models=[{"model_id": "oraclemodel", "kind": "replay", "transcript_path": str(fixture)}],
        tasks=["genre"],
    )
    assert main(["--config", str(config), "run"]) == 0
    assert main(["--config", str(config), "extract"]) == 0
    assert main(["--config", str(config), "score"]) == 0
    assert main(["--config", str(config), "report"]) == 0
    cache = tmp_path / "fmacache"
    report = (cache / "report.csv").read_text()
    assert "Precision,Recall,F1-Score" in report.splitlines()[0]
    for line in report.splitlines()[1:]:
        assert line.endswith("1.0000,1.0000,1.0000")
    assert (cache / "extractions_genre.jsonl").exists()
