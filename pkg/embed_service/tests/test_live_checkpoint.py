"""Ordering check with the real CLAP text tower.

Requires the checkpoint to be downloadable (or already in the local cache);
skips cleanly otherwise so the suite stays green in offline environments.
Run with EMBED_SERVICE_CLAP_CHECKPOINT set to pick a specific artifact.
"""

import numpy as np
import pytest

pytest.importorskip("torch")
pytest.importorskip("transformers")

from embed_service.backends import TransformersBackend  # noqa: E402
from embed_service.config import Settings  # noqa: E402

REFERENCE = (
    "From the audio, it can be inferred that the track is a blend of post-rock and "
    "electronic experimental sounds. The track features a variety of instrumentation, "
    "including guitar, synthesizers, and samples. The overall sound is raw and "
    "experimental, with a strong emphasis on atmosphere and mood."
)
PARAPHRASE = (
    "Based on the audio, the track appears to combine elements of post-rock and "
    "electronic experimental music. It includes diverse instrumentation such as "
    "guitar, synthesizers, and samples. The sound is unpolished and exploratory, "
    "focusing heavily on creating a particular atmosphere and mood."
)
ADVERSARIAL = (
    "From the audio, it can be inferred that the track is purely classical with "
    "orchestral arrangements. The track features traditional instrumentation, "
    "including violin, cello, and piano. The overall sound is polished and "
    "structured, with a strong emphasis on melody and harmony."
)


@pytest.fixture(scope="module")
def backend():
    instance = TransformersBackend(Settings.from_env())
    try:
        instance.load()
    except Exception as exc:  # checkpoint not available locally, no hub access
        pytest.skip(f"live checkpoint unavailable: {exc}")
    return instance


def test_live_vectors_unit_norm(backend):
    vectors = backend.embed("clap-text", [REFERENCE])
    assert abs(np.linalg.norm(vectors[0]) - 1.0) < 1e-4


def test_paraphrase_closer_than_adversarial(backend):
    ref, para, adv = backend.embed("clap-text", [REFERENCE, PARAPHRASE, ADVERSARIAL])
    sim_para = float(np.dot(ref, para))
    sim_adv = float(np.dot(ref, adv))
    assert sim_para > sim_adv


def test_live_token_counts_match_tokenizer(backend):
    text = "a quiet piano piece"
    tokens, vectors = backend.token_embed("bert-token", [text])[0]
    expected = backend._bert_tokenizer.tokenize(text)
    assert tokens == expected
    assert vectors.shape[0] == len(tokens)
