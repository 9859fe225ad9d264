"""Contract test against the evaluation harness's HTTP provider.

Starts the service on a loopback port (hash backend) and drives it through
``muqeval.embedding_metrics.HttpEmbeddingProvider``, i.e. the exact client
the harness uses in production.
"""

import socket
import threading
import time

import numpy as np
import pytest

muqeval = pytest.importorskip("muqeval", reason="primary harness not installed")
uvicorn = pytest.importorskip("uvicorn")

from muqeval.embedding_metrics import HttpEmbeddingProvider, bertscore_f1, claptext  # noqa: E402

from embed_service.app import create_app  # noqa: E402
from embed_service.config import Settings  # noqa: E402


@pytest.fixture(scope="module")
def base_url():
    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    config = uvicorn.Config(
        create_app(Settings(backend="hash")), host="127.0.0.1", port=port, log_level="error"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    import requests

    url = f"http://127.0.0.1:{port}"
    while time.time() < deadline:
        try:
            if requests.get(f"{url}/v1/health", timeout=1).json()["status"] == "ok":
                break
        except Exception:
            time.sleep(0.05)
    else:
        raise RuntimeError("service did not come up")
    yield url
    server.should_exit = True
    thread.join(timeout=5)


def test_claptext_identity_through_wire(base_url):
    provider = HttpEmbeddingProvider(base_url)
    assert claptext("same text", "same text", provider) == pytest.approx(1.0, abs=1e-6)


def test_claptext_symmetry_and_range(base_url):
    provider = HttpEmbeddingProvider(base_url)
    ab = claptext("one description", "a different description", provider)
    ba = claptext("a different description", "one description", provider)
    assert ab == pytest.approx(ba, abs=1e-9)
    assert -1.0 <= ab <= 1.0


def test_pooled_vectors_unit_norm_through_client(base_url):
    provider = HttpEmbeddingProvider(base_url)
    vectors = provider.embed("clap-text", ["first text", "second text"])
    for vec in vectors:
        assert vec.normalized
        assert abs(np.linalg.norm(vec.values) - 1.0) < 1e-4


def test_batch_equals_singletons_through_client(base_url):
    provider = HttpEmbeddingProvider(base_url)
    batch = provider.embed("clap-text", ["alpha", "beta", "gamma"])
    singles = [provider.embed("clap-text", [t])[0] for t in ("alpha", "beta", "gamma")]
    for got, want in zip(batch, singles):
        assert np.array_equal(got.values, want.values)


def test_bertscore_through_wire(base_url):
    provider = HttpEmbeddingProvider(base_url)
    identical = bertscore_f1("a b c", "a b c", provider)
    assert identical == pytest.approx(1.0, abs=1e-6)
    different = bertscore_f1("a b c", "x y z", provider)
    assert 0.0 <= different <= 1.0
