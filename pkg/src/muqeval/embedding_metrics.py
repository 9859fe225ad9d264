"""Embedding-based similarity: pooled-text cosine and greedy token-match F1.

Vectors come from a pluggable :class:`EmbeddingProvider`. Two providers
ship: an HTTP client speaking the embedding sidecar's wire protocol, and a
deterministic mock (seeded hash -> unit vector) so the whole metric suite
runs with no ML stack present. A caching wrapper keyed on
(model_id, SHA-256 of the text) makes reruns embed nothing.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .clients import SingleFlight, post_json
from .errors import DegenerateInputError, ShapeError
from .storage import JsonlWriter, read_jsonl

CLAP_TEXT_MODEL = "clap-text"
BERT_TOKEN_MODEL = "bert-token"

_NORM_TOLERANCE = 1e-5


@dataclass
class EmbeddingVector:
    values: np.ndarray
    model_id: str
    normalized: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.shape[0] == 0:
            raise ValueError("embedding must be a non-empty 1-D vector")
        if self.normalized:
            norm = float(np.linalg.norm(self.values))
            if abs(norm - 1.0) >= _NORM_TOLERANCE:
                raise ValueError(f"vector marked normalized but has norm {norm}")

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass
class TokenEmbeddings:
    tokens: list[str]
    vectors: list[EmbeddingVector]

    def __post_init__(self):
        if len(self.tokens) != len(self.vectors):
            raise ValueError("tokens and vectors must have equal length")
        if not self.tokens:
            raise ValueError("TokenEmbeddings needs at least one token")


class EmbeddingProvider(Protocol):
    def embed(self, model_id: str, texts: Sequence[str]) -> list[EmbeddingVector]: ...

    def token_embed(self, model_id: str, texts: Sequence[str]) -> list[TokenEmbeddings]: ...


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    if a.dim != b.dim:
        raise ShapeError(f"dimension mismatch: {a.dim} vs {b.dim}")
    norm_a = float(np.linalg.norm(a.values))
    norm_b = float(np.linalg.norm(b.values))
    if norm_a == 0.0 or norm_b == 0.0:
        raise DegenerateInputError("cosine of a zero vector is undefined")
    value = float(np.dot(a.values, b.values) / (norm_a * norm_b))
    # float error can push an identity cosine one ulp out of [-1, 1]
    return max(-1.0, min(value, 1.0))


def claptext(candidate: str, reference: str, provider: EmbeddingProvider, model_id: str = CLAP_TEXT_MODEL) -> float:
    """Cosine similarity between the pooled embeddings of two texts."""
    if not candidate or not reference:
        raise ValueError("claptext requires non-empty candidate and reference")
    cand_vec, ref_vec = provider.embed(model_id, [candidate, reference])
    return cosine(cand_vec, ref_vec)


def _rowwise_unit(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return matrix / norms


def bertscore_f1(candidate: str, reference: str, provider: EmbeddingProvider, model_id: str = BERT_TOKEN_MODEL) -> float:
    """Greedy-match token F1; no idf weighting, no baseline rescaling."""
    if not candidate or not reference:
        raise ValueError("bertscore requires non-empty candidate and reference")
    cand_emb, ref_emb = provider.token_embed(model_id, [candidate, reference])
    cand = _rowwise_unit(np.stack([v.values for v in cand_emb.vectors]))
    ref = _rowwise_unit(np.stack([v.values for v in ref_emb.vectors]))
    sims = cand @ ref.T
    precision = max(float(sims.max(axis=1).mean()), 0.0)
    recall = max(float(sims.max(axis=0).mean()), 0.0)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


# --- Providers -----------------------------------------------------------------


class MockEmbeddingProvider:
    """Deterministic offline provider: SHA-256 of the text seeds a unit vector.

    Identical texts (and identical tokens across texts) always map to the
    same vector, so metric identities hold exactly without any model.
    """

    def __init__(self, dim: int = 64):
        self.dim = dim

    def _vector(self, model_id: str, text: str) -> EmbeddingVector:
        digest = hashlib.sha256(f"{model_id}\x00{text}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        values = rng.standard_normal(self.dim)
        values /= np.linalg.norm(values)
        return EmbeddingVector(values=values, model_id=model_id, normalized=True)

    def embed(self, model_id: str, texts: Sequence[str]) -> list[EmbeddingVector]:
        return [self._vector(model_id, text) for text in texts]

    def token_embed(self, model_id: str, texts: Sequence[str]) -> list[TokenEmbeddings]:
        out = []
        for text in texts:
            tokens = text.split() or [text]
            out.append(
                TokenEmbeddings(
                    tokens=tokens,
                    vectors=[self._vector(model_id, f"token:{tok}") for tok in tokens],
                )
            )
        return out


class HttpEmbeddingProvider:
    """Client for the embedding sidecar (POST /v1/embed and /v1/token_embed)."""

    def __init__(self, base_url: str, timeout: float = 60.0, retries: int = 2):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries

    def embed(self, model_id: str, texts: Sequence[str]) -> list[EmbeddingVector]:
        body = post_json(
            f"{self.base_url}/v1/embed",
            {"model_id": model_id, "texts": list(texts)},
            timeout=self.timeout,
            retries=self.retries,
        )
        normalized = bool(body.get("normalized", False))
        return [
            EmbeddingVector(values=np.asarray(vec, dtype=np.float64), model_id=model_id, normalized=normalized)
            for vec in body["vectors"]
        ]

    def token_embed(self, model_id: str, texts: Sequence[str]) -> list[TokenEmbeddings]:
        body = post_json(
            f"{self.base_url}/v1/token_embed",
            {"model_id": model_id, "texts": list(texts)},
            timeout=self.timeout,
            retries=self.retries,
        )
        out = []
        for tokens, vectors in zip(body["tokens"], body["vectors"]):
            out.append(
                TokenEmbeddings(
                    tokens=list(tokens),
                    vectors=[
                        EmbeddingVector(values=np.asarray(vec, dtype=np.float64), model_id=model_id)
                        for vec in vectors
                    ],
                )
            )
        return out


def _text_key(model_id: str, text: str) -> str:
    return f"{model_id}:{hashlib.sha256(text.encode('utf-8')).hexdigest()}"


class CachedEmbeddingProvider:
    """Wrap any provider with a (model_id, text-hash) cache.

    Cache hits never touch the inner provider; misses within a batch are
    fetched in one inner call; duplicate in-flight misses are coalesced.
    Optionally persists entries as JSON-lines beside the transcript stores.
    """

    def __init__(self, inner: EmbeddingProvider, path: str | Path | None = None):
        self.inner = inner
        self._pooled: dict[str, EmbeddingVector] = {}
        self._tokens: dict[str, TokenEmbeddings] = {}
        self._singleflight = SingleFlight()
        self._writer = None
        if path is not None:
            path = Path(path)
            if path.exists():
                for _, record in read_jsonl(path):
                    self._restore(record)
            self._writer = JsonlWriter(path)

    def _restore(self, record: dict) -> None:
        model_id = record["model_id"]
        if record["kind"] == "pooled":
            self._pooled[record["key"]] = EmbeddingVector(
                values=np.asarray(record["values"], dtype=np.float64),
                model_id=model_id,
                normalized=record.get("normalized", False),
            )
        else:
            self._tokens[record["key"]] = TokenEmbeddings(
                tokens=list(record["tokens"]),
                vectors=[
                    EmbeddingVector(values=np.asarray(vec, dtype=np.float64), model_id=model_id)
                    for vec in record["values"]
                ],
            )

    def _persist_pooled(self, key: str, vec: EmbeddingVector) -> None:
        if self._writer is not None:
            self._writer.append(
                {
                    "kind": "pooled",
                    "key": key,
                    "model_id": vec.model_id,
                    "normalized": vec.normalized,
                    "values": vec.values.tolist(),
                }
            )

    def _persist_tokens(self, key: str, emb: TokenEmbeddings) -> None:
        if self._writer is not None:
            self._writer.append(
                {
                    "kind": "token",
                    "key": key,
                    "model_id": emb.vectors[0].model_id,
                    "tokens": emb.tokens,
                    "values": [v.values.tolist() for v in emb.vectors],
                }
            )

    def embed(self, model_id: str, texts: Sequence[str]) -> list[EmbeddingVector]:
        def fetch_one(text: str) -> EmbeddingVector:
            key = _text_key(model_id, text)
            if key in self._pooled:
                return self._pooled[key]

            def _miss():
                if key in self._pooled:
                    return self._pooled[key]
                vec = self.inner.embed(model_id, [text])[0]
                self._pooled[key] = vec
                self._persist_pooled(key, vec)
                return vec

            return self._singleflight.do(("pooled", key), _miss)

        # Serve the whole batch from cache when possible, else fetch misses
        # in one inner call to keep the provider's batching contract useful.
        keys = [_text_key(model_id, t) for t in texts]
        missing = [t for t, k in zip(texts, keys) if k not in self._pooled]
        if missing and len(missing) > 1:
            for text, vec in zip(missing, self.inner.embed(model_id, missing)):
                key = _text_key(model_id, text)
                if key not in self._pooled:
                    self._pooled[key] = vec
                    self._persist_pooled(key, vec)
            return [self._pooled[k] for k in keys]
        return [fetch_one(t) for t in texts]

    def token_embed(self, model_id: str, texts: Sequence[str]) -> list[TokenEmbeddings]:
        out = []
        for text in texts:
            key = _text_key(model_id, text)
            if key in self._tokens:
                out.append(self._tokens[key])
                continue

            def _miss(key=key, text=text):
                if key in self._tokens:
                    return self._tokens[key]
                emb = self.inner.token_embed(model_id, [text])[0]
                self._tokens[key] = emb
                self._persist_tokens(key, emb)
                return emb

            out.append(self._singleflight.do(("token", key), _miss))
        return out
