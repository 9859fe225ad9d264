"""Embedding backends.

``HashBackend`` is deterministic and dependency-free: SHA-256 of the text
seeds a unit vector. It serves contract tests and offline smoke runs.

``TransformersBackend`` loads the real checkpoints (CLAP text tower for
pooled vectors, a BERT-family encoder for per-token vectors) on CPU in
float32 with eval-mode determinism.
"""

from __future__ import annotations

import hashlib
import threading

import numpy as np

from .config import BERT_TOKEN_MODEL, CLAP_TEXT_MODEL, Settings


class HashBackend:
    """Deterministic pseudo-embeddings; pooled vectors are unit-norm."""

    pooled_dim = 512
    token_dim = 64

    def __init__(self, settings: Settings | None = None):
        self.checkpoints = {CLAP_TEXT_MODEL: "hash-v1", BERT_TOKEN_MODEL: "hash-v1"}
        self.ready = True

    @property
    def models(self):
        return tuple(self.checkpoints)

    def _vector(self, namespace: str, text: str, dim: int) -> np.ndarray:
        digest = hashlib.sha256(f"{namespace}\x00{text}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        values = rng.standard_normal(dim)
        return values / np.linalg.norm(values)

    def embed(self, model_id: str, texts: list[str]) -> np.ndarray:
        return np.stack([self._vector(model_id, t, self.pooled_dim) for t in texts])

    def token_embed(self, model_id: str, texts: list[str]) -> list[tuple[list[str], np.ndarray]]:
        out = []
        for text in texts:
            tokens = text.split() or [text]
            vectors = np.stack(
                [self._vector(f"{model_id}:token", tok, self.token_dim) for tok in tokens]
            )
            out.append((tokens, vectors))
        return out


class TransformersBackend:
    """Real checkpoints on CPU, float32, eval mode.

    Loading happens in ``load()`` (typically on a background thread); the
    service reports 503 until ``ready`` flips.
    """

    def __init__(self, settings: Settings):
        self.settings = settings
        self.checkpoints = {
            CLAP_TEXT_MODEL: settings.clap_checkpoint,
            BERT_TOKEN_MODEL: settings.bert_checkpoint,
        }
        self.ready = False
        self._lock = threading.Lock()
        self._clap = None
        self._clap_tokenizer = None
        self._bert = None
        self._bert_tokenizer = None

    @property
    def models(self):
        return tuple(self.checkpoints)

    def load(self) -> None:
        import torch
        from transformers import AutoModel, AutoTokenizer, ClapTextModelWithProjection

        torch.set_grad_enabled(False)
        clap = ClapTextModelWithProjection.from_pretrained(self.settings.clap_checkpoint)
        clap.eval()
        clap_tokenizer = AutoTokenizer.from_pretrained(self.settings.clap_checkpoint)
        bert = AutoModel.from_pretrained(self.settings.bert_checkpoint)
        bert.eval()
        bert_tokenizer = AutoTokenizer.from_pretrained(self.settings.bert_checkpoint)
        with self._lock:
            self._clap = clap
            self._clap_tokenizer = clap_tokenizer
            self._bert = bert
            self._bert_tokenizer = bert_tokenizer
            self.ready = True

    def embed(self, model_id: str, texts: list[str]) -> np.ndarray:
        import torch

        inputs = self._clap_tokenizer(texts, padding=True, truncation=True, return_tensors="pt")
        with torch.no_grad():
            output = self._clap(**inputs)
        vectors = output.text_embeds.to(torch.float32).cpu().numpy()
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        return vectors / norms

    def token_embed(self, model_id: str, texts: list[str]) -> list[tuple[list[str], np.ndarray]]:
        import torch

        out = []
        for text in texts:
            inputs = self._bert_tokenizer(text, truncation=True, return_tensors="pt")
            with torch.no_grad():
                hidden = self._bert(**inputs).last_hidden_state[0]
            ids = inputs["input_ids"][0].tolist()
            tokens = self._bert_tokenizer.convert_ids_to_tokens(ids)
            special = set(self._bert_tokenizer.all_special_tokens)
            keep = [i for i, tok in enumerate(tokens) if tok not in special]
            if not keep:  # text was nothing but special tokens
                keep = list(range(len(tokens)))
            out.append(
                (
                    [tokens[i] for i in keep],
                    hidden[keep].to(torch.float32).cpu().numpy(),
                )
            )
        return out


def build_backend(settings: Settings):
    if settings.backend == "hash":
        return HashBackend(settings)
    if settings.backend == "transformers":
        return TransformersBackend(settings)
    raise ValueError(f"unknown backend {settings.backend!r}")
