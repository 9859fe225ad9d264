"""Environment-driven settings.

Every knob is an environment variable so deployments stay declarative:

* ``EMBED_SERVICE_BACKEND``: ``transformers`` (default) or ``hash`` (the
  deterministic offline backend used by contract tests).
* ``EMBED_SERVICE_CLAP_CHECKPOINT``: text tower for pooled embeddings.
* ``EMBED_SERVICE_BERT_CHECKPOINT``: token-embedding model.
* ``EMBED_SERVICE_BATCH_CAP``: maximum texts per request (413 beyond).
* ``EMBED_SERVICE_MAX_TEXT_LEN``: maximum characters per text (413 beyond).
* ``EMBED_SERVICE_PORT``: bind port for ``python -m embed_service``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

DEFAULT_CLAP_CHECKPOINT = "laion/larger_clap_music"
DEFAULT_BERT_CHECKPOINT = "bert-base-uncased"

SCHEMA_VERSION = 1

CLAP_TEXT_MODEL = "clap-text"
BERT_TOKEN_MODEL = "bert-token"


@dataclass
class Settings:
    backend: str = "transformers"
    clap_checkpoint: str = DEFAULT_CLAP_CHECKPOINT
    bert_checkpoint: str = DEFAULT_BERT_CHECKPOINT
    batch_cap: int = 64
    max_text_len: int = 8192
    port: int = 8900

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            backend=os.environ.get("EMBED_SERVICE_BACKEND", "transformers"),
            clap_checkpoint=os.environ.get("EMBED_SERVICE_CLAP_CHECKPOINT", DEFAULT_CLAP_CHECKPOINT),
            bert_checkpoint=os.environ.get("EMBED_SERVICE_BERT_CHECKPOINT", DEFAULT_BERT_CHECKPOINT),
            batch_cap=int(os.environ.get("EMBED_SERVICE_BATCH_CAP", "64")),
            max_text_len=int(os.environ.get("EMBED_SERVICE_MAX_TEXT_LEN", "8192")),
            port=int(os.environ.get("EMBED_SERVICE_PORT", "8900")),
        )
