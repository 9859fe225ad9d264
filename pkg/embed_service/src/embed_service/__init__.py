"""HTTP sidecar serving pooled music-text embeddings and token-level BERT embeddings."""

from .app import create_app
from .backends import HashBackend, TransformersBackend, build_backend
from .config import Settings

__version__ = "0.1.0"

__all__ = ["create_app", "HashBackend", "TransformersBackend", "build_backend", "Settings"]
