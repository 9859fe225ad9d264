"""FastAPI application exposing the embedding wire protocol.

Endpoints:
    POST /v1/embed        pooled, L2-normalized vectors
    POST /v1/token_embed  per-token vectors plus the tokenizer's token strings
    GET  /v1/health       readiness and loaded checkpoint inventory

Error contract: 400 for an unknown model_id or an empty text list, 413 when
the batch cap or per-text length limit is exceeded, 503 while the backend
is still loading.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .backends import TransformersBackend, build_backend
from .config import SCHEMA_VERSION, Settings


class EmbedRequest(BaseModel):
    model_id: str
    texts: list[str] = []


def create_app(settings: Settings | None = None, backend=None) -> FastAPI:
    settings = settings or Settings.from_env()
    backend = backend or build_backend(settings)
    app = FastAPI(title="embed-service", version="0.1.0")
    app.state.backend = backend
    app.state.settings = settings

    if isinstance(backend, TransformersBackend):
        threading.Thread(target=backend.load, daemon=True).start()

    def validate(request: EmbedRequest) -> None:
        if not backend.ready:
            raise HTTPException(status_code=503, detail="model loading")
        if request.model_id not in backend.models:
            raise HTTPException(status_code=400, detail=f"unknown model_id {request.model_id!r}")
        if not request.texts:
            raise HTTPException(status_code=400, detail="texts must be non-empty")
        if len(request.texts) > settings.batch_cap:
            raise HTTPException(status_code=413, detail=f"batch cap is {settings.batch_cap}")
        for text in request.texts:
            if len(text) > settings.max_text_len:
                raise HTTPException(status_code=413, detail=f"text exceeds {settings.max_text_len} chars")

    @app.post("/v1/embed")
    def embed(request: EmbedRequest) -> dict:
        validate(request)
        vectors = backend.embed(request.model_id, request.texts)
        return {
            "schema_version": SCHEMA_VERSION,
            "vectors": vectors.tolist(),
            "dim": int(vectors.shape[1]),
            "normalized": True,
            "checkpoint_id": backend.checkpoints[request.model_id],
        }

    @app.post("/v1/token_embed")
    def token_embed(request: EmbedRequest) -> dict:
        validate(request)
        results = backend.token_embed(request.model_id, request.texts)
        return {
            "schema_version": SCHEMA_VERSION,
            "tokens": [tokens for tokens, _ in results],
            "vectors": [vectors.tolist() for _, vectors in results],
            "dim": int(results[0][1].shape[1]),
            "normalized": False,
            "checkpoint_id": backend.checkpoints[request.model_id],
        }

    @app.get("/v1/health")
    def health() -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "status": "ok" if backend.ready else "loading",
            "models": list(backend.models),
            "checkpoints": dict(backend.checkpoints),
        }

    return app
