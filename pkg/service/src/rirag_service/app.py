"""HTTP surface: POST /v1/nli, POST /v1/obligation, GET /healthz.

The wire format is the gateway protocol the retrieval toolkit's remote
backend speaks: NLI results are dicts keyed by label name, and the
response also declares the canonical label order explicitly because
different checkpoints order their output heads differently.
"""
from __future__ import annotations

import logging
import threading
from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import backends
from .config import NLI_ROLES, ServiceConfig

logger = logging.getLogger(__name__)

LABELS = ["entailment", "contradiction", "neutral"]


class NliPair(BaseModel):
    premise: str = Field(min_length=1)
    hypothesis: str = Field(min_length=1)


class NliRequest(BaseModel):
    role: str
    model: str | None = None
    pairs: list[NliPair]


class ObligationRequest(BaseModel):
    sentences: list[str]


class ModelPool:
    """One model per role, loaded eagerly at startup.

    A role whose checkpoint fails to load stays registered but not
    ready; requests against it get 503 and /healthz reports it false.
    Inference per role is serialized so concurrent requests never
    interleave inside one model.
    """

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.models = {}
        self.errors = {}
        self.locks = {b.role: threading.Lock() for b in config.bindings}

    def load_all(self):
        for binding in self.config.bindings:
            try:
                self.models[binding.role] = backends.build_model(
                    self.config.backend, binding.model, binding.device)
            except Exception as exc:  # noqa: BLE001 - report, don't crash
                logger.error("failed to load %s for role %s: %s",
                             binding.model, binding.role, exc)
                self.errors[binding.role] = str(exc)

    def readiness(self) -> dict[str, bool]:
        return {b.role: b.role in self.models
                for b in self.config.bindings}

    def get(self, role: str):
        if role not in self.models:
            raise HTTPException(
                status_code=503,
                detail=f"model for role {role!r} is not loaded: "
                       f"{self.errors.get(role, 'startup incomplete')}")
        return self.models[role], self.locks[role]


def create_app(config: ServiceConfig = ServiceConfig()) -> FastAPI:
    pool = ModelPool(config)

    @asynccontextmanager
    async def lifespan(_app):
        pool.load_all()
        yield

    app = FastAPI(title="rirag-service", version="1", lifespan=lifespan)
    app.state.pool = pool

    @app.get("/healthz")
    def healthz():
        roles = pool.readiness()
        return {"status": "ok" if all(roles.values()) else "degraded",
                "roles": roles}

    @app.post("/v1/nli")
    def nli(req: NliRequest):
        if req.role not in NLI_ROLES:
            raise HTTPException(status_code=422,
                                detail=f"unknown NLI role {req.role!r}")
        binding = config.binding(req.role)
        if len(req.pairs) > binding.max_batch:
            raise HTTPException(
                status_code=413,
                detail=f"batch of {len(req.pairs)} exceeds limit "
                       f"{binding.max_batch} for role {req.role!r}")
        model, lock = pool.get(req.role)
        if not req.pairs:
            return {"labels": LABELS, "role": req.role,
                    "model": binding.model, "results": []}
        with lock:
            triples = model.nli_batch(
                [(p.premise, p.hypothesis) for p in req.pairs])
        results = []
        for e, c, n in triples:
            if abs(e + c + n - 1.0) > 1e-6:
                raise HTTPException(
                    status_code=500,
                    detail=f"probabilities sum to {e + c + n}")
            results.append({"entailment": e, "contradiction": c,
                            "neutral": n})
        return {"labels": LABELS, "role": req.role, "model": binding.model,
                "results": results}

    @app.post("/v1/obligation")
    def obligation(req: ObligationRequest):
        for i, s in enumerate(req.sentences):
            if not s:
                raise HTTPException(status_code=422,
                                    detail=f"sentence {i} is empty")
        binding = config.binding("obligation")
        if len(req.sentences) > binding.max_batch:
            raise HTTPException(
                status_code=413,
                detail=f"batch of {len(req.sentences)} exceeds limit "
                       f"{binding.max_batch} for role 'obligation'")
        model, lock = pool.get("obligation")
        if not req.sentences:
            return {"model": binding.model, "results": []}
        with lock:
            labels = model.obligation_batch(req.sentences)
        return {"model": binding.model,
                "results": [{"is_obligation": hit, "confidence": conf}
                            for hit, conf in labels]}

    return app
