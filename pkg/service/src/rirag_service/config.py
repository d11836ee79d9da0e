"""Service configuration: which checkpoint serves which scoring role."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

ROLES = ("matrix", "coverage", "validation", "obligation")
NLI_ROLES = ("matrix", "coverage", "validation")

DEFAULT_MODELS = {
    "matrix": "cross-encoder/nli-deberta-v3-xsmall",
    "validation": "cross-encoder/nli-deberta-v3-xsmall",
    "coverage": "microsoft/deberta-large-mnli",
    "obligation": "legalbert-obligation-classifier",
}


@dataclass(frozen=True)
class ModelBinding:
    role: str
    model: str
    max_batch: int = 64
    device: str = "cpu"

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if not self.model:
            raise ValueError(f"role {self.role!r} has no model identifier")
        if self.max_batch < 1:
            raise ValueError(f"max_batch must be positive, got {self.max_batch}")


@dataclass(frozen=True)
class ServiceConfig:
    """Every role must be bound exactly once; this is checked at startup."""
    backend: str = "stub"  # stub | transformers
    bindings: tuple[ModelBinding, ...] = field(
        default_factory=lambda: tuple(
            ModelBinding(role, model) for role, model in DEFAULT_MODELS.items()))
    timeout_s: float = 60.0

    def __post_init__(self):
        if self.backend not in ("stub", "transformers"):
            raise ValueError(f"unknown backend {self.backend!r}")
        seen = [b.role for b in self.bindings]
        if sorted(seen) != sorted(ROLES):
            raise ValueError(
                f"each role of {ROLES} must be bound exactly once, got {seen}")

    def binding(self, role: str) -> ModelBinding:
        for b in self.bindings:
            if b.role == role:
                return b
        raise KeyError(role)

    @classmethod
    def from_file(cls, path: str) -> "ServiceConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        bindings = tuple(
            ModelBinding(b["role"], b["model"],
                         b.get("max_batch", 64), b.get("device", "cpu"))
            for b in raw.get("bindings", ()))
        kwargs = {}
        if bindings:
            kwargs["bindings"] = bindings
        if "backend" in raw:
            kwargs["backend"] = raw["backend"]
        if "timeout_s" in raw:
            kwargs["timeout_s"] = raw["timeout_s"]
        return cls(**kwargs)
