"""Gateway to premise-hypothesis NLI scoring and obligation classification.

Three interchangeable backends: a remote HTTP inference service, a
deterministic fixture store for offline tests, and a heuristic fallback.
Results are memoized per (role, premise, hypothesis) within a gateway
instance, so repeated sentence pairs cost one backend call.
"""
from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import requests

from .errors import FixtureMissError, InputValidationError, TransportError
from .retrieval import tokenize

logger = logging.getLogger(__name__)

ROLES = ("matrix", "coverage", "validation")

DEFAULT_MODELS = {
    "matrix": "cross-encoder/nli-deberta-v3-xsmall",
    "validation": "cross-encoder/nli-deberta-v3-xsmall",
    "coverage": "microsoft/deberta-large-mnli",
    "obligation": "legalbert-obligation-classifier",
}

# Deontic markers; matched outside quoted spans only.
DEONTIC_MARKERS = (
    "must not", "may not", "must", "shall",
    "is required to", "are required to", "is obliged to",
)

_QUOTE_RE = re.compile(r'"[^"]*"|“[^”]*”')

_MARKER_RE = re.compile(
    r"\b(" + "|".join(re.escape(m) for m in DEONTIC_MARKERS) + r")\b",
    re.IGNORECASE)

_SIMPLEX_TOL = 1e-3


@dataclass(frozen=True)
class NliProbs:
    entailment: float
    contradiction: float
    neutral: float

    def __post_init__(self):
        for name, v in (("entailment", self.entailment),
                        ("contradiction", self.contradiction),
                        ("neutral", self.neutral)):
            if not 0.0 <= v <= 1.0:
                raise InputValidationError(f"{name} probability {v} outside [0, 1]")
        total = self.entailment + self.contradiction + self.neutral
        if abs(total - 1.0) > _SIMPLEX_TOL:
            raise InputValidationError(
                f"NLI probabilities sum to {total}, expected 1 within "
                f"{_SIMPLEX_TOL}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.entailment, self.contradiction, self.neutral)


@dataclass(frozen=True)
class ObligationLabel:
    is_obligation: bool
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise InputValidationError(
                f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "heuristic"  # remote | fixture | heuristic
    endpoint: Optional[str] = None
    fixture_path: Optional[str] = None
    models: dict = field(default_factory=lambda: dict(DEFAULT_MODELS))
    batch_size: int = 64
    max_in_flight: int = 4
    retries: int = 3
    backoff: float = 0.5

    def __post_init__(self):
        if self.kind not in ("remote", "fixture", "heuristic"):
            raise InputValidationError(f"unknown backend kind {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise InputValidationError("remote backend requires an endpoint")
        if self.kind == "fixture" and not self.fixture_path:
            raise InputValidationError("fixture backend requires a fixture path")


def pair_hash(role: str, premise: str, hypothesis: str) -> str:
    payload = f"{role}\x1f{premise}\x1f{hypothesis}".encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def sentence_hash(sentence: str) -> str:
    return hashlib.sha256(f"obligation\x1f{sentence}".encode("utf-8")).hexdigest()


def heuristic_obligation(sentence: str) -> ObligationLabel:
    """Deontic-marker rule; markers inside double quotes do not count."""
    unquoted = _QUOTE_RE.sub(" ", sentence)
    return ObligationLabel(bool(_MARKER_RE.search(unquoted)), 0.9)


_NEGATIONS = frozenset({"not", "no", "never", "neither", "nor"})


def heuristic_nli(premise: str, hypothesis: str) -> NliProbs:
    """Crude lexical-overlap NLI stand-in for degraded operation and tests."""
    if premise.strip() == hypothesis.strip():
        return NliProbs(0.95, 0.02, 0.03)
    pt, ht = set(tokenize(premise)), set(tokenize(hypothesis))
    cover = len(pt & ht) / len(ht) if ht else 0.0
    neg_mismatch = bool(pt & _NEGATIONS) != bool(ht & _NEGATIONS)
    e = 0.85 * cover
    c = 0.7 * cover if neg_mismatch else 0.02
    n = max(0.02, 1.0 - e - c)
    total = e + c + n
    return NliProbs(e / total, c / total, n / total)


class HeuristicBackend:
    name = "heuristic"

    def score_nli(self, pairs, role):
        return [heuristic_nli(p, h) for p, h in pairs]

    def classify_obligations(self, sentences):
        return [heuristic_obligation(s) for s in sentences]

    def ready(self) -> bool:
        return True


class FixtureBackend:
    """Deterministic store keyed by content hashes of the exact pairs.

    File schema:
      {"nli": {pair_hash: [e, c, n]},
       "obligation": {sentence_hash: [is_obligation, confidence]},
       "manifest": [{"role", "premise", "hypothesis"} | {"sentence"}],
       "heuristic_obligations": bool}
    """
    name = "fixture"

    def __init__(self, path):
        self.path = path
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        self.nli = data.get("nli", {})
        self.obligation = data.get("obligation", {})
        self.heuristic_obligations = bool(data.get("heuristic_obligations", False))

    def score_nli(self, pairs, role):
        out = []
        for i, (premise, hypothesis) in enumerate(pairs):
            h = pair_hash(role, premise, hypothesis)
            if h not in self.nli:
                raise FixtureMissError(
                    f"fixture {self.path} has no entry for pair {i} "
                    f"(role={role}, hash={h})", pair_index=i, pair_hash=h)
            e, c, n = self.nli[h]
            out.append(NliProbs(e, c, n))
        return out

    def classify_obligations(self, sentences):
        out = []
        for i, s in enumerate(sentences):
            h = sentence_hash(s)
            if h in self.obligation:
                is_obl, conf = self.obligation[h]
                out.append(ObligationLabel(bool(is_obl), conf))
            elif self.heuristic_obligations:
                out.append(heuristic_obligation(s))
            else:
                raise FixtureMissError(
                    f"fixture {self.path} has no obligation entry for "
                    f"sentence {i} (hash={h})", pair_index=i, pair_hash=h)
        return out

    def ready(self) -> bool:
        return True


def write_fixture(path, nli_entries=(), obligation_entries=(),
                  heuristic_obligations=False) -> None:
    """Build a fixture file from plain-text entries.

    nli_entries: iterable of (role, premise, hypothesis, (e, c, n)).
    obligation_entries: iterable of (sentence, is_obligation, confidence).
    """
    nli = {}
    manifest = []
    for role, premise, hypothesis, probs in nli_entries:
        nli[pair_hash(role, premise, hypothesis)] = list(probs)
        manifest.append({"role": role, "premise": premise,
                         "hypothesis": hypothesis})
    obligation = {}
    for sentence, is_obl, conf in obligation_entries:
        obligation[sentence_hash(sentence)] = [bool(is_obl), conf]
        manifest.append({"sentence": sentence})
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"nli": nli, "obligation": obligation, "manifest": manifest,
                   "heuristic_obligations": heuristic_obligations},
                  fh, indent=2)


class RemoteBackend:
    """HTTP client for the inference-service protocol (POST /v1/nli,
    POST /v1/obligation, GET /healthz)."""
    name = "remote"

    def __init__(self, config: BackendConfig):
        self.config = config
        self.base = config.endpoint.rstrip("/")
        self.session = requests.Session()

    def _post(self, route, payload, batch_range):
        last_exc = None
        for attempt in range(self.config.retries):
            try:
                resp = self.session.post(self.base + route, json=payload,
                                         timeout=120)
                resp.raise_for_status()
                return resp.json()
            except (requests.RequestException, ValueError) as exc:
                last_exc = exc
                if attempt + 1 < self.config.retries:
                    time.sleep(self.config.backoff * (2 ** attempt))
        raise TransportError(
            f"remote NLI backend unreachable after {self.config.retries} "
            f"attempts for batch {batch_range}: {last_exc}",
            batch_range=batch_range)

    def score_nli(self, pairs, role):
        results: list[Optional[NliProbs]] = [None] * len(pairs)
        batches = [
            (start, pairs[start:start + self.config.batch_size])
            for start in range(0, len(pairs), self.config.batch_size)
        ]

        def run(batch):
            start, chunk = batch
            batch_range = (start, start + len(chunk))
            payload = {
                "role": role,
                "model": self.config.models.get(role),
                "pairs": [{"premise": p, "hypothesis": h} for p, h in chunk],
            }
            data = self._post("/v1/nli", payload, batch_range)
            got = data.get("results", [])
            if len(got) != len(chunk):
                raise TransportError(
                    f"remote returned {len(got)} results for a batch of "
                    f"{len(chunk)}", batch_range=batch_range)
            return start, got

        with ThreadPoolExecutor(max_workers=self.config.max_in_flight) as pool:
            for start, got in pool.map(run, batches):
                for j, r in enumerate(got):
                    try:
                        results[start + j] = NliProbs(
                            r["entailment"], r["contradiction"], r["neutral"])
                    except (KeyError, InputValidationError) as exc:
                        raise TransportError(
                            f"invalid backend NLI response at index "
                            f"{start + j}: {exc}",
                            batch_range=(start, start + len(got))) from exc
        return results

    def classify_obligations(self, sentences):
        out: list[ObligationLabel] = []
        for start in range(0, len(sentences), self.config.batch_size):
            chunk = sentences[start:start + self.config.batch_size]
            data = self._post("/v1/obligation", {"sentences": list(chunk)},
                              (start, start + len(chunk)))
            for j, r in enumerate(data.get("results", [])):
                try:
                    out.append(ObligationLabel(r["is_obligation"],
                                               r["confidence"]))
                except (KeyError, InputValidationError) as exc:
                    raise TransportError(
                        f"invalid backend obligation response at index "
                        f"{start + j}: {exc}") from exc
        return out

    def ready(self) -> bool:
        try:
            resp = self.session.get(self.base + "/healthz", timeout=10)
            if resp.status_code != 200:
                return False
            body = resp.json()
            roles = body.get("roles")
            if isinstance(roles, dict):
                return all(roles.values())
            return True
        except (requests.RequestException, ValueError):
            return False


class NliGateway:
    """Memoizing front door for NLI scoring and obligation classification."""

    def __init__(self, config: BackendConfig = BackendConfig()):
        self.config = config
        if config.kind == "remote":
            self.backend = RemoteBackend(config)
        elif config.kind == "fixture":
            self.backend = FixtureBackend(config.fixture_path)
        else:
            self.backend = HeuristicBackend()
        self._nli_cache: dict[tuple[str, str, str], NliProbs] = {}
        self._obl_cache: dict[str, ObligationLabel] = {}
        self._lock = threading.Lock()

    @property
    def backend_name(self) -> str:
        return self.backend.name

    def ready(self) -> bool:
        return self.backend.ready()

    def score_nli(self, pairs: Sequence[tuple[str, str]], role: str) -> list[NliProbs]:
        if role not in ROLES:
            raise InputValidationError(f"unknown NLI role {role!r}")
        for i, (p, h) in enumerate(pairs):
            if not p or not h:
                raise InputValidationError(f"pair {i} has an empty side")
        with self._lock:
            missing = []
            seen = set()
            for p, h in pairs:
                key = (role, p, h)
                if key not in self._nli_cache and key not in seen:
                    missing.append((p, h))
                    seen.add(key)
        if missing:
            fresh = self.backend.score_nli(missing, role)
            with self._lock:
                for (p, h), probs in zip(missing, fresh):
                    self._nli_cache[(role, p, h)] = probs
        with self._lock:
            return [self._nli_cache[(role, p, h)] for p, h in pairs]

    def classify_obligations(self, sentences: Sequence[str]) -> list[ObligationLabel]:
        for i, s in enumerate(sentences):
            if not s:
                raise InputValidationError(f"sentence {i} is empty")
        with self._lock:
            missing = [s for s in dict.fromkeys(sentences)
                       if s not in self._obl_cache]
        if missing:
            fresh = self.backend.classify_obligations(missing)
            with self._lock:
                self._obl_cache.update(zip(missing, fresh))
        with self._lock:
            return [self._obl_cache[s] for s in sentences]
