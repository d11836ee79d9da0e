"""Lexical BM25 retrieval over passages and documents, run-file ingestion,
min-max score normalization, and convex rank fusion.

Candidate ids are strings: "docID#passageID" for passages, "docID" for
documents. Indexes are immutable after build and safe for concurrent search.
"""
from __future__ import annotations

import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, replace
from typing import Optional

from .corpus import Corpus
from .errors import InputValidationError, ParseError

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[0-9a-z]+")


def tokenize(text: str, limit: Optional[int] = None) -> list[str]:
    """Lowercase alphanumeric tokens, optionally truncated to `limit`."""
    tokens = _TOKEN_RE.findall(text.lower())
    return tokens[:limit] if limit is not None else tokens


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 0.9
    b: float = 0.4
    token_limit: int = 512

    def __post_init__(self):
        if self.k1 <= 0:
            raise InputValidationError("k1 must be positive")
        if not 0.0 <= self.b <= 1.0:
            raise InputValidationError("b must lie in [0, 1]")
        if self.token_limit < 1:
            raise InputValidationError("token_limit must be >= 1")


@dataclass(frozen=True)
class ScoredCandidate:
    candidate_id: str
    raw_score: float
    normalized_score: Optional[float] = None

    def __post_init__(self):
        if self.normalized_score is not None and not (
                -1e-12 <= self.normalized_score <= 1.0 + 1e-12):
            raise InputValidationError(
                f"normalized_score {self.normalized_score} outside [0, 1]")

    @property
    def score(self) -> float:
        return (self.normalized_score
                if self.normalized_score is not None else self.raw_score)

    @property
    def document_id(self) -> str:
        return self.candidate_id.split("#", 1)[0]


def _sort_candidates(cands: list[ScoredCandidate]) -> list[ScoredCandidate]:
    return sorted(cands, key=lambda c: (-c.score, c.candidate_id))


@dataclass(frozen=True)
class RankedList:
    query_id: str
    candidates: tuple[ScoredCandidate, ...]

    def __post_init__(self):
        ids = [c.candidate_id for c in self.candidates]
        if len(set(ids)) != len(ids):
            raise InputValidationError(
                f"ranking for query {self.query_id!r} has duplicate candidates")

    @staticmethod
    def from_scores(query_id: str, cands: list[ScoredCandidate]) -> "RankedList":
        return RankedList(query_id, tuple(_sort_candidates(cands)))

    def top(self, k: int) -> tuple[ScoredCandidate, ...]:
        return self.candidates[:k]


@dataclass(frozen=True)
class FusionConfig:
    doc_weight: float = 0.1
    passage_cutoff: int = 100

    def __post_init__(self):
        if not 0.0 <= self.doc_weight <= 1.0:
            raise InputValidationError("doc_weight must lie in [0, 1]")
        if self.passage_cutoff < 1:
            raise InputValidationError("passage_cutoff must be >= 1")


class Bm25Index:
    """Okapi BM25 inverted index over a fixed set of text units."""

    def __init__(self, unit_ids: list[str], texts: list[str],
                 params: Bm25Params, truncate: bool):
        if not unit_ids:
            raise InputValidationError("cannot index an empty corpus")
        self.params = params
        self.unit_ids = list(unit_ids)
        limit = params.token_limit if truncate else None
        tokenized = [tokenize(t, limit) for t in texts]
        self.lengths = [len(toks) for toks in tokenized]
        self.avgdl = sum(self.lengths) / len(self.lengths)
        self.n_units = len(unit_ids)
        self.postings: dict[str, list[tuple[int, int]]] = {}
        for idx, toks in enumerate(tokenized):
            for term, tf in Counter(toks).items():
                self.postings.setdefault(term, []).append((idx, tf))
        self.idf = {
            term: math.log(1.0 + (self.n_units - len(plist) + 0.5)
                           / (len(plist) + 0.5))
            for term, plist in self.postings.items()
        }

    def term_stats(self, unit_index: int) -> Counter:
        stats: Counter = Counter()
        for term, plist in self.postings.items():
            for idx, tf in plist:
                if idx == unit_index:
                    stats[term] = tf
        return stats

    def search(self, query: str, k: int) -> RankedList:
        if k < 1:
            raise InputValidationError("k must be >= 1")
        q_tokens = tokenize(query, self.params.token_limit)
        scores: dict[int, float] = {}
        k1, b = self.params.k1, self.params.b
        for term in q_tokens:
            plist = self.postings.get(term)
            if plist is None:
                continue
            idf = self.idf[term]
            for idx, tf in plist:
                norm = k1 * (1.0 - b + b * self.lengths[idx] / self.avgdl)
                scores[idx] = scores.get(idx, 0.0) + (
                    idf * tf * (k1 + 1.0) / (tf + norm))
        cands = [ScoredCandidate(self.unit_ids[idx], s)
                 for idx, s in scores.items() if s > 0.0]
        ranked = RankedList.from_scores("", cands)
        return RankedList(ranked.query_id, ranked.candidates[:k])


def build_passage_index(corpus: Corpus, params: Bm25Params = Bm25Params()) -> Bm25Index:
    if len(corpus) == 0:
        raise InputValidationError("cannot index an empty corpus")
    ids = [p.candidate_id for p in corpus]
    texts = [p.text for p in corpus]
    return Bm25Index(ids, texts, params, truncate=True)


def build_document_index(corpus: Corpus, params: Bm25Params = Bm25Params()) -> Bm25Index:
    if len(corpus) == 0:
        raise InputValidationError("cannot index an empty corpus")
    ids = [str(doc_id) for doc_id in corpus.documents]
    texts = [corpus.documents[doc_id].text() for doc_id in corpus.documents]
    # Document units are not truncated; only queries and passages are.
    return Bm25Index(ids, texts, params, truncate=False)


def search(index: Bm25Index, query: str, k: int, query_id: str = "") -> RankedList:
    ranked = index.search(query, k)
    return replace(ranked, query_id=query_id)


def normalize(ranked: RankedList, window: int) -> RankedList:
    """Min-max normalize raw scores over the top-`window` candidates.

    Candidates beyond the window are dropped. A degenerate window (all raw
    scores equal) maps every score to 1.0.
    """
    if window < 1:
        raise InputValidationError("window must be >= 1")
    if not ranked.candidates:
        raise InputValidationError(
            f"cannot normalize an empty ranking (query {ranked.query_id!r})")
    top = ranked.candidates[:window]
    raw = [c.raw_score for c in top]
    lo, hi = min(raw), max(raw)
    if hi == lo:
        normed = [replace(c, normalized_score=1.0) for c in top]
    else:
        normed = [replace(c, normalized_score=(c.raw_score - lo) / (hi - lo))
                  for c in top]
    return RankedList(ranked.query_id, tuple(normed))


def fuse(passage_ranking: RankedList, document_ranking: RankedList,
         config: FusionConfig = FusionConfig()) -> RankedList:
    """Convex combination of normalized passage and document scores.

    fused(p) = (1 - doc_weight) * s_passage(p) + doc_weight * s_doc(d(p));
    a document missing from the document ranking contributes 0.
    """
    doc_scores: dict[str, float] = {}
    for c in document_ranking.candidates:
        if c.normalized_score is None:
            raise InputValidationError("document ranking is not normalized")
        doc_scores[c.candidate_id] = c.normalized_score

    w = config.doc_weight
    fused = []
    for c in passage_ranking.candidates[:config.passage_cutoff]:
        if c.normalized_score is None:
            raise InputValidationError("passage ranking is not normalized")
        if "#" not in c.candidate_id:
            raise InputValidationError(
                f"passage candidate {c.candidate_id!r} carries no document id")
        d_score = doc_scores.get(c.document_id, 0.0)
        combined = (1.0 - w) * c.normalized_score + w * d_score
        fused.append(ScoredCandidate(c.candidate_id, c.raw_score,
                                     normalized_score=combined))
    out = sorted(fused, key=lambda c: (-c.normalized_score, c.candidate_id))
    return RankedList(passage_ranking.query_id, tuple(out))


def ingest_run_file(path) -> dict[str, RankedList]:
    """Parse a run file into per-query rankings.

    Line format: `query_id candidate_id rank score tag`, whitespace-separated.
    Out-of-order scores are accepted and re-sorted with a warning; duplicate
    (query, candidate) pairs are errors.
    """
    per_query: dict[str, list[ScoredCandidate]] = {}
    seen: set[tuple[str, str]] = set()
    sorted_ok: dict[str, float] = {}
    needs_warn = False
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 5:
                raise ParseError(
                    f"{path}:{lineno}: expected 5 fields, got {len(parts)}")
            qid, cid, _rank, score_s, _tag = parts
            try:
                score = float(score_s)
            except ValueError:
                raise ParseError(
                    f"{path}:{lineno}: unparseable score {score_s!r}") from None
            if (qid, cid) in seen:
                raise ParseError(
                    f"{path}:{lineno}: duplicate candidate {cid!r} for "
                    f"query {qid!r}")
            seen.add((qid, cid))
            if qid in sorted_ok and score > sorted_ok[qid]:
                needs_warn = True
            sorted_ok[qid] = score
            per_query.setdefault(qid, []).append(ScoredCandidate(cid, score))
    if needs_warn:
        logger.warning("%s: scores out of descending order; re-sorted", path)
    return {qid: RankedList.from_scores(qid, cands)
            for qid, cands in per_query.items()}


def write_run_file(path, runs: dict[str, RankedList], tag: str = "rirag") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for qid in runs:
            for rank, c in enumerate(runs[qid].candidates, 1):
                fh.write(f"{qid} {c.candidate_id} {rank} {c.score!r} {tag}\n")
