"""Recall@k and MAP@k for run files against gold question-passage sets.

Queries present in the qrels but absent from the run score 0; the AP
denominator is |gold| (trec-style).
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import InputValidationError
from .retrieval import RankedList


@dataclass(frozen=True)
class Qrels:
    gold: dict[str, frozenset[str]]

    def __post_init__(self):
        for qid, g in self.gold.items():
            if not g:
                raise InputValidationError(f"query {qid!r} has an empty gold set")

    @staticmethod
    def from_qa_records(records) -> "Qrels":
        gold = {
            rec.question_id: frozenset(
                f"{g.document_id}#{g.passage_id}" for g in rec.gold)
            for rec in records
        }
        return Qrels(gold)


@dataclass(frozen=True)
class RetrievalReport:
    k: int
    recall: float
    map: float
    per_query: dict[str, dict[str, float]]

    def to_dict(self) -> dict:
        return {"k": self.k, "recall": self.recall, "map": self.map,
                "per_query": self.per_query}

    def table(self) -> str:
        lines = [f"{'query':<40} {'recall':>8} {'ap':>8}"]
        for qid, vals in self.per_query.items():
            lines.append(f"{qid:<40} {vals['recall']:>8.4f} {vals['ap']:>8.4f}")
        lines.append(f"{'MEAN (k=%d)' % self.k:<40} "
                     f"{self.recall:>8.4f} {self.map:>8.4f}")
        return "\n".join(lines)


def recall_at_k(ranked: RankedList, gold: frozenset[str], k: int) -> float:
    if k <= 0:
        raise InputValidationError("k must be positive")
    top = {c.candidate_id for c in ranked.candidates[:k]}
    return len(top & gold) / len(gold)


def ap_at_k(ranked: RankedList, gold: frozenset[str], k: int) -> float:
    if k <= 0:
        raise InputValidationError("k must be positive")
    hits = 0
    total = 0.0
    for rank, c in enumerate(ranked.candidates[:k], 1):
        if c.candidate_id in gold:
            hits += 1
            total += hits / rank
    return total / len(gold)


def evaluate(runs: dict[str, RankedList], qrels: Qrels, k: int) -> RetrievalReport:
    if k <= 0:
        raise InputValidationError("k must be positive")
    per_query: dict[str, dict[str, float]] = {}
    empty = RankedList("", ())
    for qid, gold in qrels.gold.items():
        ranked = runs.get(qid, empty)
        per_query[qid] = {
            "recall": recall_at_k(ranked, gold, k),
            "ap": ap_at_k(ranked, gold, k),
        }
    n = len(per_query)
    mean_recall = sum(v["recall"] for v in per_query.values()) / n if n else 0.0
    mean_ap = sum(v["ap"] for v in per_query.values()) / n if n else 0.0
    return RetrievalReport(k=k, recall=mean_recall, map=mean_ap,
                           per_query=per_query)
