"""Reference-free answer scoring: entailment score, contradiction score,
obligation coverage, and their composite.

For an answer of N sentences a_i and pooled source-passage sentences p_j:
  entailment score   = mean_i max_j P_ent(p_j, a_i)
  contradiction score = mean_i max_j P_con(p_j, a_i)
  coverage           = fraction of obligation sentences o_k with
                       max_l P_ent(o_k, a_l) strictly above the threshold
  composite          = (E_s - C_s + OC_s + 1) / 3
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .corpus import Corpus, segment_sentences
from .errors import InputValidationError, ParseError
from .nli import NliGateway

logger = logging.getLogger(__name__)

COVERAGE_THRESHOLD = 0.7


@dataclass(frozen=True)
class EvidenceSet:
    """Sentences pooled from all source passages, each traced to its origin."""
    sentences: tuple[str, ...]
    sources: tuple[tuple[Optional[int], Optional[str]], ...]

    def __post_init__(self):
        if len(self.sentences) != len(self.sources):
            raise InputValidationError("evidence sentences and sources misaligned")

    @staticmethod
    def from_texts(texts: Sequence[str], ids=None) -> "EvidenceSet":
        sentences: list[str] = []
        sources: list[tuple[Optional[int], Optional[str]]] = []
        for i, text in enumerate(texts):
            source = ids[i] if ids else (None, None)
            for s in segment_sentences(text):
                sentences.append(s.text)
                sources.append(source)
        return EvidenceSet(tuple(sentences), tuple(sources))


@dataclass(frozen=True)
class AnswerSentences:
    sentences: tuple[str, ...]

    @staticmethod
    def from_text(text: str) -> "AnswerSentences":
        return AnswerSentences(tuple(s.text for s in segment_sentences(text)))


@dataclass(frozen=True)
class SentenceSupport:
    answer_sentence: str
    best_premise: str
    max_entailment: float
    max_contradiction: float


@dataclass(frozen=True)
class ObligationRecord:
    sentence: str
    covered: bool
    best_entailment: float


@dataclass(frozen=True)
class RePassReport:
    question_id: str
    e_s: float
    c_s: float
    oc_s: float
    repass: float
    sentence_support: tuple[SentenceSupport, ...] = ()
    obligations: tuple[ObligationRecord, ...] = ()
    m: int = 0
    backend: str = ""
    flags: tuple[str, ...] = ()
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "QuestionID": self.question_id,
            "E_s": self.e_s,
            "C_s": self.c_s,
            "OC_s": self.oc_s,
            "RePASs": self.repass,
            "sentences": [
                {"answer_sentence": s.answer_sentence,
                 "best_premise": s.best_premise,
                 "max_entailment": s.max_entailment,
                 "max_contradiction": s.max_contradiction}
                for s in self.sentence_support
            ],
            "obligations": [
                {"sentence": o.sentence, "covered": o.covered,
                 "best_entailment": o.best_entailment}
                for o in self.obligations
            ],
            "M": self.m,
            "backend": self.backend,
            "flags": list(self.flags),
            "error": self.error,
        }


def sentence_support(evidence: EvidenceSet, answer: AnswerSentences,
                     gateway: NliGateway) -> list[SentenceSupport]:
    """Per answer sentence, the best-entailing premise and max probabilities
    over the full premise x answer matrices."""
    if not evidence.sentences:
        raise InputValidationError("evidence set is empty")
    if not answer.sentences:
        raise InputValidationError("answer has no sentences")
    pairs = [(p, a) for a in answer.sentences for p in evidence.sentences]
    probs = gateway.score_nli(pairs, role="matrix")
    n_prem = len(evidence.sentences)
    records = []
    for i, a in enumerate(answer.sentences):
        row = probs[i * n_prem:(i + 1) * n_prem]
        best_j = max(range(n_prem), key=lambda j: row[j].entailment)
        records.append(SentenceSupport(
            answer_sentence=a,
            best_premise=evidence.sentences[best_j],
            max_entailment=max(p.entailment for p in row),
            max_contradiction=max(p.contradiction for p in row),
        ))
    return records


def entailment_contradiction(evidence: EvidenceSet, answer: AnswerSentences,
                             gateway: NliGateway) -> tuple[float, float]:
    records = sentence_support(evidence, answer, gateway)
    n = len(records)
    e_s = sum(r.max_entailment for r in records) / n
    c_s = sum(r.max_contradiction for r in records) / n
    return e_s, c_s


def obligation_coverage(evidence: EvidenceSet, answer: AnswerSentences,
                        gateway: NliGateway,
                        threshold: float = COVERAGE_THRESHOLD,
                        ) -> tuple[float, list[ObligationRecord]]:
    """Coverage uses strict inequality: an obligation whose best entailment
    equals the threshold is not covered. With zero obligations the score is
    vacuously 1.0."""
    if not evidence.sentences:
        raise InputValidationError("evidence set is empty")
    labels = gateway.classify_obligations(list(evidence.sentences))
    obligations = [s for s, lab in zip(evidence.sentences, labels)
                   if lab.is_obligation]
    if not obligations:
        return 1.0, []
    if not answer.sentences:
        raise InputValidationError("answer has no sentences")
    pairs = [(o, a) for o in obligations for a in answer.sentences]
    probs = gateway.score_nli(pairs, role="coverage")
    n_ans = len(answer.sentences)
    records = []
    for k, o in enumerate(obligations):
        row = probs[k * n_ans:(k + 1) * n_ans]
        best = max(p.entailment for p in row)
        records.append(ObligationRecord(o, best > threshold, best))
    covered = sum(1 for r in records if r.covered)
    return covered / len(records), records


def composite(e_s: float, c_s: float, oc_s: float) -> float:
    for name, v in (("E_s", e_s), ("C_s", c_s), ("OC_s", oc_s)):
        if not 0.0 <= v <= 1.0:
            raise InputValidationError(f"{name}={v} outside [0, 1]")
    return (e_s - c_s + oc_s + 1.0) / 3.0


def score_answer(question_id: str, passages: Sequence[str], answer_text: str,
                 gateway: NliGateway, sources=None,
                 threshold: float = COVERAGE_THRESHOLD) -> RePassReport:
    if not answer_text.strip():
        raise InputValidationError(f"record {question_id!r} has an empty answer")
    evidence = EvidenceSet.from_texts(passages, sources)
    answer = AnswerSentences.from_text(answer_text)
    support = sentence_support(evidence, answer, gateway)
    n = len(support)
    e_s = sum(r.max_entailment for r in support) / n
    c_s = sum(r.max_contradiction for r in support) / n
    oc_s, obligations = obligation_coverage(evidence, answer, gateway, threshold)
    flags = []
    if not obligations:
        flags.append("no obligations detected")
    if gateway.backend_name == "heuristic":
        flags.append("heuristic backend: scores are not metric-grade")
    return RePassReport(
        question_id=question_id,
        e_s=e_s, c_s=c_s, oc_s=oc_s,
        repass=composite(e_s, c_s, oc_s),
        sentence_support=tuple(support),
        obligations=tuple(obligations),
        m=len(obligations),
        backend=gateway.backend_name,
        flags=tuple(flags),
    )


def _resolve_passages(rec: dict, corpus: Optional[Corpus]):
    texts = rec.get("RetrievedPassages") or []
    ids = rec.get("RetrievedIDs") or []
    if texts:
        sources = None
        return list(texts), sources
    if not ids:
        raise InputValidationError("record has neither RetrievedPassages nor "
                                   "RetrievedIDs")
    if corpus is None:
        raise InputValidationError("RetrievedIDs given but no corpus attached")
    texts, sources = [], []
    for cid in ids:
        passage = None
        if "#" in cid:
            doc_s, pid = cid.split("#", 1)
            passage = corpus.lookup(int(doc_s), pid)
        if passage is None:
            passage = next((p for p in corpus if p.record_id == cid), None)
        if passage is None:
            raise InputValidationError(f"unresolvable retrieved id {cid!r}")
        texts.append(passage.text)
        sources.append((passage.document_id, passage.passage_id))
    return texts, sources


def score_answer_file(path, gateway: NliGateway, corpus: Optional[Corpus] = None,
                      threshold: float = COVERAGE_THRESHOLD) -> list[RePassReport]:
    """Score every record of an answer-record file; per-record failures become
    error entries and processing continues."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON at line {exc.lineno}: "
                         f"{exc.msg}") from exc
    if isinstance(data, dict):
        data = [data]
    reports = []
    for rec in data:
        qid = str(rec.get("QuestionID", ""))
        try:
            passages, sources = _resolve_passages(rec, corpus)
            reports.append(score_answer(qid, passages,
                                        str(rec.get("Answer", "")),
                                        gateway, sources, threshold))
        except InputValidationError as exc:
            logger.warning("record %s skipped: %s", qid, exc)
            reports.append(RePassReport(
                question_id=qid, e_s=0.0, c_s=0.0, oc_s=0.0, repass=0.0,
                backend=gateway.backend_name, error=str(exc)))
    return reports


def aggregate(reports: list[RePassReport]) -> dict:
    scored = [r for r in reports if r.error is None]
    n = len(scored)
    backend = scored[0].backend if scored else ""
    mean = lambda xs: sum(xs) / n if n else 0.0
    return {
        "E_s": mean([r.e_s for r in scored]),
        "C_s": mean([r.c_s for r in scored]),
        "OC_s": mean([r.oc_s for r in scored]),
        "RePASs": mean([r.repass for r in scored]),
        "n_records": n,
        "n_errors": len(reports) - n,
        "backend": backend,
    }
