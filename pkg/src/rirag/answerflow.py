"""Post-retrieval passage filtering and answer generation.

Filtering takes the top candidates by normalized score, cuts at the first
consecutive-score drop larger than the drop threshold, removes candidates
below the minimum-score floor, and falls back to the rank-1 candidate if
nothing survives. Answers are produced by an LLM client against a fixed
system prompt stored under resources/.
"""
from __future__ import annotations

import importlib.resources
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from .corpus import Corpus, QaRecord
from .errors import InputValidationError, RiragError
from .retrieval import (Bm25Index, FusionConfig, RankedList, ScoredCandidate,
                        fuse, normalize, search)

logger = logging.getLogger(__name__)


def answer_prompt() -> str:
    ref = importlib.resources.files("rirag.resources") / "answer_prompt.txt"
    return ref.read_text(encoding="utf-8").strip()


@dataclass(frozen=True)
class FilterPolicy:
    drop_threshold: float = 0.2
    min_score: float = 0.7
    max_passages: int = 10

    def __post_init__(self):
        if self.drop_threshold < 0:
            raise InputValidationError("drop_threshold must be >= 0")
        if not 0.0 <= self.min_score <= 1.0:
            raise InputValidationError("min_score must lie in [0, 1]")
        if self.max_passages < 1:
            raise InputValidationError("max_passages must be >= 1")


@dataclass(frozen=True)
class AnswerRecord:
    question_id: str
    question: str
    retrieved_passages: tuple[str, ...]
    answer: str
    retrieved_ids: tuple[str, ...]

    def __post_init__(self):
        if len(self.retrieved_passages) != len(self.retrieved_ids):
            raise InputValidationError(
                "retrieved ids and passages must be aligned")

    def to_dict(self) -> dict:
        return {
            "QuestionID": self.question_id,
            "Question": self.question,
            "RetrievedPassages": list(self.retrieved_passages),
            "Answer": self.answer,
            "RetrievedIDs": list(self.retrieved_ids),
        }


def filter_passages(ranked: RankedList,
                    policy: FilterPolicy = FilterPolicy()) -> list[ScoredCandidate]:
    """Gap cut, then score floor, then rank-1 fallback."""
    if not ranked.candidates:
        raise InputValidationError(
            f"cannot filter an empty ranking (query {ranked.query_id!r})")
    top = list(ranked.candidates[:policy.max_passages])
    cut = len(top)
    for i in range(len(top) - 1):
        if top[i].score - top[i + 1].score > policy.drop_threshold:
            cut = i + 1
            break
    kept = [c for c in top[:cut] if c.score >= policy.min_score]
    if not kept:
        logger.info("query %s: all candidates filtered; keeping rank-1",
                    ranked.query_id)
        kept = [top[0]]
    return kept


def generate_answer(question: str, passages: Sequence[str], llm_client,
                    question_id: str = "") -> str:
    if not passages:
        raise InputValidationError(
            f"question {question_id!r}: no passages to answer from")
    numbered = "\n\n".join(f"Passage {i}:\n{p}"
                           for i, p in enumerate(passages, 1))
    user_content = f"Question: {question}\n\n{numbered}"
    text = llm_client.complete(answer_prompt(), user_content)
    if not text or not text.strip():
        raise InputValidationError(
            f"question {question_id!r}: model returned an empty answer")
    return text


@dataclass(frozen=True)
class PipelineConfig:
    k: int = 10
    fusion: Optional[FusionConfig] = FusionConfig()
    policy: FilterPolicy = FilterPolicy()
    jobs: int = 4


def answer_one(record: QaRecord, passage_index: Bm25Index,
               document_index: Optional[Bm25Index], corpus: Corpus,
               llm_client, config: PipelineConfig) -> AnswerRecord:
    window = config.fusion.passage_cutoff if config.fusion else config.k
    ranked = search(passage_index, record.question, window,
                    query_id=record.question_id)
    if not ranked.candidates:
        raise InputValidationError(
            f"question {record.question_id!r}: empty retrieval")
    ranked = normalize(ranked, window)
    if config.fusion and document_index is not None:
        doc_ranked = search(document_index, record.question,
                            document_index.n_units,
                            query_id=record.question_id)
        if doc_ranked.candidates:
            doc_ranked = normalize(doc_ranked, len(doc_ranked.candidates))
            ranked = fuse(ranked, doc_ranked, config.fusion)
    ranked = RankedList(ranked.query_id, ranked.candidates[:config.k])
    kept = filter_passages(ranked, config.policy)

    texts = []
    for c in kept:
        doc_s, pid = c.candidate_id.split("#", 1)
        passage = corpus.lookup(int(doc_s), pid)
        if passage is None:
            raise InputValidationError(
                f"candidate {c.candidate_id!r} not found in corpus")
        texts.append(passage.text)
    answer = generate_answer(record.question, texts, llm_client,
                             question_id=record.question_id)
    return AnswerRecord(record.question_id, record.question,
                        tuple(texts), answer,
                        tuple(c.candidate_id for c in kept))


def run_pipeline(questions: Sequence[QaRecord], passage_index: Bm25Index,
                 document_index: Optional[Bm25Index], corpus: Corpus,
                 llm_client, config: PipelineConfig = PipelineConfig(),
                 ) -> tuple[list[AnswerRecord], list[dict]]:
    """Answer every question; failures become error entries and the batch
    continues. Output order equals input order."""
    def run(record: QaRecord):
        try:
            return answer_one(record, passage_index, document_index, corpus,
                              llm_client, config)
        except RiragError as exc:
            logger.warning("question %s failed: %s", record.question_id, exc)
            return {"QuestionID": record.question_id, "error": str(exc)}

    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        results = list(pool.map(run, questions))
    records = [r for r in results if isinstance(r, AnswerRecord)]
    errors = [r for r in results if isinstance(r, dict)]
    return records, errors


def write_answer_file(path, records: Sequence[AnswerRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([r.to_dict() for r in records], fh, indent=2)
