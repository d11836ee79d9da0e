"""Question-generation orchestration: topic-keyword grouping of obligation
passages, seeded random sub-grouping, and prompt-templated LLM generation
for single- and multi-passage questions."""
from __future__ import annotations

import importlib.resources
import json
import logging
import random
import re
import uuid
from dataclasses import dataclass
from typing import Optional, Sequence

from .corpus import Corpus, GoldRef, Passage, QaRecord
from .errors import InputValidationError, RiragError
from .nli import NliGateway

logger = logging.getLogger(__name__)

MAX_SUBGROUP_SIZE = 6


def load_topic_map(path=None) -> dict[str, list[str]]:
    """Topic -> keyword list; keywords are lowercased on load."""
    if path is None:
        ref = importlib.resources.files("rirag.resources") / "topics.json"
        data = json.loads(ref.read_text(encoding="utf-8"))
    else:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    topics = {t: [k.lower() for k in kws] for t, kws in data.items()}
    for t, kws in topics.items():
        if not kws:
            raise InputValidationError(f"topic {t!r} has no keywords")
    return topics


@dataclass(frozen=True)
class PassageGroup:
    topic: str
    passages: tuple[Passage, ...]


def _matches(text_lower: str, keyword: str, whole_word: bool) -> bool:
    if whole_word:
        return re.search(r"\b" + re.escape(keyword) + r"\b", text_lower) is not None
    return keyword in text_lower


def group_by_topic(corpus: Corpus, topics: dict[str, list[str]],
                   gateway: Optional[NliGateway] = None,
                   whole_word: bool = False) -> list[PassageGroup]:
    """A passage joins a topic iff its lowercased text contains any of the
    topic's keywords. With a gateway, only obligation passages (any sentence
    classified as an obligation) are considered."""
    if not topics:
        raise InputValidationError("topic map is empty")
    pool = list(corpus)
    if gateway is not None:
        labels = gateway.classify_obligations([p.text for p in pool])
        pool = [p for p, lab in zip(pool, labels) if lab.is_obligation]
    groups = []
    for topic, keywords in topics.items():
        members = tuple(
            p for p in pool
            if any(_matches(p.text.lower(), kw, whole_word) for kw in keywords)
        )
        if members:
            groups.append(PassageGroup(topic, members))
    return groups


def sample_subgroups(group: PassageGroup, size: int, count: int,
                     seed: int) -> list[tuple[Passage, ...]]:
    """`count` subsets of `size` distinct passages, reproducible from seed."""
    if size < 1 or size > MAX_SUBGROUP_SIZE:
        raise InputValidationError(
            f"subgroup size must lie in [1, {MAX_SUBGROUP_SIZE}]")
    if size > len(group.passages):
        raise InputValidationError(
            f"subgroup size {size} exceeds group {group.topic!r} "
            f"({len(group.passages)} passages)")
    rng = random.Random(seed)
    return [tuple(rng.sample(group.passages, size)) for _ in range(count)]


def _prompt(mode: str) -> str:
    name = ("question_prompt_single.txt" if mode == "single"
            else "question_prompt_multi.txt")
    ref = importlib.resources.files("rirag.resources") / name
    return ref.read_text(encoding="utf-8").strip()


def generate_questions(inputs: Sequence[Sequence[Passage]], llm_client,
                       mode: str = "single",
                       rng: Optional[random.Random] = None) -> list[QaRecord]:
    """One generated question per passage subset; the subset becomes the
    record's gold list. Client failures are logged and the batch continues."""
    if mode not in ("single", "multi"):
        raise InputValidationError(f"unknown generation mode {mode!r}")
    prompt = _prompt(mode)
    records = []
    for subset in inputs:
        if mode == "single" and len(subset) != 1:
            raise InputValidationError(
                "single mode requires exactly one passage per subset")
        body = "\n\n".join(f"Passage {i}:\n{p.text}"
                           for i, p in enumerate(subset, 1))
        try:
            question = llm_client.complete(prompt, body).strip()
        except RiragError as exc:
            logger.warning("generation failed for subset "
                           "%s: %s", [p.candidate_id for p in subset], exc)
            continue
        if not question:
            logger.warning("empty question for subset %s; skipped",
                           [p.candidate_id for p in subset])
            continue
        qid = (str(uuid.UUID(int=rng.getrandbits(128), version=4))
               if rng is not None else str(uuid.uuid4()))
        gold = tuple(GoldRef(p.document_id, p.passage_id, p.text)
                     for p in subset)
        records.append(QaRecord(qid, question, gold))
    return records


def write_qa_file(path, records: Sequence[QaRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([r.to_record() for r in records], fh, indent=2)
