"""NLI-based question-passage validation for generated QA datasets.

Each gold passage is scored with the passage as premise and the question as
hypothesis; the argmax label picks a rule: entailment retains, contradiction
eliminates, and a neutral passage is retained iff its neutral score sits
closer to entailment than to contradiction (ties eliminate).
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass

from .corpus import QaRecord
from .errors import RiragError
from .nli import NliGateway, NliProbs

logger = logging.getLogger(__name__)

RETAIN = "retain"
ELIMINATE = "eliminate"

# Argmax tie-break order.
_LABEL_ORDER = ("entailment", "neutral", "contradiction")


@dataclass(frozen=True)
class PassageVerdict:
    question_id: str
    document_id: int
    passage_id: str
    label: str
    probs: NliProbs
    decision: str

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "document_id": self.document_id,
            "passage_id": self.passage_id,
            "label": self.label,
            "entailment": self.probs.entailment,
            "contradiction": self.probs.contradiction,
            "neutral": self.probs.neutral,
            "decision": self.decision,
        }


def argmax_label(probs: NliProbs) -> str:
    values = {"entailment": probs.entailment, "neutral": probs.neutral,
              "contradiction": probs.contradiction}
    best = max(values.values())
    for label in _LABEL_ORDER:
        if values[label] == best:
            return label
    raise AssertionError("unreachable")


def decide(probs: NliProbs) -> tuple[str, str]:
    """(label, decision) for one probability triple. Total over the simplex."""
    label = argmax_label(probs)
    if label == "entailment":
        return label, RETAIN
    if label == "contradiction":
        return label, ELIMINATE
    e, c, n = probs.entailment, probs.contradiction, probs.neutral
    return label, RETAIN if abs(n - e) < abs(n - c) else ELIMINATE


def validate_pair(question: str, passage: str, gateway: NliGateway,
                  question_id: str = "", document_id: int = 0,
                  passage_id: str = "") -> PassageVerdict:
    probs = gateway.score_nli([(passage, question)], role="validation")[0]
    label, decision = decide(probs)
    return PassageVerdict(question_id, document_id, passage_id,
                          label, probs, decision)


def filter_dataset(records: list[QaRecord], gateway: NliGateway,
                   log_path=None) -> tuple[list[QaRecord], list[PassageVerdict]]:
    """Apply the retention rules to every gold passage of every record.

    Eliminated passages are dropped from their record's gold list; a record
    left with no gold passages is dropped entirely. On a gateway failure the
    verdicts produced so far are flushed to `log_path` before re-raising, so
    a rerun can resume from the log.
    """
    kept: list[QaRecord] = []
    verdicts: list[PassageVerdict] = []
    try:
        for rec in records:
            surviving = []
            for g in rec.gold:
                v = validate_pair(rec.question, g.text, gateway,
                                  question_id=rec.question_id,
                                  document_id=g.document_id,
                                  passage_id=g.passage_id)
                verdicts.append(v)
                if v.decision == RETAIN:
                    surviving.append(g)
            if surviving:
                kept.append(QaRecord(rec.question_id, rec.question,
                                     tuple(surviving)))
            else:
                logger.info("record %s dropped: no surviving gold passages",
                            rec.question_id)
    except RiragError:
        if log_path is not None:
            write_verdict_log(log_path, verdicts)
            logger.error("validation aborted after %d verdicts; checkpoint "
                         "written to %s", len(verdicts), log_path)
        raise
    if log_path is not None:
        write_verdict_log(log_path, verdicts)
    return kept, verdicts


def write_verdict_log(path, verdicts: list[PassageVerdict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in verdicts:
            fh.write(json.dumps(v.to_dict()) + "\n")
