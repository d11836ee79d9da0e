"""Structured regulatory corpus: loading, validation, sentence segmentation.

The corpus file is a JSON array of {"ID", "DocumentID", "PassageID", "Passage"}
records; the QA file is a JSON array of {"QuestionID", "Question", "Passages"}
records. Both collections are immutable after load and safe to share across
threads.
"""
from __future__ import annotations

import json
import logging
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional

from .errors import InputValidationError, ParseError

logger = logging.getLogger(__name__)

_TAG_RE = re.compile(r"\\(Table|Figure) (Start|End)")

# Abbreviations whose trailing period never ends a sentence.
_ABBREVIATIONS = frozenset({
    "e.g.", "i.e.", "etc.", "cf.", "viz.", "vs.", "no.", "nos.", "art.",
    "arts.", "para.", "paras.", "sec.", "secs.", "approx.", "inc.", "ltd.",
    "co.", "corp.", "dept.", "mr.", "mrs.", "ms.", "dr.", "v.",
})

_LIST_MARKER_RE = re.compile(r"\([A-Za-z0-9]+\)|\d+\.|•")


@dataclass(frozen=True)
class Passage:
    record_id: str
    document_id: int
    passage_id: str
    text: str

    def validate(self) -> None:
        if not self.text.strip():
            raise InputValidationError(
                f"passage ({self.document_id}, {self.passage_id!r}) has empty text")
        if not self.passage_id:
            raise InputValidationError(
                f"passage record {self.record_id!r} has empty PassageID")
        _check_tag_balance(self.text, self.document_id, self.passage_id)

    @property
    def candidate_id(self) -> str:
        return f"{self.document_id}#{self.passage_id}"


def _check_tag_balance(text: str, document_id, passage_id) -> None:
    stack: list[str] = []
    for m in _TAG_RE.finditer(text):
        kind, edge = m.group(1), m.group(2)
        if edge == "Start":
            stack.append(kind)
        else:
            if not stack or stack[-1] != kind:
                raise InputValidationError(
                    f"passage ({document_id}, {passage_id!r}): "
                    f"unbalanced \\{kind} {edge} tag")
            stack.pop()
    if stack:
        raise InputValidationError(
            f"passage ({document_id}, {passage_id!r}): "
            f"unclosed \\{stack[-1]} Start tag")


@dataclass(frozen=True)
class Document:
    document_id: int
    passages: tuple[Passage, ...]

    def text(self) -> str:
        """Newline-joined passage texts, in source order."""
        return "\n".join(p.text for p in self.passages)


class GoldRef(NamedTuple):
    document_id: int
    passage_id: str
    text: str


@dataclass(frozen=True)
class QaRecord:
    question_id: str
    question: str
    gold: tuple[GoldRef, ...]

    def to_record(self) -> dict:
        return {
            "QuestionID": self.question_id,
            "Question": self.question,
            "Passages": [
                {"DocumentID": g.document_id, "PassageID": g.passage_id,
                 "Passage": g.text}
                for g in self.gold
            ],
        }


@dataclass(frozen=True)
class Corpus:
    """All documents keyed by id, plus the flat passage list in file order."""
    documents: dict[int, Document]
    passages: tuple[Passage, ...]
    _by_key: dict[tuple[int, str], Passage] = field(repr=False, default_factory=dict)

    def __len__(self) -> int:
        return len(self.passages)

    def __iter__(self) -> Iterator[Passage]:
        return iter(self.passages)

    def lookup(self, document_id: int, passage_id: str) -> Optional[Passage]:
        return self._by_key.get((document_id, passage_id))

    def to_records(self) -> list[dict]:
        return [
            {"ID": p.record_id, "DocumentID": p.document_id,
             "PassageID": p.passage_id, "Passage": p.text}
            for p in self.passages
        ]


def _load_json_array(path) -> list:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc
    if not isinstance(data, list):
        raise InputValidationError(f"{path}: expected a JSON array")
    return data


def load_corpus(path) -> Corpus:
    """Load and validate the structured corpus file."""
    raw = _load_json_array(path)
    passages: list[Passage] = []
    by_key: dict[tuple[int, str], Passage] = {}
    for i, rec in enumerate(raw):
        for key in ("ID", "DocumentID", "PassageID", "Passage"):
            if key not in rec:
                raise InputValidationError(
                    f"{path}: record {i} is missing key {key!r}")
        p = Passage(
            record_id=str(rec["ID"]),
            document_id=int(rec["DocumentID"]),
            passage_id=str(rec["PassageID"]),
            text=str(rec["Passage"]),
        )
        p.validate()
        key = (p.document_id, p.passage_id)
        if key in by_key:
            raise InputValidationError(
                f"{path}: duplicate passage key (DocumentID={p.document_id}, "
                f"PassageID={p.passage_id!r})")
        by_key[key] = p
        passages.append(p)

    grouped: dict[int, list[Passage]] = {}
    for p in passages:
        grouped.setdefault(p.document_id, []).append(p)
    documents = {
        doc_id: Document(doc_id, tuple(plist)) for doc_id, plist in grouped.items()
    }
    corpus = Corpus(documents=documents, passages=tuple(passages), _by_key=by_key)
    logger.info("loaded corpus: %d documents, %d passages",
                len(documents), len(passages))
    return corpus


def load_qa(path, corpus: Optional[Corpus] = None) -> list[QaRecord]:
    """Load QA records; with a corpus attached, warn about dangling gold refs."""
    raw = _load_json_array(path)
    records: list[QaRecord] = []
    for i, rec in enumerate(raw):
        for key in ("QuestionID", "Question", "Passages"):
            if key not in rec:
                raise InputValidationError(
                    f"{path}: QA record {i} is missing key {key!r}")
        if not rec["Passages"]:
            raise InputValidationError(
                f"{path}: QA record {rec['QuestionID']!r} has an empty "
                f"Passages array")
        if not str(rec["Question"]).strip():
            raise InputValidationError(
                f"{path}: QA record {rec['QuestionID']!r} has an empty question")
        gold = tuple(
            GoldRef(int(g["DocumentID"]), str(g["PassageID"]), str(g["Passage"]))
            for g in rec["Passages"]
        )
        records.append(QaRecord(str(rec["QuestionID"]), str(rec["Question"]), gold))

    if corpus is not None:
        for ref in find_dangling(records, corpus):
            logger.warning("dangling gold reference: question %s -> (%d, %r)",
                           ref[0], ref[1], ref[2])
    return records


def find_dangling(records: list[QaRecord], corpus: Corpus) -> list[tuple[str, int, str]]:
    """(question_id, document_id, passage_id) for gold refs not in the corpus."""
    dangling = []
    for rec in records:
        for g in rec.gold:
            if corpus.lookup(g.document_id, g.passage_id) is None:
                dangling.append((rec.question_id, g.document_id, g.passage_id))
    return dangling


def document_text(document: Document) -> str:
    return document.text()


class Sentence(NamedTuple):
    start: int
    end: int
    text: str


@dataclass(frozen=True)
class SentenceList:
    source: str
    sentences: tuple[Sentence, ...]

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    @property
    def texts(self) -> list[str]:
        return [s.text for s in self.sentences]


def _protected_regions(text: str) -> list[tuple[int, int]]:
    """Top-level table/figure tagged regions; unbalanced tags are ignored."""
    regions = []
    stack: list[tuple[str, int]] = []
    for m in _TAG_RE.finditer(text):
        kind, edge = m.group(1), m.group(2)
        if edge == "Start":
            stack.append((kind, m.start()))
        elif stack and stack[-1][0] == kind:
            _, start = stack.pop()
            if not stack:
                regions.append((start, m.end()))
    return regions


def _is_abbreviation(text: str, dot_pos: int) -> bool:
    # dot_pos is the index one past the period.
    m = re.search(r"(\S+)$", text[:dot_pos])
    return bool(m) and m.group(1).lower() in _ABBREVIATIONS


def _segment_plain(text: str, start: int, end: int) -> list[int]:
    """Cut positions (exclusive sentence-end offsets) inside text[start:end]."""
    cuts = []
    seg = text[start:end]
    for m in re.finditer(r"[.!?;]", seg):
        pos = m.start()
        after = seg[pos + 1:]
        stripped = after.lstrip()
        if stripped and after == stripped:
            continue  # punctuation not followed by whitespace
        if stripped and not (stripped[0].isupper() or stripped[0] == "("):
            continue
        if m.group(0) == "." and _is_abbreviation(seg, pos + 1):
            continue
        cuts.append(start + pos + 1)
    for m in re.finditer(r"\n", seg):
        rest = seg[m.end():].lstrip(" \t")
        if _LIST_MARKER_RE.match(rest):
            cuts.append(start + m.start())
    return cuts


def _segment_protected(text: str, start: int, end: int) -> list[tuple[int, int]]:
    """One sentence per non-empty line inside a table/figure region."""
    spans = []
    line_start = start
    for i in range(start, end + 1):
        if i == end or text[i] == "\n":
            spans.append((line_start, i))
            line_start = i + 1
    return spans


def _trim(text: str, start: int, end: int) -> Optional[tuple[int, int]]:
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    return (start, end) if start < end else None


def segment_sentences(text: str) -> SentenceList:
    """Deterministic rule-based sentence segmentation.

    Splits after sentence-final punctuation (. ! ? ;) followed by whitespace
    and an uppercase letter or opening parenthesis, and before newline-led
    list markers like "(a)", "1." or a bullet. A fixed abbreviation list
    suppresses false splits; table/figure tagged regions are split per line.
    """
    text = unicodedata.normalize("NFC", text)
    if not text.strip():
        return SentenceList(text, ())

    protected = _protected_regions(text)
    raw_spans: list[tuple[int, int]] = []
    cursor = 0
    for pstart, pend in protected + [(len(text), len(text))]:
        if cursor < pstart:
            cuts = sorted(set(_segment_plain(text, cursor, pstart)))
            prev = cursor
            for cut in cuts:
                raw_spans.append((prev, cut))
                prev = cut
            raw_spans.append((prev, pstart))
        if pstart < pend:
            raw_spans.extend(_segment_protected(text, pstart, pend))
        cursor = pend

    sentences = []
    for s, e in raw_spans:
        trimmed = _trim(text, s, e)
        if trimmed:
            sentences.append(Sentence(trimmed[0], trimmed[1],
                                      text[trimmed[0]:trimmed[1]]))
    return SentenceList(text, tuple(sentences))
