#!/usr/bin/env python3
"""End-to-end walk-through on a tiny inline corpus: index, retrieve with
rank fusion, filter, generate an answer with the echo client, then score
the answer with the heuristic NLI backend. Everything runs offline."""
import json
import tempfile
from pathlib import Path

from rirag.answerflow import (PipelineConfig, run_pipeline,
                              write_answer_file)
from rirag.corpus import QaRecord, load_corpus
from rirag.llm import EchoLlmClient
from rirag.nli import BackendConfig, NliGateway
from rirag.repass import aggregate, score_answer_file
from rirag.retrieval import build_document_index, build_passage_index

RECORDS = [
    {"ID": "a", "DocumentID": 1, "PassageID": "1.1",
     "Passage": "The Fund Manager of a Passported Fund must maintain a "
                "register of unitholders and update it within seven days."},
    {"ID": "b", "DocumentID": 1, "PassageID": "1.2",
     "Passage": "Guidance in this Chapter explains the registration "
                "process and is not binding."},
    {"ID": "c", "DocumentID": 2, "PassageID": "3.4",
     "Passage": "An Authorised Person shall notify the Regulator of any "
                "suspicious transaction without delay."},
    {"ID": "d", "DocumentID": 2, "PassageID": "3.5",
     "Passage": "Records of each notification are required to be kept for "
                "six years."},
]

QUESTIONS = [
    QaRecord("demo-1",
             "Must the fund manager maintain a register of unitholders?", ()),
    QaRecord("demo-2",
             "How long must notification records be kept?", ()),
]


def main():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        corpus_file = tmp / "corpus.json"
        corpus_file.write_text(json.dumps(RECORDS))
        corpus = load_corpus(corpus_file)

        passage_index = build_passage_index(corpus)
        document_index = build_document_index(corpus)
        records, errors = run_pipeline(QUESTIONS, passage_index,
                                       document_index, corpus,
                                       EchoLlmClient(), PipelineConfig(k=3))
        answers_file = tmp / "answers.json"
        write_answer_file(answers_file, records)
        for r in records:
            entry = r.to_dict()
            print(f"--- {entry['QuestionID']}")
            print(f"retrieved: {entry['RetrievedIDs']}")
            print(f"answer: {entry['Answer'][:120]}...")
        for e in errors:
            print(f"--- {e['QuestionID']} FAILED: {e['error']}")

        gateway = NliGateway(BackendConfig(kind="heuristic"))
        reports = score_answer_file(answers_file, gateway)
        summary = aggregate(reports)
        print("--- answer scores (heuristic backend, indicative only)")
        print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
