import json

import pytest

from rirag.corpus import load_corpus, load_qa

DOC20_TEXT = (
    "This Guidance has been produced to help legal practitioners in ADGM to "
    "understand the intention behind the Application of English Law "
    "Regulations 2015 (the 'Application Regulations') and how English law "
    "has been implemented in ADGM."
)

DOC16_TEXT = (
    "Each Reporting UAE Financial Institution shall establish and implement "
    "appropriate systems and internal procedures to enable its compliance "
    "with the Cabinet Resolution and these Regulations."
)

DOC5_TEXT = (
    "The Fund Manager of a Passported Fund must:\n"
    "(a)\tensure that the Passported Fund is at all times managed and "
    "operated in compliance with its constitution, in accordance with "
    "applicable ADGM legislation, and with these Rules; and\n"
    "(b)\tmaintain, or cause to be maintained, a Unitholder register for "
    "the Passported Fund."
)

DOC6_TEXT = (
    "The onus will be on the Regulator to show that he is culpable, taking "
    "into account the standard of conduct required under the principle in "
    "question. In determining whether or not the particular conduct of an "
    "individual complies with the principles, the Regulator will take into "
    "account whether that conduct is consistent with the requirements and "
    "standards relevant to an individual's role and the information "
    "available to him."
)

DOC7_TEXT = (
    "In those circumstances, the onus is on the Regulator to show that the "
    "Approved Person is culpable, taking into account the standard of "
    "conduct required under the Principle in question."
)

CORPUS_RECORDS = [
    {"ID": "2230472f-a9d4-4b81-842f-964c0653f8e7", "DocumentID": 20,
     "PassageID": "1.1", "Passage": DOC20_TEXT},
    {"ID": "aaaa0001-0000-0000-0000-000000000001", "DocumentID": 16,
     "PassageID": "Part 3.6.(2)", "Passage": DOC16_TEXT},
    {"ID": "aaaa0002-0000-0000-0000-000000000002", "DocumentID": 5,
     "PassageID": "6.1.2", "Passage": DOC5_TEXT},
    {"ID": "aaaa0003-0000-0000-0000-000000000003", "DocumentID": 6,
     "PassageID": "PART 5.13.3.9.Guidance.3", "Passage": DOC6_TEXT},
    {"ID": "aaaa0004-0000-0000-0000-000000000004", "DocumentID": 7,
     "PassageID": "2.3.1.Guidance.3.", "Passage": DOC7_TEXT},
]

QA_RECORDS = [
    {
        "QuestionID": "739921c1-385a-4735-a052-dee9fba73602",
        "Question": "What are the key compliance indicators that a Fund "
                    "Manager should monitor to confirm that a Passported "
                    "Fund is being managed and operated within its "
                    "constitutional framework and applicable ADGM "
                    "legislation?",
        "Passages": [
            {"DocumentID": 16, "PassageID": "Part 3.6.(2)",
             "Passage": DOC16_TEXT},
            {"DocumentID": 5, "PassageID": "6.1.2", "Passage": DOC5_TEXT},
        ],
    },
    {
        "QuestionID": "8dc451a4-ec55-4fa5-abce-b0b8764a9338",
        "Question": "Can the Regulator provide case studies or examples "
                    "where the conduct of an Approved Person has been deemed "
                    "compliant or non-compliant with the Principles?",
        "Passages": [
            {"DocumentID": 6, "PassageID": "PART 5.13.3.9.Guidance.3",
             "Passage": DOC6_TEXT},
            {"DocumentID": 7, "PassageID": "2.3.1.Guidance.3.",
             "Passage": DOC7_TEXT},
        ],
    },
]


@pytest.fixture
def corpus_path(tmp_path):
    path = tmp_path / "corpus.json"
    path.write_text(json.dumps(CORPUS_RECORDS), encoding="utf-8")
    return path


@pytest.fixture
def qa_path(tmp_path):
    path = tmp_path / "qa.json"
    path.write_text(json.dumps(QA_RECORDS), encoding="utf-8")
    return path


@pytest.fixture
def corpus(corpus_path):
    return load_corpus(corpus_path)


@pytest.fixture
def qa_records(qa_path, corpus):
    return load_qa(qa_path, corpus)
