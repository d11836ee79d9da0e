#!/usr/bin/env python3
"""BM25 retrieval evaluation against a locally downloaded ObliQA split.

Usage:
    python3 scripts/run_obliqa_eval.py --corpus corpus.json \
        --qa ObliQA_test.json [--k 10] [--fusion-weight 0.1]

Prints recall@k and MAP@k for passage-only BM25 and, when a fusion
weight is given, for document-fused retrieval as well.
"""
import argparse

from rirag.corpus import load_corpus, load_qa
from rirag.eval_retrieval import Qrels, evaluate
from rirag.retrieval import (FusionConfig, RankedList, build_document_index,
                             build_passage_index, fuse, normalize, search)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--corpus", required=True)
    parser.add_argument("--qa", required=True)
    parser.add_argument("--k", type=int, default=10)
    parser.add_argument("--fusion-weight", type=float, default=None)
    args = parser.parse_args()

    corpus = load_corpus(args.corpus)
    records = load_qa(args.qa)
    qrels = Qrels.from_qa_records(records)
    passage_index = build_passage_index(corpus)

    config = FusionConfig(doc_weight=args.fusion_weight or 0.0)
    document_index = (build_document_index(corpus)
                      if args.fusion_weight is not None else None)

    runs = {}
    for rec in records:
        window = config.passage_cutoff if document_index else args.k
        ranked = search(passage_index, rec.question, window,
                        query_id=rec.question_id)
        if document_index is not None:
            docs = search(document_index, rec.question,
                          len(corpus.documents), query_id=rec.question_id)
            ranked = fuse(normalize(ranked, config.passage_cutoff),
                          normalize(docs, len(corpus.documents)), config)
        runs[rec.question_id] = RankedList(rec.question_id,
                                           ranked.candidates[:args.k])

    report = evaluate(runs, qrels, args.k)
    label = (f"fused (w={args.fusion_weight})"
             if document_index else "passage-only")
    print(f"BM25 {label}: recall@{args.k}={100 * report.recall:.1f} "
          f"MAP@{args.k}={100 * report.map:.1f} "
          f"({len(report.per_query)} queries)")


if __name__ == "__main__":
    main()
