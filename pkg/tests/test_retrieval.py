import json
import math
import random
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rirag.corpus import load_corpus
from rirag.errors import InputValidationError, ParseError
from rirag.retrieval import (Bm25Params, FusionConfig, RankedList,
                             ScoredCandidate, build_document_index,
                             build_passage_index, fuse, ingest_run_file,
                             normalize, search, tokenize, write_run_file)


def brute_force_bm25(texts, query, k1, b, token_limit):
    """Independent direct-formula BM25 over all candidates."""
    docs = [re.findall(r"[0-9a-z]+", t.lower())[:token_limit] for t in texts]
    n = len(docs)
    avgdl = sum(len(d) for d in docs) / n
    q = re.findall(r"[0-9a-z]+", query.lower())[:token_limit]
    scores = []
    for d in docs:
        score = 0.0
        for term in q:
            tf = d.count(term)
            if tf == 0:
                continue
            df = sum(1 for other in docs if term in other)
            idf = math.log(1 + (n - df + 0.5) / (df + 0.5))
            score += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(d) / avgdl))
        scores.append(score)
    return scores


def make_corpus(tmp_path, texts, docs_per=1):
    records = [
        {"ID": f"id{i}", "DocumentID": i // docs_per, "PassageID": f"p{i}",
         "Passage": t}
        for i, t in enumerate(texts)
    ]
    path = tmp_path / "c.json"
    path.write_text(json.dumps(records))
    return load_corpus(path)


VOCAB = ["fund", "manager", "must", "report", "transaction", "suspicious",
         "client", "register", "audit", "comply", "regulator", "capital"]


def random_texts(rng, n):
    return [" ".join(rng.choices(VOCAB, k=rng.randint(3, 30)))
            for _ in range(n)]


class TestBm25Params:
    def test_defaults(self):
        p = Bm25Params()
        assert p.k1 == 0.9 and p.b == 0.4 and p.token_limit == 512

    @pytest.mark.parametrize("kwargs", [
        {"k1": 0.0}, {"k1": -1.0}, {"b": -0.1}, {"b": 1.1}, {"token_limit": 0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(InputValidationError):
            Bm25Params(**kwargs)


class TestIndexing:
    def test_tiny_passage_stats(self, tmp_path):
        corpus = make_corpus(tmp_path, ["Fund Manager must comply"])
        idx = build_passage_index(corpus)
        assert len(idx.postings) == 4
        assert idx.avgdl == 4

    def test_truncation_to_token_limit(self, tmp_path):
        long_text = " ".join(f"tok{i}" for i in range(600))
        corpus = make_corpus(tmp_path, [long_text])
        idx = build_passage_index(corpus, Bm25Params(token_limit=512))
        assert idx.lengths == [512]

    def test_identical_passages_identical_stats(self, tmp_path):
        corpus = make_corpus(tmp_path, ["alpha beta beta", "alpha beta beta"])
        idx = build_passage_index(corpus)
        assert idx.term_stats(0) == idx.term_stats(1)
        assert idx.lengths[0] == idx.lengths[1]

    def test_document_index_units(self, tmp_path):
        corpus = make_corpus(tmp_path, ["a b", "c d", "e f", "g h"],
                             docs_per=2)
        idx = build_document_index(corpus)
        assert idx.n_units == 2

    def test_single_passage_document_scores_equal(self, tmp_path):
        # one passage per document, no truncation effect
        corpus = make_corpus(tmp_path,
                             ["fund manager report", "audit client capital"])
        pidx = build_passage_index(corpus)
        didx = build_document_index(corpus)
        pr = search(pidx, "fund manager", 10)
        dr = search(didx, "fund manager", 10)
        assert len(pr.candidates) == len(dr.candidates) == 1
        assert pr.candidates[0].raw_score == pytest.approx(
            dr.candidates[0].raw_score)

    def test_empty_corpus_rejected(self, tmp_path):
        corpus = make_corpus(tmp_path, [])
        with pytest.raises(InputValidationError):
            build_passage_index(corpus)
        with pytest.raises(InputValidationError):
            build_document_index(corpus)


class TestSearch:
    def test_no_indexed_term_empty(self, tmp_path):
        corpus = make_corpus(tmp_path, ["fund manager", "audit report"])
        idx = build_passage_index(corpus)
        assert search(idx, "zzz unknown", 5).candidates == ()

    def test_exact_passage_ranked_first(self, tmp_path):
        rng = random.Random(7)
        texts = random_texts(rng, 9) + ["unique singular phrase entirely"]
        corpus = make_corpus(tmp_path, texts)
        idx = build_passage_index(corpus)
        top = search(idx, "unique singular phrase entirely", 10)
        assert top.candidates[0].candidate_id == "9#p9"

    def test_k_larger_than_corpus(self, tmp_path):
        corpus = make_corpus(tmp_path, ["fund report", "fund audit"])
        idx = build_passage_index(corpus)
        assert len(search(idx, "fund", 100).candidates) == 2

    def test_matches_brute_force_on_random_corpora(self, tmp_path):
        rng = random.Random(42)
        texts = random_texts(rng, 50)
        corpus = make_corpus(tmp_path, texts)
        params = Bm25Params()
        idx = build_passage_index(corpus, params)
        for _ in range(100):
            query = " ".join(rng.choices(VOCAB, k=rng.randint(1, 5)))
            expected = brute_force_bm25(texts, query, params.k1, params.b,
                                        params.token_limit)
            got = {c.candidate_id: c.raw_score
                   for c in search(idx, query, 50).candidates}
            for i, s in enumerate(expected):
                cid = f"{i}#p{i}"
                if s > 0:
                    assert got[cid] == pytest.approx(s, abs=1e-9)
                else:
                    assert cid not in got

    def test_tie_break_by_candidate_id(self, tmp_path):
        corpus = make_corpus(tmp_path, ["same text here", "same text here"])
        idx = build_passage_index(corpus)
        ids = [c.candidate_id for c in search(idx, "same text", 5).candidates]
        assert ids == sorted(ids)


class TestNormalize:
    def make(self, scores):
        return RankedList.from_scores("q", [
            ScoredCandidate(f"1#p{i}", s) for i, s in enumerate(scores)])

    def test_endpoints(self):
        out = normalize(self.make([10.0, 5.0, 0.0]), 3)
        assert [c.normalized_score for c in out.candidates] == [1.0, 0.5, 0.0]

    def test_all_equal_degenerate(self):
        out = normalize(self.make([2.0, 2.0, 2.0]), 3)
        assert all(c.normalized_score == 1.0 for c in out.candidates)

    def test_window_drops_tail(self):
        out = normalize(self.make([3.0, 2.0, 1.0, 0.0]), 2)
        assert len(out.candidates) == 2
        assert [c.normalized_score for c in out.candidates] == [1.0, 0.0]

    def test_empty_rejected(self):
        with pytest.raises(InputValidationError):
            normalize(RankedList("q", ()), 10)

    @given(st.lists(st.integers(min_value=-1000, max_value=1000), min_size=2,
                    max_size=30, unique=True),
           st.integers(min_value=1, max_value=100),
           st.integers(min_value=-1000, max_value=1000))
    @settings(max_examples=100)
    def test_positive_affine_invariance(self, scores, a, c):
        scores = [float(s) for s in scores]
        base = normalize(self.make(scores), len(scores))
        transformed = normalize(self.make([a * s + c for s in scores]),
                                len(scores))
        for x, y in zip(base.candidates, transformed.candidates):
            assert abs(x.normalized_score - y.normalized_score) < 1e-12

    def test_max_one_min_zero_random(self):
        rng = random.Random(3)
        for _ in range(100):
            scores = [rng.uniform(-5, 5) for _ in range(rng.randint(2, 20))]
            if max(scores) == min(scores):
                continue
            out = normalize(self.make(scores), len(scores))
            normed = [c.normalized_score for c in out.candidates]
            assert max(normed) == pytest.approx(1.0, abs=1e-12)
            assert min(normed) == pytest.approx(0.0, abs=1e-12)


def random_normalized_rankings(rng, n_passages=20, n_docs=5):
    p_cands = [ScoredCandidate(f"{rng.randrange(n_docs)}#p{i}",
                               rng.random()) for i in range(n_passages)]
    p_ranked = normalize(RankedList.from_scores("q", p_cands), n_passages)
    d_cands = [ScoredCandidate(str(d), rng.random()) for d in range(n_docs)]
    d_ranked = normalize(RankedList.from_scores("q", d_cands), n_docs)
    return p_ranked, d_ranked


class TestFuse:
    def test_weight_zero_preserves_passage_order(self):
        rng = random.Random(11)
        for _ in range(100):
            p_ranked, d_ranked = random_normalized_rankings(rng)
            fused = fuse(p_ranked, d_ranked, FusionConfig(doc_weight=0.0))
            assert [c.candidate_id for c in fused.candidates] == \
                   [c.candidate_id for c in p_ranked.candidates]

    def test_weight_one_single_document(self):
        p = normalize(RankedList.from_scores("q", [
            ScoredCandidate("3#a", 0.9), ScoredCandidate("3#b", 0.5),
            ScoredCandidate("3#c", 0.1)]), 3)
        d = normalize(RankedList.from_scores("q", [
            ScoredCandidate("3", 4.0), ScoredCandidate("4", 1.0)]), 2)
        fused = fuse(p, d, FusionConfig(doc_weight=1.0))
        assert all(c.normalized_score == 1.0 for c in fused.candidates)

    def test_spot_check_arithmetic(self):
        p = RankedList("q", (ScoredCandidate("1#a", 2.0, 0.8),))
        d = RankedList("q", (ScoredCandidate("1", 3.0, 0.5),))
        fused = fuse(p, d, FusionConfig(doc_weight=0.1))
        assert fused.candidates[0].normalized_score == pytest.approx(0.77)

    def test_missing_document_scores_zero(self):
        p = RankedList("q", (ScoredCandidate("9#a", 2.0, 0.8),))
        d = RankedList("q", (ScoredCandidate("1", 3.0, 1.0),))
        fused = fuse(p, d, FusionConfig(doc_weight=0.5))
        assert fused.candidates[0].normalized_score == pytest.approx(0.4)

    def test_unnormalized_input_rejected(self):
        p = RankedList("q", (ScoredCandidate("1#a", 2.0),))
        d = RankedList("q", (ScoredCandidate("1", 3.0, 1.0),))
        with pytest.raises(InputValidationError):
            fuse(p, d)

    def test_passage_without_document_part_rejected(self):
        p = RankedList("q", (ScoredCandidate("nodoc", 2.0, 0.8),))
        d = RankedList("q", (ScoredCandidate("1", 3.0, 1.0),))
        with pytest.raises(InputValidationError):
            fuse(p, d)

    def test_output_in_unit_interval(self):
        rng = random.Random(5)
        for _ in range(50):
            p_ranked, d_ranked = random_normalized_rankings(rng)
            fused = fuse(p_ranked, d_ranked, FusionConfig(doc_weight=rng.random()))
            for c in fused.candidates:
                assert 0.0 <= c.normalized_score <= 1.0


class TestRunFiles:
    def test_two_line_file(self, tmp_path):
        path = tmp_path / "run.txt"
        path.write_text("q1 1#a 1 2.5 tag\nq1 1#b 2 1.5 tag\n")
        runs = ingest_run_file(path)
        assert len(runs["q1"].candidates) == 2

    def test_shuffled_scores_resorted(self, tmp_path, caplog):
        path = tmp_path / "run.txt"
        path.write_text("q1 1#a 1 1.5 tag\nq1 1#b 2 2.5 tag\n")
        runs = ingest_run_file(path)
        assert runs["q1"].candidates[0].candidate_id == "1#b"

    def test_duplicate_candidate_rejected(self, tmp_path):
        path = tmp_path / "run.txt"
        path.write_text("q1 1#a 1 2.5 tag\nq1 1#a 2 1.5 tag\n")
        with pytest.raises(ParseError, match="duplicate"):
            ingest_run_file(path)

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "run.txt"
        path.write_text("q1 1#a 1 2.5 tag\nbroken line\n")
        with pytest.raises(ParseError, match=":2:"):
            ingest_run_file(path)

    def test_round_trip_preserves_order_and_scores(self, tmp_path):
        rng = random.Random(2)
        cands = [ScoredCandidate(f"{i}#p{i}", rng.random())
                 for i in range(10)]
        runs = {"qA": RankedList.from_scores("qA", cands)}
        path = tmp_path / "run.txt"
        write_run_file(path, runs)
        back = ingest_run_file(path)
        assert [(c.candidate_id, c.raw_score)
                for c in back["qA"].candidates] == \
               [(c.candidate_id, c.raw_score)
                for c in runs["qA"].candidates]
        # writing again is byte-identical
        path2 = tmp_path / "run2.txt"
        write_run_file(path2, back)
        assert path.read_bytes() == path2.read_bytes()


class TestTokenize:
    def test_lowercase_non_alnum_split(self):
        assert tokenize("Fund-Manager's Rule 5.13!") == \
            ["fund", "manager", "s", "rule", "5", "13"]

    def test_limit(self):
        assert tokenize("a b c d", limit=2) == ["a", "b"]
