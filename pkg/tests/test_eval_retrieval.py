import random

import pytest

from rirag.errors import InputValidationError
from rirag.eval_retrieval import (Qrels, ap_at_k, evaluate, recall_at_k)
from rirag.retrieval import RankedList, ScoredCandidate


def make_ranked(qid, ids):
    # strictly decreasing scores so the given order is preserved
    return RankedList(qid, tuple(
        ScoredCandidate(cid, float(len(ids) - i)) for i, cid in enumerate(ids)))


def oracle_recall(ranked_ids, gold, k):
    return len(set(ranked_ids[:k]) & gold) / len(gold)


def oracle_ap(ranked_ids, gold, k):
    """Brute-force AP: iterate ranks, accumulate precision at gold hits."""
    total = 0.0
    for r in range(1, min(k, len(ranked_ids)) + 1):
        if ranked_ids[r - 1] in gold:
            hits = sum(1 for x in ranked_ids[:r] if x in gold)
            total += hits / r
    return total / len(gold)


class TestRecall:
    def test_half_coverage(self):
        ranked = make_ranked("q", ["a"] + [f"x{i}" for i in range(9)])
        assert recall_at_k(ranked, frozenset({"a", "b"}), 10) == 0.5

    def test_full_coverage(self):
        ranked = make_ranked("q", ["a", "b", "c"])
        assert recall_at_k(ranked, frozenset({"a", "b"}), 10) == 1.0

    def test_k_nonpositive(self):
        with pytest.raises(InputValidationError):
            recall_at_k(make_ranked("q", ["a"]), frozenset({"a"}), 0)


class TestAp:
    def test_single_gold_rank_3(self):
        ranked = make_ranked("q", ["x", "y", "a"])
        assert ap_at_k(ranked, frozenset({"a"}), 10) == pytest.approx(1 / 3)

    def test_gold_at_rank_1(self):
        ranked = make_ranked("q", ["a", "x"])
        assert ap_at_k(ranked, frozenset({"a"}), 10) == 1.0

    def test_two_gold_top_two(self):
        ranked = make_ranked("q", ["a", "b", "x"])
        assert ap_at_k(ranked, frozenset({"a", "b"}), 10) == 1.0


class TestEvaluate:
    def test_three_query_fixture_matches_oracle(self):
        runs = {
            "q1": make_ranked("q1", ["a", "x", "b"]),
            "q2": make_ranked("q2", ["x", "y"]),
            "q3": make_ranked("q3", ["g"]),
        }
        qrels = Qrels({
            "q1": frozenset({"a", "b"}),
            "q2": frozenset({"y"}),
            "q3": frozenset({"g", "h", "i"}),
        })
        report = evaluate(runs, qrels, 10)
        for qid in qrels.gold:
            ids = [c.candidate_id for c in runs[qid].candidates]
            assert report.per_query[qid]["recall"] == pytest.approx(
                oracle_recall(ids, qrels.gold[qid], 10))
            assert report.per_query[qid]["ap"] == pytest.approx(
                oracle_ap(ids, qrels.gold[qid], 10))

    def test_query_missing_from_run_scores_zero(self):
        report = evaluate({}, Qrels({"q": frozenset({"a"})}), 10)
        assert report.recall == 0.0 and report.map == 0.0

    def test_empty_gold_rejected(self):
        with pytest.raises(InputValidationError):
            Qrels({"q": frozenset()})

    def test_200_random_instances_match_oracle(self):
        rng = random.Random(99)
        for _ in range(200):
            corpus = [f"c{i}" for i in range(rng.randint(5, 30))]
            gold = frozenset(rng.sample(corpus, rng.randint(1, 5)))
            ranked_ids = rng.sample(corpus, rng.randint(1, len(corpus)))
            k = rng.randint(1, 15)
            ranked = make_ranked("q", ranked_ids)
            report = evaluate({"q": ranked}, Qrels({"q": gold}), k)
            assert report.recall == oracle_recall(ranked_ids, gold, k)
            assert report.map == oracle_ap(ranked_ids, gold, k)

    def test_moving_gold_up_never_decreases_ap(self):
        rng = random.Random(4)
        for _ in range(100):
            corpus = [f"c{i}" for i in range(15)]
            gold = frozenset(rng.sample(corpus, 3))
            ids = rng.sample(corpus, 15)
            gold_positions = [i for i, x in enumerate(ids) if x in gold and i > 0]
            if not gold_positions:
                continue
            i = rng.choice(gold_positions)
            swapped = list(ids)
            swapped[i - 1], swapped[i] = swapped[i], swapped[i - 1]
            before = oracle_ap(ids, gold, 10)
            after = oracle_ap(swapped, gold, 10)
            assert after >= before - 1e-12

    def test_report_dict_shape(self):
        report = evaluate({"q": make_ranked("q", ["a"])},
                          Qrels({"q": frozenset({"a"})}), 10)
        d = report.to_dict()
        assert set(d) == {"k", "recall", "map", "per_query"}
        assert report.table()
