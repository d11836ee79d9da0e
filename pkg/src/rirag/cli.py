"""Single entry point exposing every pipeline stage as a subcommand.

Every command accepts --config (JSON file; flags take precedence) and prints
a machine-readable JSON summary as its final output line. Exit codes:
0 success, 2 usage error, 3 input validation, 4 backend transport,
5 internal invariant.
"""
from __future__ import annotations

import functools
import json
import os
import sys

import click

from . import answerflow, eval_retrieval, qgen, repass, retrieval, validation
from .corpus import find_dangling, load_corpus, load_qa
from .errors import (FixtureMissError, InputValidationError,
                     InternalInvariantError, ParseError, RiragError,
                     TransportError)
from .llm import CannedLlmClient, EchoLlmClient, HttpLlmClient, LlmConfig
from .nli import BackendConfig, NliGateway

EXIT_INPUT = 3
EXIT_TRANSPORT = 4
EXIT_INTERNAL = 5


def _fail(code: int, category: str, exc: Exception):
    click.echo(json.dumps({"status": "error", "category": category,
                           "message": str(exc)}))
    sys.exit(code)


def _summarized(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            summary = fn(*args, **kwargs)
            summary.setdefault("status", "ok")
            click.echo(json.dumps(summary))
        except click.ClickException:
            raise
        except (ParseError, InputValidationError) as exc:
            _fail(EXIT_INPUT, getattr(exc, "category", "input-validation"), exc)
        except (TransportError, FixtureMissError) as exc:
            _fail(EXIT_TRANSPORT, "backend-transport", exc)
        except RiragError as exc:
            _fail(EXIT_INTERNAL, "internal-invariant", exc)
    return wrapper


def _load_config(path):
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _opt(flag_value, config, key, default):
    """Flag beats config file beats default."""
    if flag_value is not None:
        return flag_value
    if key in config:
        return config[key]
    return default


def _gateway(backend, fixtures, nli_url, config) -> NliGateway:
    backend = _opt(backend, config, "backend", "heuristic")
    fixtures = _opt(fixtures, config, "fixtures", None)
    nli_url = _opt(nli_url, config, "nli_url",
                   os.environ.get("RIRAG_NLI_URL"))
    return NliGateway(BackendConfig(kind=backend, endpoint=nli_url,
                                    fixture_path=fixtures))


def _llm_client(llm, llm_url, config):
    llm = _opt(llm, config, "llm", "http")
    if llm == "echo":
        return EchoLlmClient()
    if llm == "canned":
        return CannedLlmClient(config.get("canned", {}),
                               config.get("canned_default", ""))
    llm_url = _opt(llm_url, config, "llm_url",
                   os.environ.get("RIRAG_LLM_URL"))
    return HttpLlmClient(LlmConfig(endpoint=llm_url,
                                   api_key=os.environ.get("RIRAG_LLM_KEY")))


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)


@click.group()
def main():
    """Regulatory passage retrieval, answer generation, and answer scoring."""


@main.command("ingest")
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True), help="Corpus JSON file.")
@click.option("--qa", "qa_path", type=click.Path(exists=True),
              help="QA JSON file to validate against the corpus.")
@click.option("--config", type=click.Path(exists=True), help="Config JSON.")
@_summarized
def cmd_ingest(corpus_path, qa_path, config):
    """Load and validate the corpus (and optionally a QA file)."""
    cfg = _load_config(config)
    corpus = load_corpus(corpus_path)
    summary = {"documents": len(corpus.documents), "passages": len(corpus)}
    if qa_path:
        records = load_qa(qa_path, corpus)
        dangling = find_dangling(records, corpus)
        summary["qa_records"] = len(records)
        summary["dangling_gold_refs"] = len(dangling)
    return summary


@main.command("index")
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True))
@click.option("--k1", type=float, default=None, help="BM25 k1 (default 0.9).")
@click.option("--b", type=float, default=None, help="BM25 b (default 0.4).")
@click.option("--token-limit", type=int, default=None,
              help="Per-passage token truncation (default 512).")
@click.option("--config", type=click.Path(exists=True))
@_summarized
def cmd_index(corpus_path, k1, b, token_limit, config):
    """Build the passage and document BM25 indexes and report statistics."""
    cfg = _load_config(config)
    params = retrieval.Bm25Params(
        k1=_opt(k1, cfg, "k1", 0.9),
        b=_opt(b, cfg, "b", 0.4),
        token_limit=_opt(token_limit, cfg, "token_limit", 512))
    corpus = load_corpus(corpus_path)
    pidx = retrieval.build_passage_index(corpus, params)
    didx = retrieval.build_document_index(corpus, params)
    return {"passages": pidx.n_units, "documents": didx.n_units,
            "passage_terms": len(pidx.postings),
            "passage_avgdl": pidx.avgdl, "document_avgdl": didx.avgdl}


@main.command("search")
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True))
@click.option("--query", required=True, help="Query text.")
@click.option("--k", type=int, default=None, help="Results per query (default 10).")
@click.option("--level", type=click.Choice(["passage", "document"]),
              default="passage")
@click.option("--run-out", type=click.Path(), help="Write a run file here.")
@click.option("--config", type=click.Path(exists=True))
@_summarized
def cmd_search(corpus_path, query, k, level, run_out, config):
    """BM25 search over passages or documents."""
    cfg = _load_config(config)
    if not query.strip() or not retrieval.tokenize(query):
        exc = InputValidationError("query is empty after tokenization")
        exc.category = "empty-query"
        raise exc
    k = _opt(k, cfg, "k", 10)
    corpus = load_corpus(corpus_path)
    build = (retrieval.build_passage_index if level == "passage"
             else retrieval.build_document_index)
    ranked = retrieval.search(build(corpus), query, k, query_id="q0")
    if run_out:
        retrieval.write_run_file(run_out, {"q0": ranked})
    return {"k": k, "results": [
        {"candidate_id": c.candidate_id, "score": c.raw_score}
        for c in ranked.candidates]}


@main.command("fuse")
@click.option("--passage-run", required=True, type=click.Path(exists=True))
@click.option("--document-run", required=True, type=click.Path(exists=True))
@click.option("--fusion-weight", type=float, default=None,
              help="Weight on the document side (default 0.1).")
@click.option("--window", type=int, default=None,
              help="Normalization/fusion window (default 100).")
@click.option("--out", required=True, type=click.Path())
@click.option("--config", type=click.Path(exists=True))
@_summarized
def cmd_fuse(passage_run, document_run, fusion_weight, window, out, config):
    """Min-max normalize two run files and fuse them."""
    cfg = _load_config(config)
    fcfg = retrieval.FusionConfig(
        doc_weight=_opt(fusion_weight, cfg, "fusion_weight", 0.1),
        passage_cutoff=_opt(window, cfg, "window", 100))
    p_runs = retrieval.ingest_run_file(passage_run)
    d_runs = retrieval.ingest_run_file(document_run)
    fused = {}
    for qid, ranked in p_runs.items():
        p_norm = retrieval.normalize(ranked, fcfg.passage_cutoff)
        if qid in d_runs:
            d_norm = retrieval.normalize(d_runs[qid],
                                         len(d_runs[qid].candidates))
        else:
            d_norm = retrieval.RankedList(qid, ())
        fused[qid] = retrieval.fuse(p_norm, d_norm, fcfg)
    retrieval.write_run_file(out, fused)
    return {"queries": len(fused), "doc_weight": fcfg.doc_weight,
            "window": fcfg.passage_cutoff, "out": out}


@main.command("eval")
@click.option("--run", "run_path", required=True, type=click.Path(exists=True))
@click.option("--qrels", "qrels_path", required=True,
              type=click.Path(exists=True), help="QA JSON file with gold passages.")
@click.option("--k", type=int, default=None, help="Cutoff (default 10).")
@click.option("--report-out", type=click.Path())
@click.option("--config", type=click.Path(exists=True))
@_summarized
def cmd_eval(run_path, qrels_path, k, report_out, config):
    """Recall@k and MAP@k for a run file against gold assignments."""
    cfg = _load_config(config)
    k = _opt(k, cfg, "k", 10)
    runs = retrieval.ingest_run_file(run_path)
    qrels = eval_retrieval.Qrels.from_qa_records(load_qa(qrels_path))
    report = eval_retrieval.evaluate(runs, qrels, k)
    click.echo(report.table(), err=True)
    if report_out:
        _write_json(report_out, report.to_dict())
    return {"k": k, "recall": report.recall, "map": report.map,
            "queries": len(report.per_query)}


@main.command("validate")
@click.option("--qa", "qa_path", required=True, type=click.Path(exists=True))
@click.option("--backend", type=click.Choice(["remote", "fixture", "heuristic"]),
              default=None)
@click.option("--fixtures", type=click.Path(exists=True))
@click.option("--nli-url", help="Remote NLI endpoint (env RIRAG_NLI_URL).")
@click.option("--out", required=True, type=click.Path(),
              help="Filtered QA file.")
@click.option("--verdicts-out", type=click.Path(),
              help="JSON-lines verdict log.")
@click.option("--config", type=click.Path(exists=True))
@_summarized
def cmd_validate(qa_path, backend, fixtures, nli_url, out, verdicts_out, config):
    """NLI-validate question-passage pairs and drop failing ones."""
    cfg = _load_config(config)
    gateway = _gateway(backend, fixtures, nli_url, cfg)
    records = load_qa(qa_path)
    kept, verdicts = validation.filter_dataset(records, gateway,
                                               log_path=verdicts_out)
    qgen.write_qa_file(out, kept)
    eliminated = sum(1 for v in verdicts if v.decision == validation.ELIMINATE)
    return {"records_in": len(records), "records_kept": len(kept),
            "verdicts": len(verdicts), "eliminated_passages": eliminated,
            "backend": gateway.backend_name}


@main.command("repass")
@click.option("--answers", "answers_path", required=True,
              type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", type=click.Path(exists=True))
@click.option("--backend", type=click.Choice(["remote", "fixture", "heuristic"]),
              default=None)
@click.option("--fixtures", type=click.Path(exists=True))
@click.option("--nli-url")
@click.option("--threshold", type=float, default=None,
              help="Obligation-coverage entailment threshold (default 0.7).")
@click.option("--reports-out", type=click.Path(),
              help="JSON-lines per-answer reports.")
@click.option("--config", type=click.Path(exists=True))
@_summarized
def cmd_repass(answers_path, corpus_path, backend, fixtures, nli_url,
               threshold, reports_out, config):
    """Score an answer-record file and report aggregate means."""
    cfg = _load_config(config)
    gateway = _gateway(backend, fixtures, nli_url, cfg)
    corpus = load_corpus(corpus_path) if corpus_path else None
    threshold = _opt(threshold, cfg, "threshold", repass.COVERAGE_THRESHOLD)
    reports = repass.score_answer_file(answers_path, gateway, corpus, threshold)
    if reports_out:
        with open(reports_out, "w", encoding="utf-8") as fh:
            for r in reports:
                fh.write(json.dumps(r.to_dict()) + "\n")
    return repass.aggregate(reports)


@main.command("answer")
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True))
@click.option("--qa", "qa_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--k", type=int, default=None)
@click.option("--drop-threshold", type=float, default=None)
@click.option("--min-score", type=float, default=None)
@click.option("--fusion-weight", type=float, default=None)
@click.option("--no-fusion", is_flag=True, default=False)
@click.option("--llm", type=click.Choice(["http", "echo", "canned"]),
              default=None)
@click.option("--llm-url")
@click.option("--jobs", type=int, default=None)
@click.option("--config", type=click.Path(exists=True))
@_summarized
def cmd_answer(corpus_path, qa_path, out, k, drop_threshold, min_score,
               fusion_weight, no_fusion, llm, llm_url, jobs, config):
    """Retrieve, filter, and generate answers for every question."""
    cfg = _load_config(config)
    corpus = load_corpus(corpus_path)
    questions = load_qa(qa_path)
    fusion = None if no_fusion else retrieval.FusionConfig(
        doc_weight=_opt(fusion_weight, cfg, "fusion_weight", 0.1),
        passage_cutoff=_opt(None, cfg, "window", 100))
    pipe_cfg = answerflow.PipelineConfig(
        k=_opt(k, cfg, "k", 10),
        fusion=fusion,
        policy=answerflow.FilterPolicy(
            drop_threshold=_opt(drop_threshold, cfg, "drop_threshold", 0.2),
            min_score=_opt(min_score, cfg, "min_score", 0.7),
            max_passages=_opt(k, cfg, "k", 10)),
        jobs=_opt(jobs, cfg, "jobs", 4))
    pidx = retrieval.build_passage_index(corpus)
    didx = retrieval.build_document_index(corpus) if fusion else None
    client = _llm_client(llm, llm_url, cfg)
    records, errors = answerflow.run_pipeline(questions, pidx, didx, corpus,
                                              client, pipe_cfg)
    answerflow.write_answer_file(out, records)
    return {"questions": len(questions), "answered": len(records),
            "errors": len(errors), "out": out}


@main.command("qgen")
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True))
@click.option("--topics", "topics_path", type=click.Path(exists=True),
              help="Topic map JSON (default: built-in sample).")
@click.option("--mode", type=click.Choice(["single", "multi"]), default="single")
@click.option("--size", type=int, default=None,
              help="Passages per question (default 1).")
@click.option("--count", type=int, default=None,
              help="Subsets sampled per topic group (default 5).")
@click.option("--seed", type=int, default=None, help="RNG seed (default 0).")
@click.option("--whole-word", is_flag=True, default=False,
              help="Match topic keywords as whole words.")
@click.option("--backend", type=click.Choice(["remote", "fixture", "heuristic"]),
              default=None)
@click.option("--fixtures", type=click.Path(exists=True))
@click.option("--nli-url")
@click.option("--llm", type=click.Choice(["http", "echo", "canned"]),
              default=None)
@click.option("--llm-url")
@click.option("--out", required=True, type=click.Path())
@click.option("--config", type=click.Path(exists=True))
@_summarized
def cmd_qgen(corpus_path, topics_path, mode, size, count, seed, whole_word,
             backend, fixtures, nli_url, llm, llm_url, out, config):
    """Generate question-passage records from topic-grouped obligations."""
    cfg = _load_config(config)
    corpus = load_corpus(corpus_path)
    topics = qgen.load_topic_map(topics_path)
    gateway = _gateway(backend, fixtures, nli_url, cfg)
    client = _llm_client(llm, llm_url, cfg)
    size = _opt(size, cfg, "size", 1)
    count = _opt(count, cfg, "count", 5)
    seed = _opt(seed, cfg, "seed", 0)
    groups = qgen.group_by_topic(corpus, topics, gateway, whole_word)
    import random as _random
    rng = _random.Random(seed)
    subsets = []
    for i, group in enumerate(groups):
        if size > len(group.passages):
            continue
        subsets.extend(qgen.sample_subgroups(group, size, count,
                                             seed=seed + i))
    records = qgen.generate_questions(subsets, client, mode, rng=rng)
    qgen.write_qa_file(out, records)
    return {"groups": len(groups), "subsets": len(subsets),
            "questions": len(records), "out": out}


if __name__ == "__main__":
    main()
