import os
from pathlib import Path

import pytest

import impact_rerank as ir

DATA = Path(os.environ.get("IMPACT_TEST_DATA", Path(__file__).resolve().parents[2] / "tests" / "data"))


@pytest.fixture(scope="module")
def vocab():
    return ir.Vocabulary.load(DATA / "vocab.txt")


@pytest.fixture(scope="module")
def built(tmp_path_factory, vocab):
    work = tmp_path_factory.mktemp("pipeline")
    idx = work / "idx"
    ir.index(DATA / "vocab.txt", DATA / "collection.tsv", idx)
    loss = ir.train(DATA / "vocab.txt", DATA / "collection.tsv", DATA / "train.tsv", work / "model.bin",
                    steps=30, batch_size=2, hard_negatives=1, dim=4)
    written = ir.weights(DATA / "vocab.txt", DATA / "collection.tsv", work / "model.bin",
                         work / "weights.jsonl", index_dir=idx)
    return work, idx, loss, written


def test_vocabulary_roundtrip(vocab):
    assert len(vocab) == 99
    ids = vocab.tokenize("Manhattan project")
    assert ids and all(0 <= i < len(vocab) for i in ids)
    assert vocab.find(vocab.token(ids[0])) == ids[0]
    assert vocab.find("definitely-not-a-token") is None


def test_encode_query_drops_stopwords(vocab):
    stop = ir.default_stopwords(vocab)
    terms = ir.encode_query("the the project project", vocab, stop)
    assert all(t not in stop for t, _ in terms)
    assert dict(terms)[vocab.find("project")] == 2


def test_expand_passage_appends_top_new_tokens():
    stop = ir.StopwordSet([3], 5)
    assert ir.expand_passage([0, 1], [0.0, 0.9, 0.8, 0.7, 0.1], 4, stop) == [2, 4]
    assert ir.expand_passage([0, 1], [0.0, 0.9, 0.8, 0.7, 0.1], 0, stop) == []


def test_expand_passage_rejects_bad_length():
    with pytest.raises(ir.ImpactError):
        ir.expand_passage([0], [1.0, 2.0], 1, ir.StopwordSet([], 5))


def test_pipeline_end_to_end(built, vocab):
    work, idx, loss, written = built
    assert len(loss) == 30
    assert written == 6
    pipeline = ir.Pipeline.load(DATA / "vocab.txt", idx)
    assert pipeline.num_passages == 6

    first = pipeline.retrieve("capital of france", depth=10)
    assert first[0][0] == "p2"
    scores = [s for _, s in first]
    assert scores == sorted(scores, reverse=True)

    reranked = pipeline.rerank("capital of france", depth=10, cutoff=10)
    assert sorted(p for p, _ in reranked) == sorted(p for p, _ in first)


def test_run_and_eval(built, tmp_path):
    work, idx, _, _ = built
    run = tmp_path / "run.txt"
    missing = ir.rerank_run(DATA / "vocab.txt", idx, DATA / "queries.tsv", run, cutoff=5, depth=5)
    assert missing == 0
    metrics = ir.eval_run(run, DATA / "qrels.tsv")
    assert set(metrics) == {"mrr@10", "ndcg@10", "map"}
    assert 0.0 < metrics["mrr@10"]["mean"] <= 1.0
    assert metrics["mrr@10"]["queries"] == 3


def test_bench_report(built):
    _, idx, _, _ = built
    report = ir.bench(DATA / "vocab.txt", idx, DATA / "queries.tsv", qrels=DATA / "qrels.tsv", sample=3)
    assert report["queries"] == 3
    assert report["sweep_csv"].splitlines()[0] == "k,total_ms,mrr_at_10"
    assert len(report["sweep_csv"].splitlines()) == 9


def test_evaluate_from_python_structures():
    run = {"q1": [("a", 1, 3.0), ("b", 2, 2.0)], "q2": [("c", 1, 1.0), ("d", 2, 0.5)]}
    qrels = {"q1": {"b": 1}, "q2": {"c": 1}}
    out = ir.evaluate(run, qrels, k=10)
    assert out["mrr@10"]["mean"] == pytest.approx(0.75)


def test_errors_surface_as_impact_error(tmp_path):
    with pytest.raises(ir.ImpactError):
        ir.Vocabulary.load(tmp_path / "missing.txt")
