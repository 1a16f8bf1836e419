"""Acceptance gate: one test per criterion, one printed line per criterion.

Run with `pytest tests/test_acceptance.py -v -s` to see the PASS lines.
"""

import math
import random
import time
from pathlib import Path

import pytest

from mcrx import (
    RawDocument,
    activate,
    build_corpus,
    collect,
    emit,
    rank,
    read_corpus_jsonl,
    reconstruct,
    segment,
)
from mcrx.cli import main
from mcrx.seqdemo import default_actions, execute, learn_demonstration, solve
from mcrx.scl import ExitCriteria

from oracles import bfs_min_actions, corpus_weights, dense_activation, dense_rank, random_corpus, toks

DATA = Path(__file__).parent / "data"
CORPUS100 = DATA / "corpus100.jsonl"


def report(criterion, message):
    print(f"[acceptance] criterion {criterion}: PASS ({message})")


@pytest.fixture(scope="module")
def bundled():
    docs = read_corpus_jsonl(str(CORPUS100))
    kb, skipped = build_corpus(docs)
    assert not skipped
    return docs, kb


def topical_corpus(seed=0):
    """6 topics x 10 docs, 50 tokens each from 30 topic words + 5 stopwords."""
    rng = random.Random(seed)
    stopwords = ["the", "of", "and", "to", "in"]
    docs, topic_of = [], {}
    for topic in range(6):
        pool = [f"topic{topic}word{i}" for i in range(30)] + stopwords
        for position in range(10):
            doc_id = f"t{topic}d{position}"
            docs.append(
                RawDocument(doc_id, " ".join(rng.choice(pool) for _ in range(50)))
            )
            topic_of[doc_id] = topic
    return docs, topic_of


def test_c1_oracle_equivalence():
    started = time.perf_counter()
    rng = random.Random(20260809)
    corpora = 0
    while corpora < 100:
        docs = random_corpus(rng, max_docs=50, max_vocab=200, max_len=100)
        kb, skipped = build_corpus([RawDocument(i, t) for i, t in docs.items()])
        bags, weights = corpus_weights(docs)
        if kb.article_count < 2:
            continue
        corpora += 1
        labels = sorted(bags)
        queries = [
            docs[labels[0]],
            docs[labels[-1]],
            docs[labels[0]] + " unseenword " + docs[labels[-1]],
        ]
        for query in queries:
            tokens = toks(query)
            expected_map = dense_activation(bags, weights, tokens)
            got_map = {
                kb.nodes[a].label: v for a, v in activate(kb, query).items()
            }
            assert set(got_map) == set(expected_map)
            for label, value in expected_map.items():
                assert got_map[label] == pytest.approx(value, abs=1e-9)
            expected_rank = dense_rank(bags, weights, tokens, k=100)[:10]
            got_rank = rank(kb, query, k=100, n=10, exclude_self=False)
            assert [r.label for r in got_rank] == [row[0] for row in expected_rank]
            for result, row in zip(got_rank, expected_rank):
                assert result.percent == pytest.approx(row[1], abs=1e-9)
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    report(1, f"{corpora} corpora x 3 queries match the dense oracle within 1e-9 in {elapsed:.1f}s")


def test_c2_self_similarity(tmp_path, bundled, capsys):
    docs, kb = bundled
    index = tmp_path / "bundle.mcrx"
    from mcrx import save_index

    save_index(kb, str(index))
    checked = 0
    for doc in docs:
        query_file = tmp_path / "query.txt"
        query_file.write_text(doc.body, "utf-8")
        code = main(
            [
                "query",
                "--index",
                str(index),
                "--doc",
                str(query_file),
                "--include-self",
                "--tsv",
            ]
        )
        assert code == 0
        top = capsys.readouterr().out.splitlines()[0].split("\t")
        assert top[1] == doc.id
        assert abs(float(top[3]) - 100.0) <= 1e-9
        checked += 1
    # same property on the topical corpus, through the library
    topic_docs, _ = topical_corpus()
    topic_kb, _ = build_corpus(topic_docs)
    for doc in topic_docs:
        results = rank(topic_kb, doc.body, k=100, n=1, exclude_self=False)
        assert results[0].label == doc.id
        assert abs(results[0].percent - 100.0) <= 1e-9
        checked += 1
    report(2, f"{checked} own-text queries rank themselves first at exactly 100.0")


def test_c3_asymmetry():
    kb, _ = build_corpus([RawDocument("d1", "a"), RawDocument("d2", "a b")])
    forward = activate(kb, kb.article_id("d1"))[kb.article_id("d2")]
    backward = activate(kb, kb.article_id("d2"))[kb.article_id("d1")]
    assert forward == pytest.approx(0.69315, abs=1e-5)
    assert backward == pytest.approx(0.34657, abs=1e-5)
    assert forward == pytest.approx(math.log(2.0), abs=1e-9)
    assert backward == pytest.approx(math.log(2.0) / 2.0, abs=1e-9)
    report(3, f"directional activations {forward:.5f} vs {backward:.5f}")


def test_c4_zero_overlap_nullity():
    kb, _ = build_corpus(
        [RawDocument("q", "alpha beta gamma"), RawDocument("far", "delta epsilon")]
    )
    from mcrx import QueryScorer

    scorer = QueryScorer(kb, "alpha beta gamma")
    result = scorer.score(kb.article_id("far"))
    assert result.forward == 0.0
    assert result.raw == 0.0
    assert result.percent == 0.0
    assert "far" not in [r.label for r in rank(kb, "alpha beta gamma", exclude_self=False)]
    report(4, "disjoint-vocabulary candidate scores exactly 0")


def test_c5_replication_round_trip(bundled):
    docs, kb = bundled
    assert len(docs) == 100
    exact = 0
    for doc in docs:
        if reconstruct(kb, kb.article_id(doc.id)) == segment(doc.body):
            exact += 1
    assert exact == len(docs)
    report(5, f"reconstruct == segment for {exact}/{len(docs)} bundled documents")


def test_c6_topical_retrieval():
    docs, topic_of = topical_corpus(seed=0)
    kb, skipped = build_corpus(docs)
    assert not skipped
    hits = 0
    for doc in docs:
        top = rank(kb, kb.article_id(doc.id), k=100, n=1, exclude_self=True)[0]
        if topic_of[top.label] == topic_of[doc.id]:
            hits += 1
    assert hits >= 0.95 * len(docs)
    report(6, f"top-1 neighbor shares the query topic for {hits}/{len(docs)} queries")


def test_c7_determinism(tmp_path, bundled):
    corpus = DATA / "corpus100.jsonl"
    first = tmp_path / "first.mcrx"
    second = tmp_path / "second.mcrx"
    assert main(["build", "--corpus", str(corpus), "--index", str(first)]) == 0
    assert main(["build", "--corpus", str(corpus), "--index", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()

    docs, kb = bundled
    query = docs[17].body
    once = rank(kb, query, k=100, n=10, exclude_self=False)
    twice = rank(kb, query, k=100, n=10, exclude_self=False)
    assert [(r.label, r.percent, r.reverse, r.forward) for r in once] == [
        (r.label, r.percent, r.reverse, r.forward) for r in twice
    ]
    emission = emit(kb, query)
    maps = [collect(kb, emission, {}, workers=w) for w in (1, 2, 4, 8)]
    assert all(m == maps[0] for m in maps[1:])  # bit-identical across splits
    report(7, "byte-identical rebuilds; bit-identical queries across runs and 1/2/4/8-way splits")


def test_c8_scl_seqdemo():
    started = time.perf_counter()
    # the two-action base learns one primitive and one composite from the demo
    from mcrx import ActionKB

    akb = ActionKB()
    akb.add_primitive("U", (0, 1))
    akb.add_primitive("D", (0, -1))
    before = len(akb.known_ids())
    learned = learn_demonstration(akb, [(0, 0), (0, 1), (0, 2), (-1, 2)])
    assert learned.new_primitives == ["L"]
    assert learned.composite_created
    assert len(akb.known_ids()) == before + 2

    # every target within Manhattan distance 7 is reached on "threshold"
    reached = 0
    for dx in range(-7, 8):
        for dy in range(-7, 8):
            if abs(dx) + abs(dy) > 7 or (dx, dy) == (0, 0):
                continue
            akb_fresh = default_actions()
            result = solve(akb_fresh, (0, 0), (dx, dy), ExitCriteria(max_iterations=10000))
            assert result.report.exit_reason == "threshold"
            assert execute(akb_fresh, result.sequence, (0, 0)) == (dx, dy)
            reached += 1

    # 200 randomized instances against the BFS oracle
    rng = random.Random(3)
    effects = [(0, 1), (0, -1), (-1, 0), (1, 0)]
    for _ in range(200):
        start = (rng.randint(-9, 9), rng.randint(-9, 9))
        target = (start[0] + rng.randint(-7, 7), start[1] + rng.randint(-7, 7))
        oracle = bfs_min_actions(effects, start, target, max_depth=15)
        assert oracle is not None
        akb_fresh = default_actions()
        result = solve(akb_fresh, start, target, ExitCriteria(max_iterations=10000))
        assert result.report.exit_reason == "threshold"
        assert result.report.iterations <= 10000
        assert execute(akb_fresh, result.sequence, start) == target
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0
    report(8, f"{reached} exhaustive + 200 random instances solved exactly in {elapsed:.1f}s")


def test_c9_performance(tmp_path):
    rng = random.Random(2024)
    vocabulary = [f"word{i:04d}" for i in range(5000)]
    docs = []
    for index in range(1000):
        tokens = rng.choices(vocabulary, k=200)
        parts = []
        for position, token in enumerate(tokens):
            parts.append(token)
            if position % 12 == 11:
                parts.append(".")
            if position % 97 == 96:
                parts.append("\n\n")
        docs.append(RawDocument(f"syn{index:04d}", " ".join(parts)))

    from mcrx import save_index

    started = time.perf_counter()
    kb, skipped = build_corpus(docs)
    save_index(kb, str(tmp_path / "synthetic.mcrx"))
    build_seconds = time.perf_counter() - started
    assert not skipped
    assert build_seconds < 10.0

    query = docs[500].body
    rank(kb, query, k=100, n=10, exclude_self=False)  # warm anything lazy
    started = time.perf_counter()
    results = rank(kb, query, k=100, n=10, exclude_self=False)
    query_seconds = time.perf_counter() - started
    assert query_seconds < 0.100
    assert results[0].label == "syn0500"
    report(
        9,
        f"1000-document build in {build_seconds:.2f}s, query in {query_seconds * 1000:.1f}ms",
    )
