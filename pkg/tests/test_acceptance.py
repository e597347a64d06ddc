"""Acceptance suite: one test per criterion, each asserting its stated
tolerance and runtime bound. A PASS/FAIL line per criterion prints in the
terminal summary (see conftest)."""

import math
import random
import time
from collections import Counter

import numpy as np
import pytest

from topiclab import evalmetrics as ev
from topiclab import ingest
from topiclab.cli import main
from topiclab.embeddings import (
    EmbeddingMatrix,
    load_embeddings,
    write_embeddings_binary,
)
from topiclab.errors import EmbeddingFormatError
from topiclab.evalmetrics import (
    MetricStats,
    ModelMetrics,
    RunRecord,
    SweepSummary,
    appearance_percentage,
    compare_to_sweep,
    compute_metrics,
    error_size_filter,
    gini_from_sizes,
    gini_score,
    noise_percentage,
    puv,
    sweep_summary,
)
from topiclab.lexstats import (
    FrequencyTable,
    TokenizerConfig,
    compare_top_k,
    count_ngrams,
    percentile_rank,
)
from topiclab.topics import (
    ClusterParams,
    TopicAssignment,
    TopicKeywords,
    cluster_embeddings,
    ctfidf_keywords,
)

from conftest import DATA_DIR, synthetic_vectors

RAW = TokenizerConfig(stopwords=frozenset(), min_token_chars=1)

# Published top-20 comparison rows:
# word, count_a, pct_a, count_b, pct_b, diff (b - a).
TABLE1 = [
    ("branch", 3058, 99.96, 2631, 100.0, 0.04),
    ("member", 6584, 100.0, 2144, 99.99, -0.01),
    ("community", 155, 96.74, 2081, 99.98, 3.24),
    ("unite", 37, 91.05, 2023, 99.97, 8.92),
    ("report", 3013, 99.96, 1893, 99.96, 0.0),
    ("meeting", 2078, 99.88, 1851, 99.95, 0.07),
    ("campaign", 79, 94.6, 1558, 99.94, 5.34),
    ("leeds", 222, 97.62, 1329, 99.93, 2.31),
    ("support", 630, 99.29, 1159, 99.93, 0.64),
    ("union", 6311, 99.99, 1090, 99.92, -0.07),
    ("work", 6032, 99.99, 995, 99.91, -0.08),
    ("york", 77, 94.51, 810, 99.9, 5.39),
    ("action", 574, 99.14, 769, 99.89, 0.75),
    ("group", 133, 96.37, 765, 99.88, 3.51),
    ("council", 3300, 99.97, 733, 99.87, -0.1),
    ("local", 878, 99.54, 704, 99.86, 0.32),
    ("event", 158, 96.82, 664, 99.85, 3.03),
    ("national", 2021, 99.87, 658, 99.84, -0.03),
    ("people", 1398, 99.75, 620, 99.83, 0.08),
    ("labour", 4484, 99.98, 613, 99.82, -0.16),
]


class Stopwatch:
    def __init__(self, budget):
        self.budget = budget

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.budget, (
                f"runtime {self.elapsed:.2f}s exceeds {self.budget}s budget"
            )


def test_c01_table1_diff_fixture():
    with Stopwatch(1.0):
        entries_a = {word: ca for word, ca, _, _, _, _ in TABLE1}
        entries_b = {word: cb for word, _, _, cb, _, _ in TABLE1}
        pcts_a = {word: pa for word, _, pa, _, _, _ in TABLE1}
        pcts_b = {word: pb for word, _, _, _, pb, _ in TABLE1}
        rows = compare_top_k(
            FrequencyTable("bs", 1, entries_a),
            FrequencyTable("uc", 1, entries_b),
            k=20, percentiles_a=pcts_a, percentiles_b=pcts_b,
        )
        assert [r.word for r in rows] == [w for w, *_ in TABLE1]
        for row, (word, _, _, _, _, diff) in zip(rows, TABLE1):
            assert row.diff == round(diff, 2), word
        by_word = {r.word: r for r in rows}
        assert by_word["unite"].diff == 8.92
        assert by_word["labour"].diff == -0.16


def test_c02_percentile_brute_force_oracle():
    with Stopwatch(5.0):
        rng = random.Random(202)
        for _ in range(50):
            vocab_size = rng.randint(1, 1000)
            # Narrow count range forces plenty of ties.
            entries = {f"w{i}": rng.randint(1, 30) for i in range(vocab_size)}
            table = FrequencyTable("t", 1, entries)
            for word in entries:
                expect = 100.0 * sum(
                    1 for c in entries.values() if c <= entries[word]
                ) / len(entries)
                assert percentile_rank(table, word) == expect


def assignment_of(sizes, noise=0):
    topics = {}
    i = 0
    for topic, size in enumerate(sizes):
        for _ in range(size):
            topics[f"s:{i}"] = topic
            i += 1
    for _ in range(noise):
        topics[f"s:{i}"] = -1
        i += 1
    return TopicAssignment(topics)


def test_c03_gini_properties():
    with Stopwatch(1.0):
        assert gini_score(assignment_of([10, 10, 10, 10])) == pytest.approx(0.0, abs=1e-12)
        # Hand-derived: |100 - 1| * 2 / (2 * 2 * 101) = 198 / 404 = 0.49009900...
        assert gini_score(assignment_of([100, 1])) == pytest.approx(198 / 404, abs=1e-9)
        rng = random.Random(303)
        for _ in range(20):
            sizes = [rng.randint(1, 400) for _ in range(rng.randint(1, 25))]
            base = gini_from_sizes(sizes)
            for k in (2, 10, 1000):
                assert gini_from_sizes([s * k for s in sizes]) == pytest.approx(
                    base, abs=1e-12)


def test_c04_appearance_noise_closure():
    with Stopwatch(1.0):
        assert appearance_percentage(assignment_of([3], noise=1)) == 75.0
        rng = random.Random(404)
        checked = 0
        while checked < 100:
            assigned, noise = rng.randint(0, 60), rng.randint(0, 60)
            if assigned + noise == 0:
                continue
            a = assignment_of([assigned] if assigned else [], noise=noise)
            assert appearance_percentage(a) + noise_percentage(a) == 100.0
            checked += 1


def keywords_of(*term_lists):
    return [
        TopicKeywords(topic_id=i, terms=tuple((t, 1.0) for t in terms))
        for i, terms in enumerate(term_lists)
    ]


def test_c05_puv_boundaries():
    with Stopwatch(1.0):
        assert puv(keywords_of(["a", "b"], ["c", "d"])) == 1.0
        assert puv(keywords_of(["a", "b"], ["a", "b"])) == 0.0
        three = keywords_of(["a", "b", "c"], ["b", "c", "d"], ["x", "y", "z"])
        assert puv(three) == pytest.approx(1 - 0.5 / 3, abs=1e-9)


def dense_ctfidf_oracle(class_texts, k):
    tf, totals = {}, {}
    for topic, texts in class_texts.items():
        counts = Counter()
        total = 0
        for text in texts:
            toks = text.split()
            total += len(toks)
            counts.update(toks)
            counts.update(f"{x} {y}" for x, y in zip(toks, toks[1:]))
        tf[topic], totals[topic] = counts, total
    a_mean = sum(totals.values()) / len(class_texts)
    f = Counter()
    for counts in tf.values():
        f.update(counts)
    out = {}
    for topic, counts in tf.items():
        scored = [(t, n * math.log(1 + a_mean / f[t])) for t, n in counts.items()]
        scored.sort(key=lambda item: (-item[1], item[0]))
        out[topic] = scored[:k]
    return out


def test_c06_ctfidf_brute_force_oracle():
    with Stopwatch(10.0):
        rng = np.random.default_rng(606)
        for _ in range(20):
            n_classes = int(rng.integers(1, 6))
            vocab = [f"w{i}" for i in range(int(rng.integers(4, 25)))]
            texts, labels = [], {}
            budget = int(rng.integers(20, 201))
            i = 0
            while budget > 0:
                length = int(rng.integers(1, min(9, budget + 1)))
                budget -= length
                texts.append(" ".join(rng.choice(vocab, size=length)))
                labels[f"t:{i}"] = int(rng.integers(0, n_classes))
                i += 1
            sentences = [
                ingest.Sentence(f"t:{j}", "t", j, text, len(text.split()))
                for j, text in enumerate(texts)
            ]
            corpus = ingest.corpus_from_sentences("t", sentences)
            got = ctfidf_keywords(corpus, TopicAssignment(labels), RAW, k=10)
            class_texts = {}
            for j, text in enumerate(texts):
                class_texts.setdefault(labels[f"t:{j}"], []).append(text)
            oracle = dense_ctfidf_oracle(class_texts, k=10)
            assert [kw.topic_id for kw in got] == sorted(class_texts)
            for kw in got:
                expect = oracle[kw.topic_id]
                assert [t for t, _ in kw.terms] == [t for t, _ in expect]
                for (_, score), (_, want) in zip(kw.terms, expect):
                    assert score == pytest.approx(want, abs=1e-9)


def metrics_of(gini=0.5, appearance=50.0, topic20=100, puv_=0.9, ngram=0.2):
    return ModelMetrics(gini=gini, appearance_pct=appearance,
                        topic20_size=topic20, puv=puv_, ngram_value=ngram)


def test_c07_sweep_fixture():
    with Stopwatch(1.0):
        rng = random.Random(707)
        runs = [
            RunRecord(
                run_id=f"r{i:02d}", params={},
                metrics=metrics_of(gini=rng.uniform(0.3, 0.8),
                                   appearance=rng.uniform(45, 66),
                                   topic20=rng.randint(100, 1500),
                                   puv_=rng.uniform(0.5, 1.0),
                                   ngram=rng.uniform(0.1, 0.3)),
            )
            for i in range(41)
        ]
        summary = sweep_summary(runs)
        assert summary.run_count == 41
        for name in ev.METRIC_FIELDS:
            values = [float(getattr(r.metrics, name)) for r in runs]
            mean = sum(values) / len(values)
            var = sum((v - mean) ** 2 for v in values) / len(values)
            st = summary.stats[name]
            assert st.mean == pytest.approx(mean, abs=1e-9)
            assert st.std == pytest.approx(math.sqrt(var), abs=1e-9)
            assert st.min == min(values) and st.max == max(values)

        # Published candidate vs published sweep means: better on all three
        # directional metrics the sweep table reports.
        published_candidate = metrics_of(gini=0.38, appearance=54.73,
                                         topic20=984, puv_=0.97, ngram=0.19)
        published_summary = SweepSummary(stats={
            "gini": MetricStats(mean=0.46, std=0.10, min=0.32, max=0.76),
            "appearance_pct": MetricStats(mean=53.44, std=3.81, min=48.56, max=65.38),
            "topic20_size": MetricStats(mean=793.05, std=251.98, min=117.0, max=1421.0),
            "ngram_value": MetricStats(mean=0.18, std=0.01, min=0.15, max=0.20),
            "puv": MetricStats(mean=0.90, std=0.05, min=0.80, max=0.99),
        }, run_count=41)
        verdicts = {v.metric: v.verdict
                    for v in compare_to_sweep(published_candidate, published_summary)}
        assert verdicts["gini"] == "better"
        assert verdicts["topic20_size"] == "better"
        assert verdicts["ngram_value"] == "better"
        assert verdicts["appearance_pct"] == "within band"


def test_c08_error_size_filter():
    with Stopwatch(1.0):
        runs = [
            RunRecord(f"r{i}", {}, metrics_of(appearance=a))
            for i, a in enumerate([45.0, 54.9, 55.1, 45.0])
        ]
        result = error_size_filter(runs)
        assert result.mean == 50.0
        assert {r.run_id for r in result.kept} == {"r0", "r1", "r3"}
        assert {r.run_id for r in result.rejected} == {"r2"}

        rng = random.Random(808)
        for _ in range(100):
            sweep = [
                RunRecord(f"r{i}", {}, metrics_of(appearance=rng.uniform(0, 100)))
                for i in range(rng.randint(2, 30))
            ]
            res = error_size_filter(sweep)
            assert len(res.kept) + len(res.rejected) == len(sweep)
            ids = sorted(r.run_id for r in res.kept + res.rejected)
            assert ids == sorted(r.run_id for r in sweep)
            for r in res.kept:
                assert res.lower <= r.metrics.appearance_pct <= res.upper
            for r in res.rejected:
                assert not res.lower <= r.metrics.appearance_pct <= res.upper


def _synthetic_clustered_matrix(n=100_000, d=32, centers=8, seed=909):
    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(centers, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    which = rng.integers(0, centers, size=n)
    rows = directions[which] + rng.normal(scale=0.25, size=(n, d))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    index = tuple(f"s:{i}" for i in range(n))
    return EmbeddingMatrix(index=index, rows=rows.astype(np.float32),
                           normalized=False)


def _word_corpus(n, seed=910):
    rng = np.random.default_rng(seed)
    vocab = [f"term{i}" for i in range(400)]
    sentences = []
    for i in range(n):
        words = rng.choice(vocab, size=int(rng.integers(4, 9)))
        text = " ".join(words)
        sentences.append(ingest.Sentence(f"s:{i}", "syn", i, text, len(words)))
    return ingest.corpus_from_sentences("syn", sentences)


def test_c09_clustering_determinism_and_scale():
    with Stopwatch(60.0):
        matrix = _synthetic_clustered_matrix()
        params = ClusterParams(k_clusters=8, noise_threshold=0.2, seed=5)

        first = cluster_embeddings(matrix, params)
        second = cluster_embeddings(matrix, params)
        assert first.topics == second.topics

        # Full metric pipeline on the same 100k corpus.
        corpus = _word_corpus(matrix.n)
        keywords = ctfidf_keywords(corpus, first, RAW, k=10)
        bigrams = count_ngrams(corpus, 2, RAW)
        metrics = compute_metrics(first, keywords, bigrams)
        assert 0.0 <= metrics.gini <= 1.0
        assert 0.0 <= metrics.appearance_pct <= 100.0

        # Permuting rows permutes assignments equivalently.
        rng = np.random.default_rng(911)
        perm = rng.permutation(matrix.n)
        permuted = EmbeddingMatrix(
            index=tuple(matrix.index[i] for i in perm),
            rows=matrix.rows[perm],
            normalized=matrix.normalized,
        )
        shuffled = cluster_embeddings(permuted, params)
        assert shuffled.topics == first.topics
        assert (sorted(shuffled.sizes().values())
                == sorted(first.sizes().values()))


def test_c10_end_to_end_determinism(tmp_path):
    corpus_bs = DATA_DIR / "toy_bs.jsonl"
    corpus_uc = DATA_DIR / "toy_uc.jsonl"
    embeddings = {}
    for label, path in (("bs", corpus_bs), ("uc", corpus_uc)):
        corpus = ingest.segment_corpus(ingest.load_corpus(path, label))
        ids = [s.sentence_id for s in corpus.sentences]
        emb_path = tmp_path / f"{label}.cemb"
        write_embeddings_binary(emb_path, synthetic_vectors(ids))
        embeddings[label] = emb_path

    def run_pipeline(out_dir):
        base = [
            "--corpus", str(corpus_bs), "--label", "bs",
            "--corpus", str(corpus_uc), "--label", "uc",
            "--out", str(out_dir),
        ]
        emb = ["--embeddings", str(embeddings["bs"]),
               "--embeddings", str(embeddings["uc"])]
        assert main(["ingest", *base]) == 0
        assert main(["stats", *base]) == 0
        assert main(["freq", *base]) == 0
        assert main(["compare-freq", *base]) == 0
        assert main(["cluster", *base, *emb, "--clusters", "4", "--seed", "11"]) == 0
        assert main(["keywords", *base, *emb, "--clusters", "4", "--seed", "11"]) == 0
        assert main(["eval", *base, *emb, "--clusters", "4", "--seed", "11"]) == 0
        assert main(["compare-models", *base]) == 0
        assert main(["report", *base]) == 0

    out1, out2 = tmp_path / "run1", tmp_path / "run2"
    run_pipeline(out1)
    run_pipeline(out2)

    names1 = sorted(p.name for p in out1.iterdir()
                    if p.suffix in (".csv", ".jsonl", ".md"))
    names2 = sorted(p.name for p in out2.iterdir()
                    if p.suffix in (".csv", ".jsonl", ".md"))
    assert names1 == names2 and len(names1) >= 15
    for name in names1:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_c11_embedding_round_trip_and_errors(tmp_path):
    rng = np.random.default_rng(1111)
    ids = [f"s:{i}" for i in range(256)]
    for trial in range(5):
        rows = rng.normal(size=(256, 24)).astype(np.float32)
        path = tmp_path / f"m{trial}.cemb"
        write_embeddings_binary(path, rows)
        back = load_embeddings(path, ids)
        assert back.rows.tobytes() == rows.tobytes()

    bad_magic = tmp_path / "bad_magic.cemb"
    bad_magic.write_bytes(b"NOPE" + bytes(8))
    with pytest.raises(EmbeddingFormatError, match="magic"):
        load_embeddings(bad_magic, ids[:1])

    truncated = tmp_path / "truncated.cemb"
    write_embeddings_binary(truncated, np.ones((4, 4), dtype=np.float32))
    truncated.write_bytes(truncated.read_bytes()[:-3])
    with pytest.raises(EmbeddingFormatError, match="payload"):
        load_embeddings(truncated, ids[:4])

    short_header = tmp_path / "short.cemb"
    short_header.write_bytes(b"CEMB\x02")
    with pytest.raises(EmbeddingFormatError, match="header"):
        load_embeddings(short_header, ids[:1])

    mismatched = tmp_path / "mismatch.cemb"
    write_embeddings_binary(mismatched, np.ones((3, 2), dtype=np.float32))
    with pytest.raises(EmbeddingFormatError, match="sentence ids"):
        load_embeddings(mismatched, ids[:5])
