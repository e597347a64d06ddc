"""Topic assignment, class-based TF-IDF keyword extraction, and 2-D plot data.

The built-in clusterer is a deterministic spherical k-means with a cosine
noise threshold: points whose similarity to their centroid falls below the
threshold are relabeled as noise (topic -1), mirroring density pipelines
that decline to assign every sentence.
"""

from __future__ import annotations

import csv
import math
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ClusterError, CorpusFormatError
from .embeddings import EmbeddingMatrix, normalize_rows
from .ingest import Corpus
from .lexstats import TokenizerConfig, sentence_ngrams, tokenize

NOISE = -1


@dataclass(frozen=True)
class ClusterParams:
    method: str = "kmeans_noise"
    k_clusters: int = 10
    noise_threshold: float = 0.0
    seed: int = 0
    max_iters: int = 100

    def __post_init__(self):
        if self.k_clusters < 2:
            raise ClusterError("k_clusters must be at least 2")
        if not -1.0 <= self.noise_threshold <= 1.0:
            raise ClusterError("noise_threshold must lie in [-1, 1]")
        if self.method != "kmeans_noise":
            raise ClusterError(f"unknown clustering method: {self.method!r}")


@dataclass(frozen=True)
class TopicAssignment:
    """Sentence id -> topic id, with -1 reserved for noise."""

    topics: Mapping[str, int]

    def sizes(self, include_noise: bool = False) -> dict[int, int]:
        counts = Counter(self.topics.values())
        if not include_noise:
            counts.pop(NOISE, None)
        return dict(counts)

    def canonicalized(self) -> "TopicAssignment":
        """Renumber non-noise topics 0..T-1 by descending size (ties by
        ascending original id); noise stays -1."""
        sizes = self.sizes()
        order = sorted(sizes, key=lambda t: (-sizes[t], t))
        remap = {old: new for new, old in enumerate(order)}
        remap[NOISE] = NOISE
        return TopicAssignment({sid: remap[t] for sid, t in self.topics.items()})


@dataclass(frozen=True)
class TopicKeywords:
    topic_id: int
    terms: tuple[tuple[str, float], ...]


class DegenerateMatrixWarning(UserWarning):
    pass


class EmptyClassWarning(UserWarning):
    pass


def _canonical_order(rows: np.ndarray) -> np.ndarray:
    """Row order by vector value (lexicographic over coordinates), so that
    seeding depends on the data, not on how the rows were stored."""
    return np.lexsort(rows.T[::-1])


def _kmeans_pp_centers(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded k-means++ over cosine distance on unit rows.

    ``x`` must already be in canonical order: the RNG draws positions in
    that ordering, which makes the chosen center *vectors* invariant to the
    caller's row permutation.
    """
    n = x.shape[0]
    centers = [x[rng.integers(n)]]
    d2 = (1.0 - x @ centers[0]) ** 2
    while len(centers) < k:
        total = float(d2.sum())
        if total <= 0.0:
            break  # every remaining point duplicates a chosen center
        probs = np.cumsum(d2 / total)
        pick = int(np.searchsorted(probs, rng.random(), side="right"))
        pick = min(pick, n - 1)
        centers.append(x[pick])
        d2 = np.minimum(d2, (1.0 - x @ centers[-1]) ** 2)
    return np.vstack(centers)


def cluster_embeddings(matrix: EmbeddingMatrix, params: ClusterParams) -> TopicAssignment:
    """Deterministic spherical k-means, then noise-threshold reassignment.

    After convergence every sentence whose cosine similarity to its
    centroid is below ``noise_threshold`` moves to topic -1; surviving
    clusters are renumbered 0..T-1 by descending size.
    """
    if params.k_clusters > matrix.n:
        raise ClusterError(
            f"k_clusters={params.k_clusters} exceeds {matrix.n} points"
        )
    matrix = normalize_rows(matrix)
    x = matrix.rows.astype(np.float64)

    if np.all(x == x[0]):
        warnings.warn("all embedding rows identical; emitting a single topic",
                      DegenerateMatrixWarning)
        return TopicAssignment({sid: 0 for sid in matrix.index})

    # The whole loop runs over canonically ordered rows: every float
    # reduction then sees the same operand order however the caller stored
    # the matrix, so permuting input rows permutes the labels exactly.
    rng = np.random.default_rng(params.seed)
    order = _canonical_order(x)
    xc = x[order]
    centers = _kmeans_pp_centers(xc, params.k_clusters, rng)

    assign = np.full(matrix.n, -1, dtype=np.int64)
    for _ in range(params.max_iters):
        sims = xc @ centers.T
        new_assign = np.argmax(sims, axis=1)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(centers.shape[0]):
            members = xc[assign == c]
            if members.shape[0] == 0:
                continue  # empty cluster keeps its previous centroid
            mean = members.mean(axis=0)
            norm = np.linalg.norm(mean)
            if norm > 0:
                centers[c] = mean / norm

    sims_at = (xc @ centers.T)[np.arange(matrix.n), assign]
    labels_c = np.where(sims_at < params.noise_threshold, NOISE, assign)
    labels = np.empty(matrix.n, dtype=np.int64)
    labels[order] = labels_c

    raw = TopicAssignment({
        sid: int(label) for sid, label in zip(matrix.index, labels)
    })
    return raw.canonicalized()


def _class_term_counts(
    corpus: Corpus,
    assignment: TopicAssignment,
    tok: TokenizerConfig,
) -> tuple[dict[int, Counter[str]], dict[int, int]]:
    """Per-topic term counts (unigrams + bigrams) and unigram token totals.

    Bigrams are formed per sentence before pooling into the class, so they
    never straddle a sentence join.
    """
    missing = [s.sentence_id for s in corpus.sentences
               if s.sentence_id not in assignment.topics]
    if missing:
        raise CorpusFormatError(
            f"assignment does not cover sentence {missing[0]!r}"
        )
    term_counts: dict[int, Counter[str]] = defaultdict(Counter)
    token_totals: dict[int, int] = defaultdict(int)
    for sentence in corpus.sentences:
        topic = assignment.topics[sentence.sentence_id]
        if topic == NOISE:
            continue
        tokens = tokenize(sentence.text, tok)
        term_counts[topic].update(sentence_ngrams(tokens, 1))
        term_counts[topic].update(sentence_ngrams(tokens, 2))
        token_totals[topic] += len(tokens)
    return term_counts, token_totals


def ctfidf_keywords(
    corpus: Corpus,
    assignment: TopicAssignment,
    tok: TokenizerConfig | None = None,
    k: int = 10,
) -> list[TopicKeywords]:
    """Class-based TF-IDF keywords for every non-noise topic.

    Each topic's sentences pool into one class document. A term scores
    ``tf * log(1 + mean_class_tokens / total_term_count)``: frequent inside
    the class, damped by how common it is across all classes. The top k
    terms per class are returned over the union of unigrams and bigrams.
    """
    tok = tok or TokenizerConfig()
    term_counts, token_totals = _class_term_counts(corpus, assignment, tok)
    topics = sorted(term_counts)
    if not topics:
        return []
    mean_tokens = sum(token_totals[t] for t in topics) / len(topics)
    global_counts: Counter[str] = Counter()
    for t in topics:
        global_counts.update(term_counts[t])

    results = []
    for t in topics:
        counts = term_counts[t]
        if not counts:
            warnings.warn(f"topic {t} has no tokens after tokenization",
                          EmptyClassWarning)
            results.append(TopicKeywords(topic_id=t, terms=()))
            continue
        scored = [
            (term, tf * math.log(1.0 + mean_tokens / global_counts[term]))
            for term, tf in counts.items()
        ]
        scored.sort(key=lambda item: (-item[1], item[0]))
        results.append(TopicKeywords(topic_id=t, terms=tuple(scored[:k])))
    return results


def top_topics(assignment: TopicAssignment, k: int = 15) -> list[tuple[int, int]]:
    """Largest k non-noise topics as (topic_id, size); ties by ascending id."""
    sizes = assignment.sizes()
    ranked = sorted(sizes.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]


def project_2d(
    matrix: EmbeddingMatrix,
    method: str = "pca",
    coords: np.ndarray | str | Path | None = None,
) -> np.ndarray:
    """2-D plot coordinates: the two principal components, or coordinates
    ingested from a file / array (e.g. produced by an external reducer).

    PCA uses a deterministic sign convention (first nonzero loading of each
    component is positive), so repeated runs emit identical plot data.
    """
    if method == "pca":
        if matrix.d < 2:
            raise ValueError("PCA projection needs dimension >= 2")
        x = matrix.rows.astype(np.float64)
        centered = x - x.mean(axis=0)
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        components = vt[:2].copy()
        for row in components:
            nonzero = np.flatnonzero(row)
            if nonzero.size and row[nonzero[0]] < 0:
                row *= -1.0
        return centered @ components.T
    if method == "ingest_file":
        if coords is None:
            raise ValueError("ingest_file projection requires coords")
        if isinstance(coords, (str, Path)):
            coords = _read_coords_csv(coords, matrix.index)
        coords = np.asarray(coords, dtype=np.float64)
        if coords.shape != (matrix.n, 2):
            raise ValueError(
                f"coordinate shape {coords.shape} does not match ({matrix.n}, 2)"
            )
        return coords
    raise ValueError(f"unknown projection method: {method!r}")


def _read_coords_csv(path: str | Path, index: Sequence[str]) -> np.ndarray:
    by_id: dict[str, tuple[float, float]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            by_id[row["sentence_id"]] = (float(row["x"]), float(row["y"]))
    missing = [sid for sid in index if sid not in by_id]
    if missing:
        raise ValueError(f"no coordinates for sentence {missing[0]!r}")
    if len(by_id) != len(index):
        raise ValueError(
            f"{len(by_id)} coordinate rows but {len(index)} sentence ids"
        )
    return np.array([by_id[sid] for sid in index], dtype=np.float64)


def write_assignment_csv(assignment: TopicAssignment, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sentence_id", "topic_id"])
        for sid, topic in assignment.topics.items():
            writer.writerow([sid, topic])


def read_assignment_csv(path: str | Path) -> TopicAssignment:
    topics: dict[str, int] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                topic = int(row["topic_id"])
            except (KeyError, TypeError, ValueError) as exc:
                raise CorpusFormatError(f"{path}:{lineno}: bad assignment row") from exc
            if topic < NOISE:
                raise CorpusFormatError(
                    f"{path}:{lineno}: topic id {topic} below {NOISE}"
                )
            sid = row["sentence_id"]
            if sid in topics:
                raise CorpusFormatError(f"{path}:{lineno}: duplicate sentence {sid!r}")
            topics[sid] = topic
    return TopicAssignment(topics)


def write_keywords_csv(keywords: Sequence[TopicKeywords], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["topic_id", "rank", "term", "score"])
        for kw in keywords:
            for rank, (term, score) in enumerate(kw.terms, start=1):
                writer.writerow([kw.topic_id, rank, term, f"{score:.6f}"])


def read_keywords_csv(path: str | Path) -> list[TopicKeywords]:
    by_topic: dict[int, list[tuple[int, str, float]]] = defaultdict(list)
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            by_topic[int(row["topic_id"])].append(
                (int(row["rank"]), row["term"], float(row["score"]))
            )
    results = []
    for topic in sorted(by_topic):
        ranked = sorted(by_topic[topic])
        results.append(TopicKeywords(
            topic_id=topic,
            terms=tuple((term, score) for _, term, score in ranked),
        ))
    return results


def write_plot_csv(
    path: str | Path,
    index: Sequence[str],
    coords: np.ndarray,
    assignment: TopicAssignment,
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sentence_id", "x", "y", "topic_id"])
        for sid, (x, y) in zip(index, coords):
            writer.writerow([sid, repr(float(x)), repr(float(y)),
                             assignment.topics[sid]])
