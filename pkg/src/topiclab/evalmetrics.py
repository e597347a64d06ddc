"""The five model-quality metrics, sweep filtering/summaries, and ranking.

Metric directions: gini is lower-is-better; topic-20 size, PUV, and ngram
value are higher-is-better; appearance percentage is judged by proximity to
the sweep mean (the error-size band) rather than by direction.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import MetricError
from .lexstats import FrequencyTable
from .topics import NOISE, TopicAssignment, TopicKeywords

METRIC_FIELDS = ("gini", "appearance_pct", "topic20_size", "puv", "ngram_value")

# Rendered metric names; PUV carries its formula in the label so the
# keyword-set reading is never mistaken for a sentence-pair statistic.
METRIC_LABELS = {
    "gini": "gini",
    "appearance_pct": "appearance_pct",
    "topic20_size": "topic20_size",
    "puv": "puv_keyword_uniqueness",
    "ngram_value": "ngram_value",
}

LOWER_IS_BETTER = frozenset({"gini"})
BAND_JUDGED = frozenset({"appearance_pct"})


@dataclass(frozen=True)
class ModelMetrics:
    gini: float
    appearance_pct: float
    topic20_size: int
    puv: float
    ngram_value: float

    def __post_init__(self):
        for name, lo, hi in (("gini", 0.0, 1.0), ("appearance_pct", 0.0, 100.0),
                             ("puv", 0.0, 1.0), ("ngram_value", 0.0, 1.0)):
            value = getattr(self, name)
            if not math.isfinite(value) or not lo <= value <= hi:
                raise MetricError(f"{name}={value!r} outside [{lo}, {hi}]")
        if self.topic20_size < 0:
            raise MetricError(f"topic20_size={self.topic20_size!r} negative")


@dataclass(frozen=True)
class RunRecord:
    run_id: str
    params: Mapping[str, object]
    metrics: ModelMetrics


@dataclass(frozen=True)
class MetricStats:
    mean: float
    std: float
    min: float
    max: float


@dataclass(frozen=True)
class SweepSummary:
    stats: Mapping[str, MetricStats]
    run_count: int


def _topic_sizes(assignment: TopicAssignment) -> list[int]:
    sizes = assignment.sizes()
    if not sizes:
        raise MetricError("assignment has no non-noise topics")
    return sorted(sizes.values())


def gini_from_sizes(sizes: Sequence[int]) -> float:
    """Gini coefficient of a size multiset, via the sorted-rank identity
    (the quadratic pairwise-difference sum serves as the test oracle)."""
    if not sizes:
        raise MetricError("no sizes")
    ordered = sorted(sizes)
    t = len(ordered)
    total = sum(ordered)
    weighted = sum((2 * i - t - 1) * s for i, s in enumerate(ordered, start=1))
    return weighted / (t * total)


def gini_score(assignment: TopicAssignment) -> float:
    """Gini coefficient of the non-noise topic sizes: 0 for perfectly even
    topics, approaching 1 when a single topic dominates."""
    return gini_from_sizes(_topic_sizes(assignment))


def appearance_percentage(assignment: TopicAssignment) -> float:
    """Percentage of sentences assigned to a non-noise topic."""
    if not assignment.topics:
        raise MetricError("empty assignment")
    assigned = sum(1 for t in assignment.topics.values() if t != NOISE)
    return 100.0 * assigned / len(assignment.topics)


def noise_percentage(assignment: TopicAssignment) -> float:
    """Complement of the appearance percentage (exactly, by construction)."""
    return 100.0 - appearance_percentage(assignment)


def topic_rank_size(assignment: TopicAssignment, rank: int = 20,
                    mode: str = "single_rank") -> int:
    """Size of the rank-th largest topic, or the cumulative size of the top
    ``rank`` topics. ``single_rank`` returns 0 when fewer topics exist."""
    if rank < 1:
        raise MetricError("rank must be >= 1")
    sizes = sorted(assignment.sizes().values(), reverse=True)
    if mode == "single_rank":
        return sizes[rank - 1] if rank <= len(sizes) else 0
    if mode == "cumulative":
        return sum(sizes[:rank])
    raise MetricError(f"unknown topic_rank_size mode: {mode!r}")


def _jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


def puv(keywords: Sequence[TopicKeywords], k: int = 10) -> float:
    """Pairwise uniqueness of the topics' top-k keyword sets: one minus the
    mean Jaccard similarity over all topic pairs. 1.0 means no topic shares
    a characteristic term with any other."""
    if len(keywords) < 2:
        raise MetricError("PUV requires at least 2 topics")
    sets = [frozenset(term for term, _ in kw.terms[:k]) for kw in keywords]
    total = 0.0
    pairs = 0
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            total += _jaccard(sets[i], sets[j])
            pairs += 1
    return 1.0 - total / pairs


def ngram_value(keywords: Sequence[TopicKeywords],
                bigram_table: FrequencyTable, top_m: int = 500) -> float:
    """Fraction of topic keywords (counted per topic) found among the
    corpus's ``top_m`` most frequent bigrams. A unigram keyword matches when
    it is a component word of any top bigram; a bigram keyword matches when
    it is itself in the top set."""
    if bigram_table.n != 2:
        raise MetricError("ngram_value needs a bigram table")
    all_terms = [term for kw in keywords for term, _ in kw.terms]
    if not all_terms:
        raise MetricError("no keywords to score")
    ranked = sorted(bigram_table.entries,
                    key=lambda t: (-bigram_table.entries[t], t))[:top_m]
    top_bigrams = frozenset(ranked)
    component_words = frozenset(w for bg in ranked for w in bg.split(" "))
    hits = sum(
        1 for term in all_terms
        if (term in top_bigrams if " " in term else term in component_words)
    )
    return hits / len(all_terms)


def compute_metrics(
    assignment: TopicAssignment,
    keywords: Sequence[TopicKeywords],
    bigram_table: FrequencyTable,
    rank: int = 20,
    rank_mode: str = "single_rank",
    puv_k: int = 10,
    ngram_top_m: int = 500,
) -> ModelMetrics:
    return ModelMetrics(
        gini=gini_score(assignment),
        appearance_pct=appearance_percentage(assignment),
        topic20_size=topic_rank_size(assignment, rank, rank_mode),
        puv=puv(keywords, puv_k),
        ngram_value=ngram_value(keywords, bigram_table, ngram_top_m),
    )


@dataclass(frozen=True)
class ErrorSizeResult:
    kept: tuple[RunRecord, ...]
    rejected: tuple[RunRecord, ...]
    mean: float
    lower: float
    upper: float


def error_size_filter(runs: Sequence[RunRecord], relative: bool = True,
                      band: float = 0.10) -> ErrorSizeResult:
    """Partition runs by whether their appearance percentage falls within
    the band around the sweep mean (inclusive bounds). The default band is
    relative (mean times 1 +/- band); ``relative=False`` switches to an
    absolute percentage-point band."""
    if len(runs) < 2:
        raise MetricError("error_size_filter needs at least 2 runs")
    values = [r.metrics.appearance_pct for r in runs]
    mean = sum(values) / len(values)
    if relative:
        lower, upper = mean * (1.0 - band), mean * (1.0 + band)
    else:
        lower, upper = mean - 100.0 * band, mean + 100.0 * band
    kept = tuple(r for r in runs if lower <= r.metrics.appearance_pct <= upper)
    rejected = tuple(r for r in runs if not lower <= r.metrics.appearance_pct <= upper)
    return ErrorSizeResult(kept=kept, rejected=rejected,
                           mean=mean, lower=lower, upper=upper)


def sweep_summary(runs: Sequence[RunRecord]) -> SweepSummary:
    """Per-metric mean, population standard deviation, min, and max."""
    if not runs:
        raise MetricError("sweep_summary needs at least 1 run")
    stats = {}
    for name in METRIC_FIELDS:
        values = [float(getattr(r.metrics, name)) for r in runs]
        mean = sum(values) / len(values)
        var = sum((v - mean) ** 2 for v in values) / len(values)
        stats[name] = MetricStats(mean=mean, std=var ** 0.5,
                                  min=min(values), max=max(values))
    return SweepSummary(stats=stats, run_count=len(runs))


@dataclass(frozen=True)
class MetricVerdict:
    metric: str
    candidate: float
    mean: float
    verdict: str


def compare_to_sweep(candidate: ModelMetrics, summary: SweepSummary) -> list[MetricVerdict]:
    """Direction-aware per-metric verdicts for a candidate against a sweep.

    Directional metrics report better / worse / "at mean"; the appearance
    percentage reports whether it sits inside the error-size band.
    """
    verdicts = []
    for name in METRIC_FIELDS:
        value = float(getattr(candidate, name))
        mean = summary.stats[name].mean
        if value == mean:
            verdict = "at mean"
        elif name in BAND_JUDGED:
            inside = mean * 0.9 <= value <= mean * 1.1
            verdict = "within band" if inside else "outside band"
        elif (value < mean) == (name in LOWER_IS_BETTER):
            verdict = "better"
        else:
            verdict = "worse"
        verdicts.append(MetricVerdict(metric=name, candidate=value,
                                      mean=mean, verdict=verdict))
    return verdicts


def rank_runs(runs: Sequence[RunRecord]) -> list[RunRecord]:
    """Order runs by composite z-score (higher is better): the topic-20,
    ngram, and PUV z-scores added, the gini z-score subtracted. A metric
    with zero spread contributes nothing. Ties fall back to run_id."""
    if len(runs) < 2:
        return list(runs)
    summary = sweep_summary(runs)

    def z(name: str, record: RunRecord) -> float:
        st = summary.stats[name]
        if st.std == 0.0:
            return 0.0
        return (float(getattr(record.metrics, name)) - st.mean) / st.std

    def composite(record: RunRecord) -> float:
        return (z("topic20_size", record) + z("ngram_value", record)
                + z("puv", record) - z("gini", record))

    return sorted(runs, key=lambda r: (-composite(r), r.run_id))


def write_runs_jsonl(runs: Sequence[RunRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for run in runs:
            fh.write(json.dumps({
                "run_id": run.run_id,
                "params": dict(run.params),
                "metrics": asdict(run.metrics),
            }, sort_keys=True) + "\n")


def read_runs_jsonl(path: str | Path) -> list[RunRecord]:
    runs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                metrics = ModelMetrics(**{
                    name: rec["metrics"][name] for name in METRIC_FIELDS
                })
                runs.append(RunRecord(run_id=rec["run_id"],
                                      params=rec.get("params", {}),
                                      metrics=metrics))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise MetricError(f"{path}:{lineno}: bad run record ({exc})") from exc
    return runs


def write_summary_csv(
    path: str | Path,
    summary: SweepSummary,
    candidate: ModelMetrics | None = None,
) -> None:
    """Summary table with one row per metric; candidate and verdict columns
    stay empty when no candidate is supplied."""
    verdicts = {v.metric: v for v in compare_to_sweep(candidate, summary)} if candidate else {}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "candidate", "mean", "std", "min", "max", "verdict"])
        for name in METRIC_FIELDS:
            st = summary.stats[name]
            verdict = verdicts.get(name)
            writer.writerow([
                METRIC_LABELS[name],
                _fmt(name, verdict.candidate) if verdict else "",
                _fmt(name, st.mean), _fmt(name, st.std),
                _fmt(name, st.min), _fmt(name, st.max),
                verdict.verdict if verdict else "",
            ])


def _fmt(metric: str, value: float) -> str:
    # Counts render as integers when integral; everything else 2 decimals.
    if metric == "topic20_size" and float(value).is_integer():
        return str(int(value))
    return f"{value:.2f}"
