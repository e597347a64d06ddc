"""Cross-model keyword overlap, thematic grouping, and side-by-side reports."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import yaml

from .errors import GroupingError
from .ingest import Corpus, CorpusStats
from .lexstats import ComparisonRow, TokenizerConfig, sentence_ngrams, tokenize
from .evalmetrics import METRIC_FIELDS, METRIC_LABELS, ModelMetrics
from .topics import TopicAssignment, TopicKeywords


@dataclass(frozen=True)
class KeywordPool:
    """Occurrence mass of every candidate term (unigram + bigram) in one
    model's corpus; the denominator for overlap percentages."""

    model_id: str
    counts: Mapping[str, int]

    @property
    def total_pool(self) -> int:
        return sum(self.counts.values())


def build_keyword_pool(model_id: str, corpus: Corpus,
                       tok: TokenizerConfig | None = None) -> KeywordPool:
    tok = tok or TokenizerConfig()
    counts: Counter[str] = Counter()
    for sentence in corpus.sentences:
        tokens = tokenize(sentence.text, tok)
        counts.update(sentence_ngrams(tokens, 1))
        counts.update(sentence_ngrams(tokens, 2))
    return KeywordPool(model_id=model_id, counts=dict(counts))


@dataclass(frozen=True)
class OverlapReport:
    model_a: str
    model_b: str
    shared_terms: tuple[str, ...]
    pct_a: float
    pct_b: float
    pool_a: int
    pool_b: int

    @property
    def shared_count(self) -> int:
        return len(self.shared_terms)


def keyword_overlap(
    keywords_a: Sequence[TopicKeywords],
    keywords_b: Sequence[TopicKeywords],
    pool_a: KeywordPool,
    pool_b: KeywordPool,
) -> OverlapReport:
    """Terms appearing in both models' keyword lists, weighted by each
    model's pool: the shared terms' occurrence mass over the total pool
    mass, per model, as a percentage."""
    if not any(kw.terms for kw in keywords_a) or not any(kw.terms for kw in keywords_b):
        raise ValueError("keyword lists must be non-empty")
    terms_a = {term for kw in keywords_a for term, _ in kw.terms}
    terms_b = {term for kw in keywords_b for term, _ in kw.terms}
    shared = tuple(sorted(terms_a & terms_b))

    def pct(pool: KeywordPool) -> float:
        total = pool.total_pool
        if total == 0:
            return 0.0
        return 100.0 * sum(pool.counts.get(t, 0) for t in shared) / total

    return OverlapReport(
        model_a=pool_a.model_id, model_b=pool_b.model_id,
        shared_terms=shared, pct_a=pct(pool_a), pct_b=pct(pool_b),
        pool_a=pool_a.total_pool, pool_b=pool_b.total_pool,
    )


@dataclass(frozen=True)
class ThematicGroup:
    name: str
    labels: tuple[str, ...]
    note: str = ""


@dataclass(frozen=True)
class ThematicGroupingConfig:
    groups: tuple[ThematicGroup, ...]

    def __post_init__(self):
        claimed: dict[str, str] = {}
        for group in self.groups:
            for label in group.labels:
                if label in claimed:
                    raise GroupingError(
                        f"label {label!r} claimed by both "
                        f"{claimed[label]!r} and {group.name!r}"
                    )
                claimed[label] = group.name


def load_grouping_config(path: str | Path) -> ThematicGroupingConfig:
    """Read a grouping config: a list of {name, labels, note} mappings."""
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict) or "groups" not in data:
        raise GroupingError(f"{path}: expected a top-level 'groups' list")
    groups = []
    for i, item in enumerate(data["groups"]):
        if not isinstance(item, dict) or "name" not in item or "labels" not in item:
            raise GroupingError(f"{path}: group {i} needs 'name' and 'labels'")
        groups.append(ThematicGroup(
            name=str(item["name"]),
            labels=tuple(str(lbl) for lbl in item["labels"]),
            note=str(item.get("note", "")),
        ))
    return ThematicGroupingConfig(groups=tuple(groups))


@dataclass(frozen=True)
class GroupRow:
    group: str
    topic_ids: tuple[int, ...]
    labels: tuple[str, ...]
    note: str
    sentence_count: int


@dataclass(frozen=True)
class GroupedTable:
    rows: tuple[GroupRow, ...]
    ungrouped: GroupRow


def apply_thematic_grouping(
    labeled_topics: Mapping[int, str],
    config: ThematicGroupingConfig,
    assignment: TopicAssignment,
) -> GroupedTable:
    """Aggregate human-labeled topics into thematic groups with summed
    sentence counts. Topics whose label no group claims, and topics with no
    label at all, land in the ungrouped bucket, so grouping conserves the
    non-noise sentence total."""
    sizes = assignment.sizes()
    label_to_group = {
        label: group.name for group in config.groups for label in group.labels
    }
    members: dict[str, list[int]] = {g.name: [] for g in config.groups}
    ungrouped: list[int] = []
    for topic_id in sorted(set(sizes) | set(labeled_topics)):
        label = labeled_topics.get(topic_id)
        group = label_to_group.get(label) if label is not None else None
        if group is None:
            ungrouped.append(topic_id)
        else:
            members[group].append(topic_id)

    def row(name: str, topic_ids: list[int], note: str) -> GroupRow:
        return GroupRow(
            group=name,
            topic_ids=tuple(topic_ids),
            labels=tuple(labeled_topics.get(t, "") for t in topic_ids),
            note=note,
            sentence_count=sum(sizes.get(t, 0) for t in topic_ids),
        )

    rows = tuple(row(g.name, members[g.name], g.note) for g in config.groups)
    return GroupedTable(rows=rows, ungrouped=row("ungrouped", ungrouped, ""))


@dataclass(frozen=True)
class ReportInputs:
    """Everything the side-by-side report can embed; missing pieces render
    as explicit gaps rather than failing the whole report."""

    label_a: str
    label_b: str
    stats_a: CorpusStats | None = None
    stats_b: CorpusStats | None = None
    comparison: Sequence[ComparisonRow] | None = None
    metrics_a: ModelMetrics | None = None
    metrics_b: ModelMetrics | None = None
    overlap: OverlapReport | None = None


def side_by_side_report(inputs: ReportInputs) -> str:
    """Render the four-section comparison report as markdown."""
    a, b = inputs.label_a, inputs.label_b
    lines = [f"# Corpus comparison: {a} vs {b}", ""]

    lines.append("## Corpus statistics")
    lines.append("")
    if inputs.stats_a is None and inputs.stats_b is None:
        lines.append("_unavailable_")
    else:
        lines.append("| corpus | total_sents | avg_len | min_len | max_len | <5 wds | >25 wds |")
        lines.append("|---|---|---|---|---|---|---|")
        for label, st in ((a, inputs.stats_a), (b, inputs.stats_b)):
            if st is None:
                lines.append(f"| {label} | _unavailable_ | | | | | |")
            else:
                lines.append(
                    f"| {label} | {st.total_sentences} | {st.avg_len:.2f} | "
                    f"{st.min_len} | {st.max_len} | {st.under_5} | {st.over_25} |"
                )
    lines.append("")

    lines.append("## Top shared terms")
    lines.append("")
    if not inputs.comparison:
        lines.append("_unavailable_")
    else:
        lines.append(f"| word | count_{a} | pct_{a} | count_{b} | pct_{b} | diff |")
        lines.append("|---|---|---|---|---|---|")
        for r in inputs.comparison:
            lines.append(
                f"| {r.word} | {r.count_a} | {r.percentile_a:.2f} | "
                f"{r.count_b} | {r.percentile_b:.2f} | {r.diff:.2f} |"
            )
    lines.append("")

    lines.append("## Model metrics")
    lines.append("")
    if inputs.metrics_a is None and inputs.metrics_b is None:
        lines.append("_unavailable_")
    else:
        lines.append(f"| metric | {a} | {b} |")
        lines.append("|---|---|---|")
        for name in METRIC_FIELDS:
            cells = []
            for m in (inputs.metrics_a, inputs.metrics_b):
                cells.append("_unavailable_" if m is None
                             else f"{float(getattr(m, name)):.2f}")
            lines.append(f"| {METRIC_LABELS[name]} | {cells[0]} | {cells[1]} |")
    lines.append("")

    lines.append("## Keyword overlap")
    lines.append("")
    if inputs.overlap is None:
        lines.append("_unavailable_")
    else:
        ov = inputs.overlap
        lines.append(f"- shared keywords: {ov.shared_count}")
        lines.append(f"- share of {ov.model_a} pool ({ov.pool_a} terms): {ov.pct_a:.2f}%")
        lines.append(f"- share of {ov.model_b} pool ({ov.pool_b} terms): {ov.pct_b:.2f}%")
        if ov.shared_terms:
            lines.append(f"- terms: {', '.join(ov.shared_terms)}")
    lines.append("")
    return "\n".join(lines)


def write_overlap_csv(report: OverlapReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model_a", "model_b", "shared_count",
                         "pct_a", "pct_b", "pool_a", "pool_b", "shared_terms"])
        writer.writerow([
            report.model_a, report.model_b, report.shared_count,
            f"{report.pct_a:.2f}", f"{report.pct_b:.2f}",
            report.pool_a, report.pool_b, "|".join(report.shared_terms),
        ])


def write_grouping_csv(table: GroupedTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "topic_ids", "labels", "sentence_count", "note"])
        for row in list(table.rows) + [table.ungrouped]:
            writer.writerow([
                row.group,
                "|".join(str(t) for t in row.topic_ids),
                "|".join(row.labels),
                row.sentence_count,
                row.note,
            ])
