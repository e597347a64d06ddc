"""Tokenization, n-gram frequency tables, percentile ranks, and the
cross-corpus top-k term comparison."""

from __future__ import annotations

import csv
import warnings
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

from ._stopwords import ENGLISH_STOPWORDS
from .errors import TermNotFoundError
from .ingest import Corpus


@dataclass(frozen=True)
class TokenizerConfig:
    """Filters applied, in order: lowercase, punctuation strip (punctuation
    acts as a token delimiter), stopword removal, minimum token length."""

    lowercase: bool = True
    strip_punctuation: bool = True
    stopwords: frozenset[str] = ENGLISH_STOPWORDS
    min_token_chars: int = 2


def tokenize(text: str, config: TokenizerConfig | None = None) -> list[str]:
    config = config or TokenizerConfig()
    if config.lowercase:
        text = text.lower()
    if config.strip_punctuation:
        text = "".join(c if c.isalnum() or c.isspace() else " " for c in text)
    tokens = text.split()
    if config.stopwords:
        tokens = [t for t in tokens if t not in config.stopwords]
    if config.min_token_chars > 1:
        tokens = [t for t in tokens if len(t) >= config.min_token_chars]
    return tokens


@dataclass(frozen=True)
class FrequencyTable:
    """Term counts for one corpus at a fixed n-gram order (1 or 2)."""

    corpus_label: str
    n: int
    entries: Mapping[str, int]

    @property
    def total_tokens(self) -> int:
        return sum(self.entries.values())

    @property
    def vocab_size(self) -> int:
        return len(self.entries)

    @cached_property
    def _sorted_counts(self) -> list[int]:
        return sorted(self.entries.values())

    def __contains__(self, term: str) -> bool:
        return term in self.entries


def sentence_ngrams(tokens: Sequence[str], n: int) -> list[str]:
    """Unigrams, or bigrams joined with a single space. Bigrams never cross
    the token sequence passed in, so sentence boundaries are respected by
    calling this per sentence."""
    if n == 1:
        return list(tokens)
    if n == 2:
        return [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
    raise ValueError(f"unsupported n-gram order: {n}")


def count_ngrams(corpus: Corpus, n: int, config: TokenizerConfig | None = None) -> FrequencyTable:
    config = config or TokenizerConfig()
    counts: Counter[str] = Counter()
    for sentence in corpus.sentences:
        counts.update(sentence_ngrams(tokenize(sentence.text, config), n))
    return FrequencyTable(corpus_label=corpus.label, n=n, entries=dict(counts))


def percentile_rank(table: FrequencyTable, word: str) -> float:
    """Share of vocabulary types whose count is at or below the word's count,
    on a 0-100 scale. Tied counts share the maximal rank, so the most
    frequent term is always at exactly 100.0."""
    if word not in table.entries:
        raise TermNotFoundError(f"term {word!r} not in {table.corpus_label!r} table")
    at_or_below = bisect_right(table._sorted_counts, table.entries[word])
    return 100.0 * at_or_below / table.vocab_size


@dataclass(frozen=True)
class ComparisonRow:
    """One row of the top-k comparison table. ``diff`` is fixed at rendering
    precision: it is the difference of the two percentiles after each is
    rounded to 2 decimals, matching how published tables are typeset."""

    word: str
    count_a: int
    percentile_a: float
    count_b: int
    percentile_b: float
    diff: float = field(init=False)

    def __post_init__(self):
        diff = round(round(self.percentile_b, 2) - round(self.percentile_a, 2), 2)
        object.__setattr__(self, "diff", diff + 0.0)  # avoid -0.0


class SharedTermShortfall(UserWarning):
    """Fewer shared terms than the requested k."""


def compare_top_k(
    table_a: FrequencyTable,
    table_b: FrequencyTable,
    k: int = 20,
    sort_by: str = "b_count",
    *,
    percentiles_a: Mapping[str, float] | None = None,
    percentiles_b: Mapping[str, float] | None = None,
) -> list[ComparisonRow]:
    """Top-k terms of the sort corpus that also occur in the other corpus,
    with per-corpus percentiles and their difference (b minus a).

    ``percentiles_a``/``percentiles_b`` override the computed percentile for
    listed terms; this reproduces externally published tables whose
    underlying corpora are not available.
    """
    if table_a.n != table_b.n:
        raise ValueError("tables have different n-gram orders")
    if sort_by not in ("a_count", "b_count"):
        raise ValueError(f"unknown sort_by: {sort_by!r}")
    sort_table, other = (table_b, table_a) if sort_by == "b_count" else (table_a, table_b)
    shared = [t for t in sort_table.entries if t in other.entries]
    shared.sort(key=lambda t: (-sort_table.entries[t], t))
    if len(shared) < k:
        warnings.warn(
            f"only {len(shared)} shared terms for requested top {k}",
            SharedTermShortfall,
        )
    rows = []
    for term in shared[:k]:
        pa = (percentiles_a or {}).get(term)
        pb = (percentiles_b or {}).get(term)
        rows.append(ComparisonRow(
            word=term,
            count_a=table_a.entries[term],
            percentile_a=percentile_rank(table_a, term) if pa is None else pa,
            count_b=table_b.entries[term],
            percentile_b=percentile_rank(table_b, term) if pb is None else pb,
        ))
    return rows


def significance_flag(term_or_group_count: int, table: FrequencyTable) -> bool:
    """True when the count strictly exceeds 1% of the table's token mass."""
    total = table.total_tokens
    if total <= 0:
        raise ValueError("empty frequency table")
    return term_or_group_count / total > 0.01


def write_frequency_csv(table: FrequencyTable, path: str | Path) -> None:
    """Rows ordered by count descending, ties alphabetical."""
    terms = sorted(table.entries, key=lambda t: (-table.entries[t], t))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["term", "count"])
        for term in terms:
            writer.writerow([term, table.entries[term]])


def read_frequency_csv(path: str | Path, corpus_label: str, n: int) -> FrequencyTable:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        entries = {row["term"]: int(row["count"]) for row in reader}
    return FrequencyTable(corpus_label=corpus_label, n=n, entries=entries)


def write_comparison_csv(rows: Sequence[ComparisonRow], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["word", "count_a", "percentile_a", "count_b", "percentile_b", "diff"])
        for r in rows:
            writer.writerow([
                r.word, r.count_a, f"{r.percentile_a:.2f}",
                r.count_b, f"{r.percentile_b:.2f}", f"{r.diff:.2f}",
            ])
