"""Corpus loading, sentence segmentation, and sentence-level statistics."""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CorpusFormatError

TERMINATORS = frozenset(".!?")
ABBREVIATIONS = frozenset({"Mr", "Mrs", "No", "St", "Co", "Ltd"})

_WS_RUN = re.compile(r"\s+")
# Control characters other than ordinary whitespace (those are handled by the
# whitespace collapse).
_CONTROL = re.compile(r"[\x00-\x08\x0b-\x1f\x7f-\x9f]")


def normalize_text(text: str) -> str:
    """NFC-normalize, drop control characters, and collapse whitespace runs."""
    text = unicodedata.normalize("NFC", text)
    text = _CONTROL.sub(" ", text)
    return _WS_RUN.sub(" ", text).strip()


@dataclass(frozen=True)
class SegmentationConfig:
    """Sentence segmentation rules.

    Sentences end at a terminator character followed by whitespace and an
    uppercase letter (or end of text), unless the preceding word is a known
    abbreviation. Fragments shorter than ``min_tokens`` merge into the
    preceding sentence (the following one if they open the document);
    sentences longer than ``max_tokens`` split at the nearest interior
    terminator, or hard-split at the token limit.
    """

    terminators: frozenset[str] = TERMINATORS
    abbreviations: frozenset[str] = ABBREVIATIONS
    min_tokens: int = 3
    max_tokens: int = 535


@dataclass(frozen=True)
class Document:
    doc_id: str
    corpus_label: str
    text: str
    source_path: str


@dataclass(frozen=True)
class Sentence:
    sentence_id: str
    doc_id: str
    ordinal: int
    text: str
    token_count: int


@dataclass(frozen=True)
class Corpus:
    """A labeled document collection, optionally carrying its sentences."""

    label: str
    documents: tuple[Document, ...]
    sentences: tuple[Sentence, ...] = ()


@dataclass(frozen=True)
class CorpusStats:
    total_sentences: int
    avg_len: float
    min_len: int
    max_len: int
    under_5: int
    over_25: int


def load_corpus(path: str | Path, label: str, format: str = "jsonl") -> Corpus:
    """Load documents from a jsonl file or a directory of ``.txt`` files.

    Documents are returned in lexicographic ``doc_id`` order so downstream
    artifacts are deterministic across platforms.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusFormatError(f"corpus path does not exist: {path}")
    if format == "jsonl":
        docs = _load_jsonl(path, label)
    elif format == "plain_dir":
        docs = _load_plain_dir(path, label)
    else:
        raise CorpusFormatError(f"unknown corpus format: {format!r}")
    docs.sort(key=lambda d: d.doc_id)
    return Corpus(label=label, documents=tuple(docs))


def _load_jsonl(path: Path, label: str) -> list[Document]:
    if not path.is_file():
        raise CorpusFormatError(f"not a file: {path}")
    docs: list[Document] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid json ({exc})") from exc
            if not isinstance(record, dict) or "id" not in record or "text" not in record:
                raise CorpusFormatError(f"{path}:{lineno}: record must carry 'id' and 'text'")
            doc_id = str(record["id"])
            text = str(record["text"])
            if not text.strip():
                raise CorpusFormatError(f"{path}:{lineno}: empty text for id {doc_id!r}")
            if doc_id in seen:
                raise CorpusFormatError(
                    f"{path}: duplicate doc_id {doc_id!r} on lines {seen[doc_id]} and {lineno}"
                )
            seen[doc_id] = lineno
            docs.append(Document(doc_id=doc_id, corpus_label=label, text=text,
                                 source_path=f"{path}:{lineno}"))
    return docs


def _load_plain_dir(path: Path, label: str) -> list[Document]:
    if not path.is_dir():
        raise CorpusFormatError(f"not a directory: {path}")
    docs: list[Document] = []
    seen: dict[str, Path] = {}
    for file in sorted(path.glob("*.txt")):
        doc_id = file.stem
        text = file.read_text(encoding="utf-8")
        if not text.strip():
            raise CorpusFormatError(f"{file}: empty document")
        if doc_id in seen:
            raise CorpusFormatError(f"duplicate doc_id {doc_id!r}: {seen[doc_id]} and {file}")
        seen[doc_id] = file
        docs.append(Document(doc_id=doc_id, corpus_label=label, text=text,
                             source_path=str(file)))
    return docs


def _boundary_positions(text: str, rules: SegmentationConfig) -> list[int]:
    """End offsets (exclusive) of sentence boundaries inside normalized text.

    A boundary sits after a run of terminator characters that is followed by
    a space and an uppercase letter, or by end of text. A lone period whose
    preceding word is on the abbreviation list never ends a sentence.
    """
    bounds: list[int] = []
    i = 0
    n = len(text)
    while i < n:
        if text[i] not in rules.terminators:
            i += 1
            continue
        j = i
        while j < n and text[j] in rules.terminators:
            j += 1
        at_end = j >= n
        followed = not at_end and text[j] == " " and j + 1 < n and text[j + 1].isupper()
        if at_end or followed:
            guarded = False
            if text[i] == "." and j - i == 1:
                start = text.rfind(" ", 0, i) + 1
                guarded = text[start:i] in rules.abbreviations
            if not guarded:
                bounds.append(j)
        i = j
    if not bounds or bounds[-1] != n:
        bounds.append(n)
    return bounds


def _token_spans(text: str, start: int, end: int) -> list[tuple[int, int]]:
    return [(m.start() + start, m.end() + start)
            for m in re.finditer(r"\S+", text[start:end])]


def segment_sentences(doc: Document, rules: SegmentationConfig | None = None) -> list[Sentence]:
    """Split a document into sentences under the configured length rules.

    The sentences partition the normalized document text: joining them with
    single spaces reproduces it exactly. A document shorter than
    ``min_tokens`` yields a single (short) sentence, since there is nothing
    to merge it into.
    """
    rules = rules or SegmentationConfig()
    text = normalize_text(doc.text)
    if not text:
        return []

    spans: list[tuple[int, int]] = []
    start = 0
    for end in _boundary_positions(text, rules):
        if end > start:
            spans.append((start, end))
        start = end + 1  # skip the single space that follows a boundary

    spans = _merge_short_spans(text, spans, rules.min_tokens)
    spans = _split_long_spans(text, spans, rules)

    sentences = []
    for ordinal, (a, b) in enumerate(spans):
        chunk = text[a:b]
        sentences.append(Sentence(
            sentence_id=f"{doc.doc_id}:{ordinal}",
            doc_id=doc.doc_id,
            ordinal=ordinal,
            text=chunk,
            token_count=len(chunk.split()),
        ))
    return sentences


def _merge_short_spans(text: str, spans: list[tuple[int, int]],
                       min_tokens: int) -> list[tuple[int, int]]:
    result: list[tuple[int, int]] = []
    pending: tuple[int, int] | None = None
    for span in spans:
        if pending is not None:
            span = (pending[0], span[1])
            pending = None
        if len(text[span[0]:span[1]].split()) >= min_tokens:
            result.append(span)
        elif result:
            result[-1] = (result[-1][0], span[1])
        else:
            pending = span
    if pending is not None:
        if result:
            result[-1] = (result[-1][0], pending[1])
        else:
            result.append(pending)
    return result


def _split_long_spans(text: str, spans: list[tuple[int, int]],
                      rules: SegmentationConfig) -> list[tuple[int, int]]:
    out: list[tuple[int, int]] = []
    for span in spans:
        out.extend(_split_one(text, span, rules))
    return out


def _split_one(text: str, span: tuple[int, int],
               rules: SegmentationConfig) -> list[tuple[int, int]]:
    tokens = _token_spans(text, span[0], span[1])
    n = len(tokens)
    if n <= rules.max_tokens:
        return [span]
    # Prefer the interior terminator closest below the limit, provided both
    # pieces stay legal; otherwise hard-split at the limit (held back just
    # far enough that the remainder is not shorter than min_tokens).
    cut = 0
    for t in range(rules.min_tokens, min(rules.max_tokens, n - rules.min_tokens) + 1):
        if text[tokens[t - 1][1] - 1] in rules.terminators:
            cut = t
    if cut == 0:
        cut = min(rules.max_tokens, n - rules.min_tokens)
    left = (span[0], tokens[cut - 1][1])
    right = (tokens[cut][0], span[1])
    return [left] + _split_one(text, right, rules)


def segment_corpus(corpus: Corpus, rules: SegmentationConfig | None = None) -> Corpus:
    """Segment every document; per-document work is pure and order-stable."""
    sentences: list[Sentence] = []
    for doc in corpus.documents:
        sentences.extend(segment_sentences(doc, rules))
    return replace(corpus, sentences=tuple(sentences))


def corpus_from_sentences(label: str, sentences: Iterable[Sentence]) -> Corpus:
    """Wrap pre-segmented sentences (e.g. read back from jsonl) as a Corpus."""
    return Corpus(label=label, documents=(), sentences=tuple(sentences))


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Sentence-level length statistics; raises on a sentence-less corpus."""
    lengths = [s.token_count for s in corpus.sentences]
    if not lengths:
        raise CorpusFormatError(f"corpus {corpus.label!r} has no sentences")
    return CorpusStats(
        total_sentences=len(lengths),
        avg_len=sum(lengths) / len(lengths),
        min_len=min(lengths),
        max_len=max(lengths),
        under_5=sum(1 for n in lengths if n < 5),
        over_25=sum(1 for n in lengths if n > 25),
    )


def write_sentences_jsonl(sentences: Sequence[Sentence], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in sentences:
            fh.write(json.dumps({
                "sentence_id": s.sentence_id,
                "doc_id": s.doc_id,
                "ordinal": s.ordinal,
                "text": s.text,
                "token_count": s.token_count,
            }, ensure_ascii=False) + "\n")


def read_sentences_jsonl(path: str | Path) -> list[Sentence]:
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                sentences.append(Sentence(
                    sentence_id=rec["sentence_id"],
                    doc_id=rec["doc_id"],
                    ordinal=int(rec["ordinal"]),
                    text=rec["text"],
                    token_count=int(rec["token_count"]),
                ))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorpusFormatError(f"{path}:{lineno}: bad sentence record ({exc})") from exc
    return sentences
