import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topiclab import ingest
from topiclab.errors import CorpusFormatError
from topiclab.ingest import (
    Corpus,
    Document,
    SegmentationConfig,
    Sentence,
    corpus_from_sentences,
    corpus_stats,
    load_corpus,
    normalize_text,
    segment_sentences,
)


def doc(text, doc_id="d0"):
    return Document(doc_id=doc_id, corpus_label="t", text=text, source_path="mem")


class TestLoadCorpus:
    def test_plain_dir(self, tmp_path):
        (tmp_path / "a.txt").write_text("Hello world.")
        (tmp_path / "b.txt").write_text("Bye.")
        corpus = load_corpus(tmp_path, "toy", format="plain_dir")
        assert [d.doc_id for d in corpus.documents] == ["a", "b"]
        assert corpus.documents[0].text == "Hello world."

    def test_jsonl_duplicate_id_names_both_lines(self, tmp_path):
        lines = [{"id": f"doc{i}", "text": "Some text here."} for i in range(8)]
        lines[2]["id"] = "x"
        lines[6]["id"] = "x"
        path = tmp_path / "c.jsonl"
        path.write_text("\n".join(json.dumps(l) for l in lines))
        with pytest.raises(CorpusFormatError, match=r"lines 3 and 7"):
            load_corpus(path, "toy")

    def test_thousand_files_lexicographic(self, tmp_path):
        # Oracle: an independent directory listing, sorted.
        names = [f"doc_{i:04d}" for i in range(1000)]
        shuffled = names[:]
        random.Random(7).shuffle(shuffled)
        for name in shuffled:
            (tmp_path / f"{name}.txt").write_text(f"Text of {name}.")
        corpus = load_corpus(tmp_path, "big", format="plain_dir")
        oracle = sorted(p.stem for p in tmp_path.iterdir())
        assert [d.doc_id for d in corpus.documents] == oracle == names

    def test_malformed_jsonl_reports_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "text": "Fine."}\n{broken\n')
        with pytest.raises(CorpusFormatError, match=r":2"):
            load_corpus(path, "toy")

    def test_missing_field_reports_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a"}\n')
        with pytest.raises(CorpusFormatError, match=r":1"):
            load_corpus(path, "toy")

    def test_empty_text_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "text": "   "}\n')
        with pytest.raises(CorpusFormatError, match="empty text"):
            load_corpus(path, "toy")

    def test_missing_path(self, tmp_path):
        with pytest.raises(CorpusFormatError, match="does not exist"):
            load_corpus(tmp_path / "nope", "toy")

    def test_jsonl_order_is_lexicographic(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(
            '{"id": "zz", "text": "Last one here."}\n'
            '{"id": "aa", "text": "First one here."}\n'
        )
        corpus = load_corpus(path, "toy")
        assert [d.doc_id for d in corpus.documents] == ["aa", "zz"]


class TestSegmentation:
    def test_two_clean_sentences(self):
        got = segment_sentences(doc("A b c d e. F g h i j."))
        assert [s.text for s in got] == ["A b c d e.", "F g h i j."]
        assert [s.token_count for s in got] == [5, 5]

    def test_fragment_merges_forward(self):
        # Hand trace: "Yes." is a 1-token fragment below min_tokens=3 and
        # opens the document, so it merges into the following sentence.
        got = segment_sentences(doc("Yes. A b c d e."))
        assert [s.text for s in got] == ["Yes. A b c d e."]

    def test_fragment_merges_backward(self):
        got = segment_sentences(doc("A b c d e. No more? Go."))
        assert [s.text for s in got] == ["A b c d e. No more? Go."]

    def test_hard_split_600_tokens(self):
        words = " ".join(f"w{i}" for i in range(600))
        got = segment_sentences(doc(words))
        assert [s.token_count for s in got] == [535, 65]
        assert got[0].text.split()[-1] == "w534"

    def test_overflow_prefers_interior_terminator(self):
        # 12 tokens with a terminator after token 8; max 10 splits there.
        text = "a b c d e f g h. i j k l"
        rules = SegmentationConfig(min_tokens=2, max_tokens=10)
        got = segment_sentences(doc(text), rules)
        assert [s.text for s in got] == ["a b c d e f g h.", "i j k l"]

    def test_hard_split_keeps_remainder_legal(self):
        # 11 tokens, max 10, min 3: a 10/1 split would leave an illegal
        # 1-token remainder, so the cut backs off to 8/3.
        words = " ".join(f"w{i}" for i in range(11))
        rules = SegmentationConfig(min_tokens=3, max_tokens=10)
        got = segment_sentences(doc(words), rules)
        assert [s.token_count for s in got] == [8, 3]

    def test_abbreviation_guard(self):
        got = segment_sentences(doc("Mr. Smith met the board. The vote passed."))
        assert [s.text for s in got] == ["Mr. Smith met the board.", "The vote passed."]

    def test_lowercase_continuation_not_boundary(self):
        got = segment_sentences(doc("The no. of pairs rose. Output held steady."))
        assert [s.text for s in got] == ["The no. of pairs rose.", "Output held steady."]

    def test_empty_document(self):
        assert segment_sentences(doc("   \n\t ")) == []

    def test_whole_document_shorter_than_min(self):
        # Nothing to merge into: the short sentence survives so the text
        # is not silently dropped.
        got = segment_sentences(doc("Two words"))
        assert [s.text for s in got] == ["Two words"]

    def test_ordinals_dense_and_ids_stable(self):
        got = segment_sentences(doc("A b c d e. F g h i j. K l m n o.", doc_id="dX"))
        assert [s.ordinal for s in got] == [0, 1, 2]
        assert [s.sentence_id for s in got] == ["dX:0", "dX:1", "dX:2"]

    def test_determinism(self):
        text = "One two three. Four five six! Seven eight nine?"
        assert segment_sentences(doc(text)) == segment_sentences(doc(text))

    @settings(max_examples=200)
    @given(st.text(alphabet="abC .!?\nMr", max_size=300))
    def test_reconstruction(self, text):
        sentences = segment_sentences(doc(text))
        joined = " ".join(s.text for s in sentences)
        assert joined == normalize_text(text)

    @settings(max_examples=100)
    @given(st.text(alphabet="ab cD.!?", max_size=400),
           st.integers(2, 6), st.integers(8, 40))
    def test_length_rules(self, text, min_tokens, max_tokens):
        rules = SegmentationConfig(min_tokens=min_tokens, max_tokens=max_tokens)
        sentences = segment_sentences(doc(text), rules)
        for s in sentences:
            assert s.token_count <= max_tokens
        # Only a document below min_tokens in total may yield a short sentence.
        if sentences and len(normalize_text(text).split()) >= min_tokens:
            for s in sentences:
                assert s.token_count >= min_tokens


def _sentence(i, tokens):
    text = " ".join("w" for _ in range(tokens))
    return Sentence(sentence_id=f"s:{i}", doc_id="s", ordinal=i,
                    text=text, token_count=tokens)


class TestCorpusStats:
    def test_single_sentence(self):
        corpus = corpus_from_sentences("t", [_sentence(0, 10)])
        st_ = corpus_stats(corpus)
        assert (st_.total_sentences, st_.avg_len, st_.min_len, st_.max_len,
                st_.under_5, st_.over_25) == (1, 10.0, 10, 10, 0, 0)

    def test_recount_oracle(self):
        rng = random.Random(11)
        lengths = [rng.randint(1, 60) for _ in range(1000)]
        corpus = corpus_from_sentences(
            "t", [_sentence(i, n) for i, n in enumerate(lengths)])
        st_ = corpus_stats(corpus)
        # Brute-force recount, independently of the implementation.
        assert st_.total_sentences == len(lengths)
        assert st_.avg_len == pytest.approx(sum(lengths) / len(lengths))
        assert st_.min_len == min(lengths)
        assert st_.max_len == max(lengths)
        assert st_.under_5 == len([n for n in lengths if n < 5])
        assert st_.over_25 == len([n for n in lengths if n > 25])

    def test_empty_corpus_raises(self):
        with pytest.raises(CorpusFormatError):
            corpus_stats(Corpus(label="t", documents=()))

    def test_stats_closure(self):
        a = corpus_from_sentences("a", [_sentence(i, 5 + i) for i in range(10)])
        b = corpus_from_sentences("b", [_sentence(i, 3 + i) for i in range(7)])
        merged = corpus_from_sentences("ab", a.sentences + b.sentences)
        assert (corpus_stats(merged).total_sentences
                == corpus_stats(a).total_sentences + corpus_stats(b).total_sentences)

    def test_toy_corpus_stats(self, toy_bs):
        st_ = corpus_stats(toy_bs)
        assert st_.total_sentences == len(toy_bs.sentences)
        assert st_.min_len >= 3


class TestSentenceJsonl:
    def test_round_trip(self, tmp_path, toy_uc):
        path = tmp_path / "sent.jsonl"
        ingest.write_sentences_jsonl(toy_uc.sentences, path)
        back = ingest.read_sentences_jsonl(path)
        assert tuple(back) == toy_uc.sentences

    def test_bad_record(self, tmp_path):
        path = tmp_path / "sent.jsonl"
        path.write_text('{"sentence_id": "a"}\n')
        with pytest.raises(CorpusFormatError, match=":1"):
            ingest.read_sentences_jsonl(path)
