"""Document translation, term weighting and index construction tests."""

import math

import numpy as np

from psq.alignment import TranslationTable
from psq.errors import ParseError
from psq.index_io import serialize_index
from psq.indexer import (
    DocumentVector,
    SmoothingConfig,
    UnigramLM,
    build_index,
    build_unigram_lm,
    index_statistics,
    load_unigram_lm,
    read_documents,
    save_unigram_lm,
    term_weight,
    translate_document,
)
from psq.textprep import TokenizerConfig, TokenSequence

STAMP = "2024-01-01T00:00:00+00:00"


def docs_from(*texts: str) -> list[tuple[str, TokenSequence]]:
    """Pre-tokenized documents named d0, d1, ..."""

    return [(f"d{i}", TokenSequence.from_text(text)) for i, text in enumerate(texts)]


def random_setup(rng: np.random.Generator, num_docs: int = 12):
    """Random documents, table and LM over small vocabularies."""

    sources = [f"s{i}" for i in range(15)]
    targets = [f"t{i}" for i in range(20)]
    mapping = {}
    for source in sources[:12]:
        chosen = rng.choice(targets, size=rng.integers(1, 6), replace=False)
        weights = rng.random(len(chosen)) + 0.01
        mapping[source] = dict(zip(chosen, weights / weights.sum()))
    table = TranslationTable.from_mapping(mapping)
    docs = [
        (f"d{i}", TokenSequence(tuple(rng.choice(sources, size=rng.integers(1, 10)))))
        for i in range(num_docs)
    ]
    lm = build_unigram_lm(TokenSequence(tuple(rng.choice(targets, size=200))))
    return docs, table, lm


def test_unigram_lm_counts():
    """Maximum-likelihood estimates with a floor for unseen tokens."""

    lm = build_unigram_lm(TokenSequence.from_text("a a b"))
    assert lm.lookup("a") == 2 / 3
    assert lm.lookup("b") == 1 / 3
    assert lm.lookup("zzz") == 1e-7
    assert build_unigram_lm(["a"]).lookup("a") == 1.0


def test_unigram_lm_rejects_empty_stream():
    """An LM needs at least one token."""

    try:
        build_unigram_lm([])
    except ValueError as exc:  # noqa: PT017
        assert "empty" in str(exc)
    else:  # pragma: no cover - defensive
        raise AssertionError("Expected ValueError for an empty stream")


def test_unigram_lm_rejects_bare_string():
    """A raw string is not split into characters."""

    try:
        build_unigram_lm("a a b")
    except TypeError as exc:  # noqa: PT017
        assert "bare string" in str(exc)
    else:  # pragma: no cover - defensive
        raise AssertionError("Expected TypeError for a str stream")


def test_unigram_lm_file_round_trip(tmp_path):
    """Saved LMs reload with identical probabilities and floor."""

    lm = build_unigram_lm(TokenSequence.from_text("x y y z z z"), floor=1e-5)
    path = tmp_path / "lm.tsv"
    save_unigram_lm(lm, path)
    loaded = load_unigram_lm(path)
    assert loaded == lm
    assert load_unigram_lm(path, floor=1e-3).floor == 1e-3


def test_translate_single_token_document():
    """A one-token document inherits the token's translation distribution."""

    table = TranslationTable.from_mapping({"a": {"x": 0.75, "y": 0.25}})
    translated = translate_document(DocumentVector.from_tokens("d", ["a"]), table)
    assert translated.entries == {"x": 0.75, "y": 0.25}


def test_translate_mixes_by_term_frequency():
    """Translations are weighted by each source token's share of the document."""

    table = TranslationTable.from_mapping({"a": {"x": 1.0}, "b": {"x": 0.5, "z": 0.5}})
    translated = translate_document(DocumentVector.from_tokens("d", ["a", "b"]), table)
    assert translated.entries == {"x": 0.75, "z": 0.25}


def test_untranslatable_document_is_empty():
    """Tokens missing from the table contribute nothing."""

    table = TranslationTable.from_mapping({"a": {"x": 1.0}})
    translated = translate_document(DocumentVector.from_tokens("d", ["q", "q", "q"]), table)
    assert translated.entries == {}


def test_translation_is_linear_in_term_frequencies():
    """A document translates to the tf-weighted mix of its one-token translations."""

    rng = np.random.default_rng(23)
    docs, table, _ = random_setup(rng, num_docs=40)
    for doc_id, tokens in docs:
        doc = DocumentVector.from_tokens(doc_id, tokens)
        mixed: dict[str, float] = {}
        for token, tf in doc.entries.items():
            single = translate_document(DocumentVector.from_tokens("one", [token]), table)
            for target, prob in single.entries.items():
                mixed[target] = mixed.get(target, 0.0) + tf / doc.length * prob
        translated = translate_document(doc, table)
        assert set(translated.entries) == set(mixed)
        for target, prob in translated.entries.items():
            assert abs(prob - mixed[target]) <= 1e-12 * mixed[target]


def test_term_weight_examples():
    """Worked weights: zero, log 2 and a direct evaluation."""

    assert term_weight(0.0, 0.3, SmoothingConfig(alpha=0.9)) == 0.0
    assert abs(term_weight(0.2, 0.2, SmoothingConfig(alpha=0.5)) - math.log(2)) < 1e-15
    expected = math.log((0.7 * 0.2) / (0.3 * 0.01) + 1)
    assert abs(term_weight(0.2, 0.01, SmoothingConfig(alpha=0.3)) - expected) < 1e-12
    assert abs(expected - 3.86423) < 1e-4


def test_term_weight_requires_positive_background():
    """A zero background probability is a precondition violation."""

    try:
        term_weight(0.5, 0.0, SmoothingConfig())
    except ValueError as exc:  # noqa: PT017
        assert "background" in str(exc)
    else:  # pragma: no cover - defensive
        raise AssertionError("Expected ValueError for p_bg=0")


def test_term_weight_monotone_in_both_probabilities():
    """Weights rise with p_doc and fall with p_bg on sampled grids."""

    rng = np.random.default_rng(5)
    for alpha in (0.1, 0.5, 0.9):
        cfg = SmoothingConfig(alpha=alpha)
        for _ in range(200):
            low, high = np.sort(rng.uniform(1e-6, 1.0, size=2))
            if low == high:
                continue
            fixed = float(rng.uniform(1e-6, 1.0))
            assert term_weight(float(low), fixed, cfg) < term_weight(float(high), fixed, cfg)
            assert term_weight(fixed, float(low), cfg) > term_weight(fixed, float(high), cfg)


def test_single_posting_index():
    """One certain translation with P(x|G) = 0.5 and alpha 0.5 gives a log 3 posting."""

    table = TranslationTable.from_mapping({"a": {"x": 1.0}})
    lm = UnigramLM({"x": 0.5})
    index = build_index(docs_from("a"), table, lm, SmoothingConfig(alpha=0.5), built_at=STAMP)
    assert index.total_postings == 1
    assert index.query_vocab.tokens == ("x",)
    [(ordinal, weight)] = index.postings("x")
    assert ordinal == 0
    assert abs(weight - math.log(3)) < 1e-15


def test_index_with_no_postings():
    """Documents that translate to nothing still get ordinals."""

    table = TranslationTable.from_mapping({"a": {"x": 1.0}})
    index = build_index(docs_from("q", "r"), table, UnigramLM({"x": 0.5}), SmoothingConfig(),
                        built_at=STAMP)
    assert index.total_postings == 0
    assert index.num_docs == 2
    assert len(index.query_vocab) == 0


def test_index_matches_per_document_oracle():
    """Postings equal the per-document translated and weighted vectors."""

    docs, table, lm = random_setup(np.random.default_rng(5))
    cfg = SmoothingConfig(alpha=0.4)
    index = build_index(docs, table, lm, cfg, built_at=STAMP)
    expected: dict[str, dict[int, float]] = {}
    for ordinal, (doc_id, tokens) in enumerate(docs):
        translated = translate_document(DocumentVector.from_tokens(doc_id, tokens), table)
        for token, p_doc in translated.entries.items():
            expected.setdefault(token, {})[ordinal] = term_weight(p_doc, lm.lookup(token), cfg)
    assert set(index.query_vocab) == set(expected)
    for token, by_doc in expected.items():
        postings = dict(index.postings(token))
        assert postings.keys() == by_doc.keys()
        for ordinal, weight in by_doc.items():
            assert abs(postings[ordinal] - weight) <= 1e-12 * max(1.0, weight)


def test_postings_sorted_by_weight_then_ordinal():
    """Postings lists are ordered weight descending with ordinal tie-breaks."""

    docs, table, lm = random_setup(np.random.default_rng(9), num_docs=25)
    index = build_index(docs, table, lm, SmoothingConfig(), built_at=STAMP)
    for token in index.query_vocab:
        postings = index.postings(token)
        keys = [(-weight, ordinal) for ordinal, weight in postings]
        assert keys == sorted(keys)


def test_identity_table_reproduces_monolingual_weights():
    """With P(w|w)=1 the weights are the monolingual smoothed-LM weights."""

    vocab = ["apple", "banana", "cherry", "date"]
    table = TranslationTable.from_mapping({word: {word: 1.0} for word in vocab})
    docs = docs_from("apple apple banana", "cherry date date date", "banana")
    lm = build_unigram_lm(TokenSequence.from_text("apple banana banana cherry date date"))
    cfg = SmoothingConfig(alpha=0.3)
    index = build_index(docs, table, lm, cfg, built_at=STAMP)
    for ordinal, (_, tokens) in enumerate(docs):
        length = len(tokens)
        for word in set(tokens):
            tf = tokens.tokens.count(word)
            expected = math.log((0.7 * tf / length) / (0.3 * lm.lookup(word)) + 1)
            actual = dict(index.postings(word))[ordinal]
            assert abs(actual - expected) <= 1e-12 * expected


def test_chunk_size_and_workers_do_not_change_bytes():
    """Chunked and threaded builds serialize identically."""

    docs, table, lm = random_setup(np.random.default_rng(21), num_docs=30)
    cfg = SmoothingConfig()
    reference = serialize_index(build_index(docs, table, lm, cfg, 1000, built_at=STAMP))
    for chunk_size in (1, 7):
        built = build_index(docs, table, lm, cfg, chunk_size, built_at=STAMP)
        assert serialize_index(built) == reference
    threaded = build_index(docs, table, lm, cfg, 4, workers=3, built_at=STAMP)
    assert serialize_index(threaded) == reference


def test_build_rejects_duplicates_and_empty_streams():
    """Duplicate document ids and empty collections are errors."""

    table = TranslationTable.from_mapping({"a": {"x": 1.0}})
    lm = UnigramLM({"x": 0.5})
    duplicate = [("d", TokenSequence.from_text("a")), ("d", TokenSequence.from_text("a"))]
    for docs, message in ((duplicate, "duplicate"), ([], "empty")):
        try:
            build_index(docs, table, lm, SmoothingConfig())
        except ValueError as exc:  # noqa: PT017
            assert message in str(exc)
        else:  # pragma: no cover - defensive
            raise AssertionError(f"Expected ValueError mentioning {message}")


def test_metadata_records_build_settings():
    """The index carries alpha, tokenizer and timestamp."""

    table = TranslationTable.from_mapping({"a": {"x": 1.0}})
    index = build_index(docs_from("a"), table, UnigramLM({"x": 0.5}), SmoothingConfig(alpha=0.2),
                        tokenizer=TokenizerConfig(), built_at=STAMP)
    assert index.metadata["alpha"] == 0.2
    assert index.metadata["built_at"] == STAMP
    assert index.metadata["tokenizer"]["lowercase"] is True
    assert index.metadata["pruning"] is None


def test_index_statistics_expansion_ratio():
    """Expansion compares translated postings with document-language postings."""

    table = TranslationTable.from_mapping({"a": {"x": 0.5, "y": 0.5}})
    index = build_index(docs_from("a", "a a"), table, UnigramLM({"x": 0.5, "y": 0.5}),
                        SmoothingConfig(), built_at=STAMP)
    vectors = [DocumentVector.from_tokens("d0", ["a"]), DocumentVector.from_tokens("d1", ["a"])]
    stats = index_statistics(index, sum(len(vector.entries) for vector in vectors))
    assert stats["total_postings"] == 4
    assert stats["expansion_ratio"] == 2.0
    assert stats["max_postings"] == 2


def test_read_documents(tmp_path):
    """JSON lines are tokenized; a broken line names its number."""

    path = tmp_path / "docs.jsonl"
    path.write_text('{"id": "d1", "text": "Hello, World"}\n\n{"id": "d2", "text": "x"}\n',
                    encoding="utf-8")
    docs = list(read_documents(path, TokenizerConfig()))
    assert [doc_id for doc_id, _ in docs] == ["d1", "d2"]
    assert docs[0][1].tokens == ("hello", "world")

    path.write_text('{"id": "d1", "text": "ok"}\n{"id": 3}\n', encoding="utf-8")
    try:
        list(read_documents(path, TokenizerConfig()))
    except ParseError as exc:  # noqa: PT017
        assert exc.line_number == 2
    else:  # pragma: no cover - defensive
        raise AssertionError("Expected ParseError for a record without text")
