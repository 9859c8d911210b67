import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from threadsum.corpus import (
    Corpus,
    CorpusError,
    EmbeddingTable,
    Thread,
    load_corpus,
    load_embeddings,
    save_corpus,
    synthesize_corpus,
    thread_from_json,
    tokenize,
)
from threadsum.oracle import greedy_oracle_labels


def test_tokenize_examples():
    assert tokenize("The cat sat.") == ["the", "cat", "sat"]
    assert tokenize("don't re-install!!") == ["don't", "re-install"]
    assert tokenize("") == []
    assert tokenize("... -- «quoted»") == ["quoted"]


@given(st.text())
def test_tokenize_idempotent(text):
    once = tokenize(text)
    assert tokenize(" ".join(once)) == once


def _thread(**kw):
    base = dict(id="t1", posts=[[["a", "b"], ["c"]], [["d", "e", "f"]]], references=[["a", "c"]], labels=[1, 0, 0])
    base.update(kw)
    return Thread(**base)


def test_thread_indexing_inverse():
    t = _thread()
    assert t.n_sentences == 3 and t.n_words == 6
    for i in range(t.n_sentences):
        assert t.flat_index(*t.locate(i)) == i
    assert t.locate(2) == (1, 0)
    assert t.gold_indices() == [0]
    with pytest.raises(IndexError):
        t.locate(3)


def test_thread_label_length_checked():
    with pytest.raises(CorpusError):
        _thread(labels=[1, 0])


def test_duplicate_ids_rejected():
    with pytest.raises(CorpusError):
        Corpus([_thread(), _thread()])


def test_load_empty_and_single(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text("")
    assert len(load_corpus(p)) == 0
    p.write_text(json.dumps({"id": "x", "posts": [["Hello there, world!", ["pre", "tok"]]], "references": ["hi"]}) + "\n")
    c = load_corpus(p)
    assert len(c) == 1
    assert c.threads[0].sentences == [["hello", "there", "world"], ["pre", "tok"]]


@pytest.mark.parametrize(
    "line,needle",
    [
        ('{"id": "x"}', "posts"),
        ("not json", "invalid JSON"),
        ('{"id": "x", "posts": [[1]]}', "sentence"),
        ('{"id": "x", "posts": [], "labels": [2]}', "labels"),
        ('{"id": "x", "posts": [], "split": "bogus"}', "split"),
    ],
)
def test_load_errors_name_the_line(tmp_path, line, needle):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"id": "ok", "posts": []}\n' + line + "\n")
    with pytest.raises(CorpusError, match=rf"bad.jsonl:2: .*{needle}"):
        load_corpus(p)


def test_load_duplicate_id(tmp_path):
    p = tmp_path / "dup.jsonl"
    p.write_text('{"id": "a", "posts": []}\n{"id": "a", "posts": []}\n')
    with pytest.raises(CorpusError, match=":2: duplicate"):
        load_corpus(p)


def test_round_trip(tmp_path):
    c = synthesize_corpus(3, 5, n_test=2)
    p = tmp_path / "rt.jsonl"
    save_corpus(c, p)
    back = load_corpus(p)
    assert back.threads == c.threads
    assert [t.split for t in back] == ["train"] * 3 + ["test"] * 2
    assert len(back.subset("test")) == 2


def test_thread_from_json_not_object():
    with pytest.raises(CorpusError):
        thread_from_json([1, 2])


def test_embeddings_file(tmp_path):
    p = tmp_path / "vec.txt"
    p.write_text("2 3\ncat 0.1 0.2 0.3\ndog 1 2 3\n")
    table = load_embeddings(p, {"cat"})
    assert table.dim == 3
    np.testing.assert_array_equal(table.lookup("cat"), [0.1, 0.2, 0.3])
    assert "dog" not in table
    a, b = table.lookup("zebra"), table.lookup("zebra")
    np.testing.assert_array_equal(a, b)
    assert np.all(np.abs(a) <= 0.25)


def test_embeddings_bad_dimension(tmp_path):
    p = tmp_path / "vec.txt"
    p.write_text("cat 0.1 0.2 0.3\ndog 1 2\n")
    with pytest.raises(CorpusError, match=":2:"):
        load_embeddings(p)


def test_embeddings_fallback_is_seeded():
    t1, t2 = load_embeddings(None, dim=5, oov_seed=1), EmbeddingTable(5, oov_seed=1)
    np.testing.assert_array_equal(t1.lookup("x"), t2.lookup("x"))
    assert not np.array_equal(t1.lookup("x"), EmbeddingTable(5, oov_seed=2).lookup("x"))
    assert t1.embed([]).shape == (0, 5)


def test_synth_deterministic():
    a, b = synthesize_corpus(11, 4), synthesize_corpus(11, 4)
    assert a.threads == b.threads
    assert synthesize_corpus(12, 4).threads != a.threads


def test_synth_shape_and_budget_share():
    c = synthesize_corpus(5, 20, sentences_per_thread=12)
    for t in c:
        assert t.n_sentences == 12
        assert 2 <= sum(t.labels) <= 4
        planted = sum(len(t.sentences[i]) for i in t.gold_indices())
        assert planted * 5 == t.n_words
        assert t.category.startswith("family")
        assert t.references[0] == [w for i in t.gold_indices() for w in t.sentences[i]]


def test_synth_zero_signal_has_no_keywords():
    c = synthesize_corpus(5, 10, signal_strength=0.0)
    assert all(t.labels for t in c)
    assert not any(tok.startswith("k") for t in c for s in t.sentences for tok in s)


def test_synth_near_duplicates_stay_negative():
    c = synthesize_corpus(5, 10, near_duplicates=2)
    for t in c:
        gold = [t.sentences[i] for i in t.gold_indices()]
        near = [s for i, s in enumerate(t.sentences) if not t.labels[i] and any(
            len(s) == len(g) and sum(a != b for a, b in zip(s, g)) <= 1 for g in gold)]
        assert len(near) >= 1


def test_synth_bad_params():
    with pytest.raises(ValueError):
        synthesize_corpus(0, 0)
    with pytest.raises(ValueError):
        synthesize_corpus(0, 3, signal_strength=1.5)


def test_oracle_agrees_with_planted_labels():
    c = synthesize_corpus(1, 50)
    agree = total = 0
    for t in c:
        labels = greedy_oracle_labels(t.sentences, t.references)
        agree += sum(a == b for a, b in zip(labels, t.labels))
        total += t.n_sentences
    assert agree / total >= 0.9
