import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from threadsum import baselines as bl
from threadsum.select import RankedSentence

split = lambda *xs: [x.split() for x in xs]  # noqa: E731

sentence_lists = st.lists(st.lists(st.sampled_from("abcdef"), min_size=1, max_size=6), min_size=1, max_size=7)


# -- tf-idf ---------------------------------------------------------------


def test_idf_examples():
    m = bl.build_tfidf(split("a x", "a y", "a z", "a w"))
    assert m.idf("a") == 0.0
    assert m.idf("x") == pytest.approx(math.log(4))
    assert m.idf("unseen") == 0.0
    assert m.vector(["unseen", "x", "x"]) == {"unseen": 0.0, "x": pytest.approx(2 * math.log(4))}


def test_build_tfidf_empty():
    with pytest.raises(ValueError):
        bl.build_tfidf([])


def test_stopword_file_loaded():
    assert {"the", "and", "is"} <= bl.STOPWORDS
    assert 100 <= len(bl.STOPWORDS) <= 150


# -- SumBasic -------------------------------------------------------------


def test_sumbasic_hand_trace():
    sents = split("a a b", "b c")
    sel = bl.sumbasic(sents, 3)
    assert sel.order == [0]
    sel2 = bl.sumbasic(sents, 4)
    # after squaring a, b drop to 0.16 so c (0.2) now leads
    assert sel2.order == [0, 1]


def test_sumbasic_trivial():
    assert bl.sumbasic(split("x y"), 1).chosen == [0]
    assert bl.sumbasic(split("x y", "z"), 0).chosen == []


@given(sentence_lists, st.integers(0, 40))
def test_sumbasic_no_repeats_and_budget(sents, budget):
    sel = bl.sumbasic(sents, budget)
    assert len(sel.order) == len(set(sel.order))
    if sel.order:
        assert sel.total_words - len(sents[sel.order[-1]]) < budget


# -- KL-Sum ---------------------------------------------------------------


def test_kl_hand_value():
    # pre-smoothing value of KL(thread || "a b")
    p = {"a": 0.75, "b": 0.25}
    q = {"a": 0.5, "b": 0.5}
    raw = sum(p[w] * math.log(p[w] / q[w]) for w in p)
    assert raw == pytest.approx(0.1308, abs=5e-5)
    smoothed = bl.smoothed_kl(Counter("aab" "a"), Counter("ab"))
    assert smoothed == pytest.approx(raw, abs=1e-3)
    assert bl.klsum(split("a b", "a a"), 1).order == [0]


def test_klsum_single_sentence_and_stop_at_zero():
    assert bl.klsum(split("a b c"), 10).chosen == [0]
    sel = bl.klsum(split("a b", "a b"), 10)
    assert sel.chosen == [0]


@given(sentence_lists, st.integers(0, 40))
def test_klsum_strictly_decreasing(sents, budget):
    sel = bl.klsum(sents, budget)
    assert all(b < a for a, b in zip(sel.objective, sel.objective[1:]))


# -- LexRank --------------------------------------------------------------


def test_lexrank_identical_uniform():
    p = bl.lexrank_scores(split("a b c", "a b c", "a b c", "a b c"))
    np.testing.assert_allclose(p, 0.25, atol=1e-12)


def test_lexrank_all_zero_similarity_uniform():
    # every term appears in every sentence, so all tf-idf vectors vanish
    p = bl.lexrank_scores(split("a b", "b a", "a b"))
    np.testing.assert_allclose(p, 1 / 3, atol=1e-12)


def test_lexrank_single():
    assert bl.lexrank_scores(split("x")).tolist() == [1.0]


def test_lexrank_hub_first():
    sents = split("a b", "a b c d", "c d")
    tfidf = bl.build_tfidf(split("a b", "a b c d", "c d", "e f", "g h"))
    p = bl.lexrank_scores(sents, tfidf)
    assert np.argmax(p) == 1
    assert bl.cosine(tfidf.vector(sents[0]), tfidf.vector(sents[2])) == 0.0
    assert bl.lexrank(sents, 2, tfidf=tfidf).order[0] == 1


@settings(max_examples=50)
@given(sentence_lists)
def test_lexrank_distribution(sents):
    p = bl.lexrank_scores(sents)
    assert abs(p.sum() - 1) < 1e-9 and np.all(p >= 0)


def test_lexrank_empty():
    with pytest.raises(ValueError):
        bl.lexrank_scores([])


# -- MEAD -----------------------------------------------------------------


def test_mead_single_sentence():
    assert bl.mead_score(split("a b c")) == [RankedSentence(0, 3.0)]


def test_mead_identical_earlier_wins():
    s = bl.mead_score(split("a b", "a b"))
    assert s[0].score > s[1].score


def test_mead_hand_instance():
    sents = split("a b", "a c d", "e")
    tfidf = bl.build_tfidf(sents)
    vecs = [tfidf.vector(s) for s in sents]
    center = {k: sum(v.get(k, 0) for v in vecs) / 3 for k in "abcde"}
    cos = [bl.cosine(v, center) for v in vecs]
    expected = [cos[i] / max(cos) + (3 - i) / 3 + len(sents[i]) / 3 for i in range(3)]
    got = [r.score for r in bl.mead_score(sents)]
    np.testing.assert_allclose(got, expected, rtol=1e-14)


# -- features -------------------------------------------------------------


def test_feature_positions_and_centroid():
    sents = split("cats purr loudly", "dogs bark", "birds sing")
    whole = [t for s in sents for t in s]
    thread = sents + [whole]
    tfidf = bl.build_tfidf(thread)
    feats = [bl.extract_features(i, thread, tfidf) for i in range(len(thread))]
    assert feats[3].cosine_to_centroid == pytest.approx(max(f.cosine_to_centroid for f in feats), abs=1e-12)
    assert bl.extract_features(1, sents, tfidf).relative_position == 0.5
    assert bl.extract_features(0, sents[:1], tfidf).relative_position == 0.0
    with pytest.raises(IndexError):
        bl.extract_features(3, sents, tfidf)


def test_feature_hand_values():
    sents = split("the cat sat", "the dog")
    tfidf = bl.build_tfidf(sents)  # N=2: idf(the)=0, others ln 2
    f = bl.extract_features(0, sents, tfidf)
    ln2 = math.log(2)
    assert f.content_word_count == 2
    assert f.tfidf_max == pytest.approx(ln2)
    assert f.tfidf_total == pytest.approx(2 * ln2)
    assert f.tfidf_avg == pytest.approx(2 * ln2 / 3)
    # centroid = (0, ln2/2, ln2/2, ln2/2) over (the, cat, sat, dog)
    assert f.cosine_to_centroid == pytest.approx(2 / math.sqrt(2 * 3))
    np.testing.assert_array_equal(bl.thread_features(sents, tfidf)[0], f.as_array())


# -- logistic regression --------------------------------------------------


def test_logreg_predict_examples():
    zero = bl.LogRegModel(np.zeros(6))
    assert bl.logreg_predict(zero, np.ones(6)) == 0.5
    m = bl.LogRegModel(np.array([1.0, 0, 0, 0, 0, 0]))
    assert bl.logreg_predict(m, [math.log(9), 5, 5, 5, 5, 5]) == pytest.approx(0.9)
    with pytest.raises(ValueError):
        bl.logreg_predict(m, np.ones(5))


def test_logreg_monotone():
    m = bl.LogRegModel(np.array([2.0, -1.0]))
    assert bl.logreg_predict(m, [1.0, 0.0]) > bl.logreg_predict(m, [0.0, 0.0])


def test_logreg_separable():
    x = np.array([[-2.0], [-1.0], [-0.5], [0.5], [1.0], [2.0]])
    y = np.array([0, 0, 0, 1, 1, 1])
    # at c=0.1 and w1=5 six points cannot outweigh the penalty and the
    # positive weight, so the threshold shifts while the ranking stays exact
    m = bl.logreg_train(x, y)
    p = bl.logreg_predict(m, x)
    assert p[y == 1].min() > p[y == 0].max()
    assert all(b <= a for a, b in zip(m.losses, m.losses[1:]))
    weak = bl.logreg_train(x, y, c=10.0, w1=1.0)
    assert np.all((bl.logreg_predict(weak, x) > 0.5) == (y == 1))
    big = bl.logreg_train(x, y, c=0.1 * 1e6, max_iter=20_000)
    assert np.linalg.norm(big.weights) > np.linalg.norm(m.weights)


def test_logreg_single_class():
    with pytest.raises(ValueError):
        bl.logreg_train(np.ones((3, 2)), [1, 1, 1])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_logreg_loss_non_increasing(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(30, 3))
    y = (x[:, 0] + rng.normal(size=30) > 0).astype(int)
    if len(set(y)) < 2:
        y[0] = 1 - y[0]
    m = bl.logreg_train(x, y, max_iter=2000)
    assert all(b <= a for a, b in zip(m.losses, m.losses[1:]))
