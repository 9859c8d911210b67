import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from threadsum.oracle import OracleConfig, greedy_oracle_labels, greedy_oracle_trace
from threadsum.rouge import rouge_n


def straight_line_oracle(sentences, references, ratio=0.2):
    """Independent restatement: recompute every candidate's score from scratch."""
    budget = math.floor(ratio * sum(map(len, sentences)))
    chosen = []
    while True:
        words = sum(len(sentences[i]) for i in chosen)
        if words >= budget:
            break
        base = rouge_n([w for i in chosen for w in sentences[i]], references, 1).f
        scored = []
        for i in range(len(sentences)):
            if i in chosen:
                continue
            toks = [w for j in chosen for w in sentences[j]] + list(sentences[i])
            scored.append((rouge_n(toks, references, 1).f - base, -i))
        if not scored:
            break
        gain, neg_i = max(scored)
        if gain <= 0:
            break
        chosen.append(-neg_i)
    return [int(i in chosen) for i in range(len(sentences))]


def test_single_sentence_equal_to_reference():
    sent = "the cat sat on the mat".split()
    assert greedy_oracle_labels([sent], [sent]) == [1]


def test_hand_traced_instance():
    sents = [s.split() for s in ("the cat sat", "dogs bark loudly", "the cat sat quietly")]
    ref = "the cat sat quietly".split()
    trace = greedy_oracle_trace(sents, [ref, ref], OracleConfig(budget_ratio=0.5))
    assert trace.labels == [0, 0, 1]
    assert trace.order == [2]


def test_disjoint_references():
    sents = [s.split() for s in ("a b c d e", "f g h i j")]
    assert greedy_oracle_labels(sents, [["z", "y"]]) == [0, 0]


def test_errors():
    with pytest.raises(ValueError):
        greedy_oracle_labels([], [["a"]])
    with pytest.raises(ValueError):
        greedy_oracle_labels([["a"]], [])
    with pytest.raises(ValueError):
        OracleConfig(budget_ratio=0)
    with pytest.raises(ValueError):
        OracleConfig(gain_metric="precision")


def test_recall_gain_metric_runs():
    sents = [s.split() for s in ("x a", "a b c d e f g h")]
    ref = ["a", "b", "c", "d"]
    by_f = greedy_oracle_labels(sents, [ref], OracleConfig(budget_ratio=0.1))
    by_r = greedy_oracle_labels(sents, [ref], OracleConfig(budget_ratio=0.1, gain_metric="recall"))
    assert by_r == [0, 1]
    assert by_f == [0, 1]


instances = st.tuples(
    st.lists(st.lists(st.sampled_from("abcdefg"), min_size=1, max_size=5), min_size=1, max_size=6),
    st.lists(st.lists(st.sampled_from("abcdefgh"), min_size=1, max_size=8), min_size=1, max_size=2),
    st.sampled_from([0.2, 0.5, 1.0]),
)


@settings(max_examples=200)
@given(instances)
def test_matches_straight_line_reimplementation(inst):
    sents, refs, ratio = inst
    trace = greedy_oracle_trace(sents, refs, OracleConfig(budget_ratio=ratio))
    assert trace.labels == straight_line_oracle(sents, refs, ratio)
    assert len(trace.labels) == len(sents) and set(trace.labels) <= {0, 1}
    assert all(g > 0 for g in trace.gains)
    budget = math.floor(ratio * sum(map(len, sents)))
    if trace.order:
        before_last = sum(len(sents[i]) for i in trace.order[:-1])
        assert before_last < budget
