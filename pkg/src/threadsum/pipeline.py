"""Corpus-level runners that turn a system into per-thread selections."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import baselines as bl
from . import han
from .corpus import Corpus, EmbeddingTable, Thread
from .select import DEFAULT_RATIO, RankedSentence, select, word_budget

METHODS = ("sumbasic", "klsum", "lexrank", "mead", "logreg")
# MEAD is paired with the novelty filter by default; the rest rank plainly.
DEFAULT_REDUNDANCY = {"sumbasic": False, "klsum": False, "lexrank": False, "mead": True, "logreg": False}


@dataclass
class ThreadSelection:
    id: str
    chosen: list[int]
    scores: list[float]

    def to_json(self) -> dict:
        return {"id": self.id, "chosen": self.chosen, "scores": self.scores}


def _ranked(scores: np.ndarray, scored: np.ndarray | None = None) -> list[RankedSentence]:
    return [
        RankedSentence(i, float(s))
        for i, s in enumerate(scores)
        if scored is None or scored[i]
    ]


def run_han(
    threads: Sequence[Thread],
    params: han.HanParams,
    cfg: han.HanConfig,
    table: EmbeddingTable | None = None,
    redundancy: bool = True,
    ratio: float = DEFAULT_RATIO,
) -> list[ThreadSelection]:
    table = table or EmbeddingTable(cfg.embed_dim, oov_seed=cfg.oov_seed)
    out = []
    for t in threads:
        scores, scored = han.predict_scores(t, params, cfg, table)
        sel = select(_ranked(scores, scored), t.sentences, word_budget(t.sentences, ratio), redundancy)
        out.append(ThreadSelection(t.id, sel.chosen, scores.tolist()))
    return out


def run_baseline(
    corpus: Corpus,
    method: str,
    redundancy: bool | None = None,
    split: str | None = None,
    train_split: str = "train",
    ratio: float = DEFAULT_RATIO,
) -> list[ThreadSelection]:
    """Run a baseline over ``corpus.subset(split)``.

    TF-IDF statistics come from every sentence in ``corpus``; the logistic
    regression is fitted on the labelled threads of ``train_split``.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    redundancy = DEFAULT_REDUNDANCY[method] if redundancy is None else redundancy
    targets = corpus.subset(split).threads
    tfidf = bl.build_tfidf(corpus)
    model = None
    if method == "logreg":
        train = [t for t in corpus.subset(train_split) if t.labels is not None and t.n_sentences]
        if not train:
            raise ValueError(f"logreg needs labelled threads in split {train_split!r}")
        x = np.vstack([bl.thread_features(t, tfidf) for t in train])
        y = np.concatenate([t.labels for t in train])
        model = bl.logreg_train(x, y)

    out = []
    for t in targets:
        sents = t.sentences
        budget = word_budget(sents, ratio)
        if not sents:
            out.append(ThreadSelection(t.id, [], []))
            continue
        if method == "sumbasic":
            sel = bl.sumbasic(sents, budget)
            scores = sel.order_scores(len(sents))
        elif method == "klsum":
            sel = bl.klsum(sents, budget)
            scores = sel.order_scores(len(sents))
        else:
            if method == "lexrank":
                ranked = _ranked(bl.lexrank_scores(sents, tfidf))
            elif method == "mead":
                ranked = bl.mead_score(sents, tfidf)
            else:
                ranked = _ranked(np.atleast_1d(bl.logreg_predict(model, bl.thread_features(sents, tfidf))))
            sel = select(ranked, sents, budget, redundancy)
            scores = [r.score for r in ranked]
        out.append(ThreadSelection(t.id, sel.chosen, [float(s) for s in scores]))
    return out
