"""Comparison systems: SumBasic, KL-Sum, LexRank, a MEAD-style scorer and
a feature-based logistic regression."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus, Thread
from .select import (
    RankedSentence,
    SummarySelection,
    select_topk,
    select_with_redundancy,
)

Sentences = Sequence[Sequence[str]]


def _sentences(thread: Thread | Sentences) -> list[list[str]]:
    return thread.sentences if isinstance(thread, Thread) else [list(s) for s in thread]


def load_stopwords(path=None) -> frozenset[str]:
    """One token per line, UTF-8. Defaults to the bundled English list."""
    if path is None:
        text = resources.files("threadsum").joinpath("data/stopwords.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


STOPWORDS = load_stopwords()


# --------------------------------------------------------------------------
# tf-idf
# --------------------------------------------------------------------------


@dataclass
class TfidfModel:
    df: dict[str, int]
    n_docs: int

    @property
    def vocabulary(self) -> set[str]:
        return set(self.df)

    def idf(self, term: str) -> float:
        d = self.df.get(term)
        return math.log(self.n_docs / d) if d else 0.0

    def vector(self, tokens: Sequence[str]) -> dict[str, float]:
        return {t: c * self.idf(t) for t, c in Counter(tokens).items()}


def build_tfidf(documents: Corpus | Thread | Iterable[Thread] | Sentences) -> TfidfModel:
    """Document frequencies where every sentence is one document."""
    if isinstance(documents, Thread):
        sents = documents.sentences
    else:
        items = list(documents)
        sents = [s for t in items for s in t.sentences] if items and isinstance(items[0], Thread) else items
    if not sents:
        raise ValueError("empty corpus")
    df: Counter = Counter()
    for s in sents:
        df.update(set(s))
    return TfidfModel(dict(df), len(sents))


def _dot(a: dict[str, float], b: dict[str, float]) -> float:
    if len(a) > len(b):
        a, b = b, a
    return sum(v * b.get(k, 0.0) for k, v in a.items())


def cosine(a: dict[str, float], b: dict[str, float]) -> float:
    na, nb = math.sqrt(_dot(a, a)), math.sqrt(_dot(b, b))
    if na == 0 or nb == 0:
        return 0.0
    return _dot(a, b) / (na * nb)


def _centroid(vectors: list[dict[str, float]]) -> dict[str, float]:
    acc: dict[str, float] = {}
    for v in vectors:
        for k, x in v.items():
            acc[k] = acc.get(k, 0.0) + x
    n = len(vectors)
    return {k: x / n for k, x in acc.items()}


# --------------------------------------------------------------------------
# SumBasic
# --------------------------------------------------------------------------


def sumbasic(thread: Thread | Sentences, budget: int) -> SummarySelection:
    sents = _sentences(thread)
    counts = Counter(tok for s in sents for tok in s)
    total = sum(counts.values())
    sel = SummarySelection()
    if total == 0:
        return sel
    prob = {w: c / total for w, c in counts.items()}
    first_seen: dict[str, int] = {}
    for s in sents:
        for tok in s:
            first_seen.setdefault(tok, len(first_seen))
    remaining = {i for i, s in enumerate(sents) if s}
    while remaining and sel.total_words < budget:
        words = {w for i in remaining for w in sents[i]}
        best_word = min(words, key=lambda w: (-prob[w], first_seen[w]))
        holders = [i for i in sorted(remaining) if best_word in sents[i]]
        best = min(holders, key=lambda i: (-sum(prob[w] for w in sents[i]) / len(sents[i]), i))
        remaining.discard(best)
        sel.order.append(best)
        sel.total_words += len(sents[best])
        for w in set(sents[best]):
            prob[w] = prob[w] ** 2
    sel.chosen = sorted(sel.order)
    return sel


# --------------------------------------------------------------------------
# KL-Sum
# --------------------------------------------------------------------------

KL_EPSILON = 1e-3


def smoothed_kl(thread_counts: Counter, summary_counts: Counter, eps: float = KL_EPSILON) -> float:
    """KL(P_thread || Q_summary), Q add-eps smoothed over the thread vocabulary."""
    n_thread = sum(thread_counts.values())
    denom = sum(summary_counts.values()) + eps * len(thread_counts)
    kl = 0.0
    for w, c in thread_counts.items():
        p = c / n_thread
        q = (summary_counts.get(w, 0) + eps) / denom
        kl += p * math.log(p / q)
    return kl


def klsum(thread: Thread | Sentences, budget: int, eps: float = KL_EPSILON) -> SummarySelection:
    """Greedy KL-Sum; the empty summary counts as infinitely far from the thread.

    ``objective`` on the result holds the KL after each accepted step.
    """
    sents = _sentences(thread)
    thread_counts = Counter(tok for s in sents for tok in s)
    sel = SummarySelection()
    if not thread_counts:
        return sel
    summary: Counter = Counter()
    current = math.inf
    remaining = [i for i, s in enumerate(sents) if s]
    while remaining and sel.total_words < budget:
        best, best_kl = -1, math.inf
        for i in remaining:
            kl = smoothed_kl(thread_counts, summary + Counter(sents[i]), eps)
            if kl < best_kl:
                best, best_kl = i, kl
        if not best_kl < current:
            break
        remaining.remove(best)
        summary.update(sents[best])
        current = best_kl
        sel.order.append(best)
        sel.objective.append(best_kl)
        sel.total_words += len(sents[best])
    sel.chosen = sorted(sel.order)
    return sel


# --------------------------------------------------------------------------
# LexRank
# --------------------------------------------------------------------------


def lexrank_scores(
    thread: Thread | Sentences,
    tfidf: TfidfModel | None = None,
    damping: float = 0.85,
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> np.ndarray:
    """Continuous LexRank centrality (no similarity threshold)."""
    sents = _sentences(thread)
    n = len(sents)
    if n == 0:
        raise ValueError("lexrank needs at least one sentence")
    model = tfidf or build_tfidf(sents)
    vecs = [model.vector(s) for s in sents]
    sim = np.array([[cosine(a, b) for b in vecs] for a in vecs])
    rows = sim.sum(axis=1, keepdims=True)
    trans = np.where(rows > 0, sim / np.where(rows > 0, rows, 1.0), 1.0 / n)
    p = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = (1.0 - damping) / n + damping * (trans.T @ p)
        nxt /= nxt.sum()
        done = np.abs(nxt - p).sum() < tol
        p = nxt
        if done:
            break
    return p


def lexrank(
    thread: Thread | Sentences,
    budget: int,
    damping: float = 0.85,
    tol: float = 1e-10,
    tfidf: TfidfModel | None = None,
    redundancy: bool = False,
) -> SummarySelection:
    sents = _sentences(thread)
    scores = lexrank_scores(sents, tfidf, damping, tol)
    ranked = [RankedSentence(i, float(s)) for i, s in enumerate(scores)]
    pick = select_with_redundancy if redundancy else select_topk
    return pick(ranked, sents, budget)


# --------------------------------------------------------------------------
# MEAD-style centroid + position + length
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MeadWeights:
    centroid: float = 1.0
    position: float = 1.0
    length: float = 1.0


def mead_score(
    thread: Thread | Sentences,
    tfidf: TfidfModel | None = None,
    weights: MeadWeights = MeadWeights(),
) -> list[RankedSentence]:
    sents = _sentences(thread)
    n = len(sents)
    if n == 0:
        return []
    model = tfidf or build_tfidf(sents)
    vecs = [model.vector(s) for s in sents]
    center = _centroid(vecs)
    cos = [cosine(v, center) for v in vecs]
    top = max(cos)
    # rescale by the best sentence; no signal at all means every sentence ties
    centroid = [c / top for c in cos] if top > 0 else [1.0] * n
    longest = max(len(s) for s in sents) or 1
    return [
        RankedSentence(
            i,
            weights.centroid * centroid[i]
            + weights.position * (n - i) / n
            + weights.length * len(sents[i]) / longest,
        )
        for i in range(n)
    ]


def mead(
    thread: Thread | Sentences,
    budget: int,
    tfidf: TfidfModel | None = None,
    redundancy: bool = True,
) -> SummarySelection:
    sents = _sentences(thread)
    ranked = mead_score(sents, tfidf)
    pick = select_with_redundancy if redundancy else select_topk
    return pick(ranked, sents, budget)


# --------------------------------------------------------------------------
# supervised features + logistic regression
# --------------------------------------------------------------------------

FEATURE_NAMES = (
    "cosine_to_centroid",
    "relative_position",
    "content_word_count",
    "tfidf_max",
    "tfidf_avg",
    "tfidf_total",
)


@dataclass(frozen=True)
class FeatureVector:
    cosine_to_centroid: float
    relative_position: float
    content_word_count: int
    tfidf_max: float
    tfidf_avg: float
    tfidf_total: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in FEATURE_NAMES], dtype=np.float64)


def extract_features(
    sentence_index: int,
    thread: Thread | Sentences,
    tfidf: TfidfModel,
    stopwords: frozenset[str] = STOPWORDS,
) -> FeatureVector:
    sents = _sentences(thread)
    n = len(sents)
    if not 0 <= sentence_index < n:
        raise IndexError(f"sentence index {sentence_index} out of range for {n} sentences")
    vecs = [tfidf.vector(s) for s in sents]
    return _features(sentence_index, sents, vecs, _centroid(vecs), stopwords)


def _features(i, sents, vecs, center, stopwords) -> FeatureVector:
    n = len(sents)
    weights = list(vecs[i].values())
    return FeatureVector(
        cosine_to_centroid=cosine(vecs[i], center),
        relative_position=i / (n - 1) if n > 1 else 0.0,
        content_word_count=sum(1 for t in sents[i] if t not in stopwords),
        tfidf_max=max(weights, default=0.0),
        tfidf_avg=sum(weights) / len(weights) if weights else 0.0,
        tfidf_total=sum(weights),
    )


def thread_features(
    thread: Thread | Sentences, tfidf: TfidfModel, stopwords: frozenset[str] = STOPWORDS
) -> np.ndarray:
    """Feature matrix (sentences x 6) for a whole thread."""
    sents = _sentences(thread)
    vecs = [tfidf.vector(s) for s in sents]
    center = _centroid(vecs) if vecs else {}
    rows = [_features(i, sents, vecs, center, stopwords).as_array() for i in range(len(sents))]
    return np.array(rows).reshape(len(sents), len(FEATURE_NAMES))


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float = 0.0
    c: float = 0.1
    w1: float = 5.0
    mean: np.ndarray | None = None
    scale: np.ndarray | None = None
    losses: list[float] = field(default_factory=list, repr=False)

    def standardize(self, x: np.ndarray) -> np.ndarray:
        if self.mean is not None:
            x = x - self.mean
        if self.scale is not None:
            x = x / self.scale
        return x


def _logreg_objective(w, b, x, y, cw, c):
    margin = y * (x @ w + b)
    loss = 0.5 * w @ w + c * np.sum(cw * np.logaddexp(0.0, -margin))
    # d/dm log(1 + e^-m) = -sigmoid(-m)
    coef = -c * cw * y * np.exp(-np.logaddexp(0.0, margin))
    return loss, w + x.T @ coef, coef.sum()


def logreg_train(
    features,
    labels,
    c: float = 0.1,
    w1: float = 5.0,
    standardize: bool = True,
    tol: float = 1e-6,
    max_iter: int = 100_000,
) -> LogRegModel:
    """L2-regularised, class-weighted logistic regression by backtracking
    gradient descent on ``0.5|w|^2 + c * sum_i cw_i * log(1 + exp(-y_i (w.x_i + b)))``.
    The bias is not regularised.
    """
    x = np.asarray(features, dtype=np.float64)
    y01 = np.asarray(labels)
    if x.ndim != 2 or len(x) != len(y01):
        raise ValueError("features must be (n, d) with one label per row")
    if set(np.unique(y01).tolist()) != {0, 1}:
        raise ValueError("logreg_train needs examples of both classes")
    mean = scale = None
    if standardize:
        mean = x.mean(axis=0)
        scale = x.std(axis=0)
        scale[scale == 0] = 1.0
        x = (x - mean) / scale
    y = np.where(y01 == 1, 1.0, -1.0)
    cw = np.where(y01 == 1, w1, 1.0)
    w, b = np.zeros(x.shape[1]), 0.0
    loss, gw, gb = _logreg_objective(w, b, x, y, cw, c)
    losses = [loss]
    step = 1.0
    for _ in range(max_iter):
        gnorm2 = gw @ gw + gb * gb
        if math.sqrt(gnorm2) < tol:
            break
        while True:
            nw, nb = w - step * gw, b - step * gb
            nloss, ngw, ngb = _logreg_objective(nw, nb, x, y, cw, c)
            if nloss <= loss - 0.5 * step * gnorm2 or step < 1e-20:
                break
            step *= 0.5
        if nloss > loss:
            break
        w, b, loss, gw, gb = nw, nb, nloss, ngw, ngb
        losses.append(loss)
        step *= 2.0
    return LogRegModel(w, float(b), c, w1, mean, scale, losses)


def logreg_predict(model: LogRegModel, features) -> np.ndarray | float:
    x = np.asarray(features, dtype=np.float64)
    if x.shape[-1] != len(model.weights):
        raise ValueError(f"feature dimension {x.shape[-1]} != model dimension {len(model.weights)}")
    z = model.standardize(x) @ model.weights + model.bias
    p = np.exp(-np.logaddexp(0.0, -z))
    return float(p) if np.ndim(p) == 0 else p
