"""From per-sentence scores to a word-budgeted summary.

Both selectors walk candidates by descending score (lower index first on
ties) and admit a sentence only while the running word count is below the
budget, so the last admitted sentence may overshoot it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

DEFAULT_RATIO = 0.20
NOVELTY_THRESHOLD = 0.5


@dataclass(frozen=True)
class RankedSentence:
    index: int
    score: float


@dataclass
class SummarySelection:
    chosen: list[int] = field(default_factory=list)
    total_words: int = 0
    novelty: list[float] = field(default_factory=list)
    order: list[int] = field(default_factory=list)
    objective: list[float] = field(default_factory=list)

    def order_scores(self, n: int) -> list[float]:
        """Pseudo-scores for selectors without a per-sentence score: earlier
        picks score higher, unpicked sentences score 0."""
        scores = [0.0] * n
        for rank, i in enumerate(self.order):
            scores[i] = float(len(self.order) - rank)
        return scores


def word_budget(sentences: Sequence[Sequence[str]], ratio: float = DEFAULT_RATIO) -> int:
    return math.floor(ratio * sum(len(s) for s in sentences))


def bigram_set(tokens: Sequence[str]) -> set[tuple[str, str]]:
    return {(tokens[i], tokens[i + 1]) for i in range(len(tokens) - 1)}


def novelty_ratio(candidate: Sequence[str], summary_bigrams: set) -> float:
    """Fraction of the candidate's distinct bigrams not yet in the summary."""
    grams = bigram_set(candidate)
    if not grams:
        return 1.0
    return len(grams - summary_bigrams) / len(grams)


def rank(scores: Sequence[float] | Iterable[RankedSentence]) -> list[RankedSentence]:
    """Order candidates by descending score, lower index first on ties."""
    items = [
        s if isinstance(s, RankedSentence) else RankedSentence(i, float(s))
        for i, s in enumerate(scores)
    ]
    return sorted(items, key=lambda r: (-r.score, r.index))


def _select(ranked, sentences, budget, threshold: float | None) -> SummarySelection:
    sel = SummarySelection()
    summary_bigrams: set = set()
    for cand in rank(ranked):
        if sel.total_words >= budget:
            break
        tokens = sentences[cand.index]
        ratio = novelty_ratio(tokens, summary_bigrams)
        if threshold is not None and ratio < threshold:
            continue
        sel.order.append(cand.index)
        sel.novelty.append(ratio)
        sel.total_words += len(tokens)
        summary_bigrams |= bigram_set(tokens)
    sel.chosen = sorted(sel.order)
    return sel


def select_with_redundancy(
    ranked: Sequence[RankedSentence],
    sentences: Sequence[Sequence[str]],
    budget: int,
    threshold: float = NOVELTY_THRESHOLD,
) -> SummarySelection:
    return _select(ranked, sentences, budget, threshold)


def select_topk(
    ranked: Sequence[RankedSentence],
    sentences: Sequence[Sequence[str]],
    budget: int,
) -> SummarySelection:
    return _select(ranked, sentences, budget, None)


def select(ranked, sentences, budget: int, redundancy: bool) -> SummarySelection:
    if redundancy:
        return select_with_redundancy(ranked, sentences, budget)
    return select_topk(ranked, sentences, budget)
