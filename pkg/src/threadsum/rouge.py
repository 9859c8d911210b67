"""Multi-reference ROUGE-N with clipped n-gram counts."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

NgramCounts = Counter


@dataclass(frozen=True)
class RougeScore:
    recall: float
    precision: float
    f: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.recall, self.precision, self.f)


def f_measure(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    if n < 1:
        raise ValueError("n must be >= 1")
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def match_counts(system: Sequence[str], reference: Sequence[str], n: int) -> tuple[int, int, int]:
    """Return ``(clipped matches, reference n-grams, system n-grams)``."""
    sys_counts = ngrams(system, n)
    ref_counts = ngrams(reference, n)
    match = sum(min(c, sys_counts[g]) for g, c in ref_counts.items())
    return match, sum(ref_counts.values()), sum(sys_counts.values())


def rouge_n(
    system: Sequence[str],
    references: Sequence[Sequence[str]],
    n: int = 1,
    aggregate: str = "mean",
) -> RougeScore:
    """ROUGE-N of ``system`` against one or more references.

    ``aggregate="mean"`` averages per-reference recall, precision and F;
    ``aggregate="max"`` keeps the per-reference triple with the highest F.
    """
    if not references:
        raise ValueError("rouge_n needs at least one reference")
    per_ref = []
    for ref in references:
        match, n_ref, n_sys = match_counts(system, ref, n)
        r = match / n_ref if n_ref else 0.0
        p = match / n_sys if n_sys else 0.0
        per_ref.append((r, p, f_measure(p, r)))
    if aggregate == "mean":
        k = len(per_ref)
        return RougeScore(*(sum(x[i] for x in per_ref) / k for i in range(3)))
    if aggregate == "max":
        return RougeScore(*max(per_ref, key=lambda x: x[2]))
    raise ValueError(f"unknown aggregate {aggregate!r}")
