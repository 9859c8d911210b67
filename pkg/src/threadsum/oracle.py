"""Greedy ROUGE-1 oracle: gold sentence labels from abstractive references."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .rouge import rouge_n


@dataclass(frozen=True)
class OracleConfig:
    budget_ratio: float = 0.20
    gain_metric: str = "f"

    def __post_init__(self):
        if not 0 < self.budget_ratio <= 1:
            raise ValueError("budget_ratio must lie in (0, 1]")
        if self.gain_metric not in ("f", "recall"):
            raise ValueError("gain_metric must be 'f' or 'recall'")


@dataclass
class OracleTrace:
    labels: list[int]
    order: list[int] = field(default_factory=list)
    gains: list[float] = field(default_factory=list)


def _metric(tokens: list[str], references, cfg: OracleConfig) -> float:
    score = rouge_n(tokens, references, 1)
    return score.f if cfg.gain_metric == "f" else score.recall


def greedy_oracle_trace(
    sentences: Sequence[Sequence[str]],
    references: Sequence[Sequence[str]],
    cfg: OracleConfig = OracleConfig(),
) -> OracleTrace:
    if not sentences:
        raise ValueError("empty thread")
    if not references:
        raise ValueError("empty references")
    budget = math.floor(cfg.budget_ratio * sum(len(s) for s in sentences))
    trace = OracleTrace(labels=[0] * len(sentences))
    summary: list[str] = []
    current = _metric(summary, references, cfg)
    while len(summary) < budget:
        best, best_gain = -1, 0.0
        for i, sent in enumerate(sentences):
            if trace.labels[i]:
                continue
            gain = _metric(summary + list(sent), references, cfg) - current
            if gain > best_gain:  # strict: keeps the lowest index on ties
                best, best_gain = i, gain
        if best < 0:
            break
        trace.labels[best] = 1
        trace.order.append(best)
        trace.gains.append(best_gain)
        summary.extend(sentences[best])
        current = _metric(summary, references, cfg)
    return trace


def greedy_oracle_labels(
    sentences: Sequence[Sequence[str]],
    references: Sequence[Sequence[str]],
    cfg: OracleConfig = OracleConfig(),
) -> list[int]:
    return greedy_oracle_trace(sentences, references, cfg).labels
