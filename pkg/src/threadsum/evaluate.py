"""Table-style evaluation: ROUGE-1/2 and sentence-level P/R/F per system."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import Corpus, Thread
from .rouge import RougeScore, f_measure, match_counts, rouge_n


@dataclass(frozen=True)
class PrfScore:
    precision: float
    recall: float
    f: float


def sentence_prf(predicted: Sequence[int], gold_labels: Sequence[int]) -> PrfScore:
    n = len(gold_labels)
    pred = set(predicted)
    if any(not 0 <= i < n for i in pred):
        raise IndexError(f"predicted index out of range for {n} sentences")
    gold = {i for i, y in enumerate(gold_labels) if y}
    hit = len(pred & gold)
    p = hit / len(pred) if pred else 0.0
    r = hit / len(gold) if gold else 0.0
    return PrfScore(p, r, f_measure(p, r))


@dataclass(frozen=True)
class SystemRow:
    system: str
    rouge1: RougeScore
    rouge2: RougeScore
    sentence: PrfScore
    rouge1_sd: float
    rouge2_sd: float
    sentence_sd: float
    n_threads: int

    def flat(self) -> dict:
        return {
            "system": self.system,
            "rouge1_r": self.rouge1.recall,
            "rouge1_p": self.rouge1.precision,
            "rouge1_f": self.rouge1.f,
            "rouge1_f_sd": self.rouge1_sd,
            "rouge2_r": self.rouge2.recall,
            "rouge2_p": self.rouge2.precision,
            "rouge2_f": self.rouge2.f,
            "rouge2_f_sd": self.rouge2_sd,
            "sent_r": self.sentence.recall,
            "sent_p": self.sentence.precision,
            "sent_f": self.sentence.f,
            "sent_f_sd": self.sentence_sd,
            "threads": self.n_threads,
        }


@dataclass(frozen=True)
class EvalReport:
    rows: list[SystemRow]

    def to_json(self) -> dict:
        return {"systems": [r.flat() for r in self.rows]}

    def to_tsv(self) -> str:
        if not self.rows:
            return ""
        cols = list(self.rows[0].flat())
        lines = ["\t".join(cols)]
        for r in self.rows:
            lines.append("\t".join(v if isinstance(v, str) else str(v) if isinstance(v, int) else f"{v:.6f}"
                                   for v in r.flat().values()))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class _ThreadResult:
    r1: RougeScore
    r2: RougeScore
    prf: PrfScore
    counts: tuple  # micro-average numerators/denominators
    tp_fp_fn: tuple[int, int, int]


def _system_tokens(thread: Thread, chosen: Sequence[int]) -> list[str]:
    sents = thread.sentences
    if any(not 0 <= i < len(sents) for i in chosen):
        raise IndexError(f"thread {thread.id!r}: chosen index out of range")
    return [tok for i in sorted(set(chosen)) for tok in sents[i]]


def _evaluate_thread(thread: Thread, chosen: Sequence[int]) -> _ThreadResult:
    if not thread.references:
        raise ValueError(f"thread {thread.id!r} has no reference summaries")
    if thread.labels is None:
        raise ValueError(f"thread {thread.id!r} has no gold labels")
    system = _system_tokens(thread, chosen)
    counts = []
    for n in (1, 2):
        m = rs = ss = 0
        for ref in thread.references:
            a, b, c = match_counts(system, ref, n)
            m, rs, ss = m + a, rs + b, ss + c
        counts.append((m, rs, ss))
    pred, gold = set(chosen), set(thread.gold_indices())
    return _ThreadResult(
        r1=rouge_n(system, thread.references, 1),
        r2=rouge_n(system, thread.references, 2),
        prf=sentence_prf(chosen, thread.labels),
        counts=tuple(counts),
        tp_fp_fn=(len(pred & gold), len(pred - gold), len(gold - pred)),
    )


def _mean(xs: list[float]) -> float:
    return math.fsum(xs) / len(xs) if xs else 0.0


def _sd(xs: list[float]) -> float:
    if not xs:
        return 0.0
    mu = _mean(xs)
    return math.sqrt(math.fsum((x - mu) ** 2 for x in xs) / len(xs))


def evaluate_run(
    corpus: Corpus | Sequence[Thread],
    selections: Mapping[str, Sequence[int]],
    system: str = "system",
    micro: bool = False,
    workers: int = 1,
) -> SystemRow:
    """Score one system's selections against every thread it covers.

    Macro averages per-thread scores; ``micro=True`` pools n-gram and
    sentence counts instead. Dispersions are population standard deviations
    of the per-thread F scores. Sums use ``math.fsum``, so the result does
    not depend on ``workers``.
    """
    by_id = {t.id: t for t in corpus}
    missing = [k for k in selections if k not in by_id]
    if missing:
        raise KeyError(f"selections for unknown thread ids: {missing[:5]}")
    items = [(by_id[k], list(v)) for k, v in selections.items()]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda kv: _evaluate_thread(*kv), items))
    else:
        results = [_evaluate_thread(t, c) for t, c in items]

    f1 = [r.r1.f for r in results]
    f2 = [r.r2.f for r in results]
    fs = [r.prf.f for r in results]
    if micro:
        def pooled(k):
            m = sum(r.counts[k][0] for r in results)
            rs = sum(r.counts[k][1] for r in results)
            ss = sum(r.counts[k][2] for r in results)
            rec, prec = (m / rs if rs else 0.0), (m / ss if ss else 0.0)
            return RougeScore(rec, prec, f_measure(prec, rec))

        tp = sum(r.tp_fp_fn[0] for r in results)
        fp = sum(r.tp_fp_fn[1] for r in results)
        fn = sum(r.tp_fp_fn[2] for r in results)
        p = tp / (tp + fp) if tp + fp else 0.0
        rc = tp / (tp + fn) if tp + fn else 0.0
        r1, r2, sent = pooled(0), pooled(1), PrfScore(p, rc, f_measure(p, rc))
    else:
        r1 = RougeScore(_mean([r.r1.recall for r in results]), _mean([r.r1.precision for r in results]), _mean(f1))
        r2 = RougeScore(_mean([r.r2.recall for r in results]), _mean([r.r2.precision for r in results]), _mean(f2))
        sent = PrfScore(_mean([r.prf.precision for r in results]), _mean([r.prf.recall for r in results]), _mean(fs))
    return SystemRow(system, r1, r2, sent, _sd(f1), _sd(f2), _sd(fs), len(results))
