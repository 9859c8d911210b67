"""Results table on a synthetic planted-signal corpus.

Trains HAN on the train split, then scores HAN, HAN-r and every baseline
(each with and without the novelty filter) on the test split.

    python3 scripts/synthetic_table.py --epochs 5 --near-duplicates 2
"""
from __future__ import annotations

import argparse
import json
import logging
import time

from threadsum import han
from threadsum.corpus import EmbeddingTable, synthesize_corpus
from threadsum.evaluate import EvalReport, evaluate_run
from threadsum.pipeline import METHODS, run_baseline, run_han

log = logging.getLogger("synthetic_table")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--train", type=int, default=200)
    ap.add_argument("--test", type=int, default=50)
    ap.add_argument("--near-duplicates", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=5)
    ap.add_argument("--word-hidden", type=int, default=100)
    ap.add_argument("--sent-hidden", type=int, default=50)
    ap.add_argument("--format", choices=("tsv", "json"), default="tsv")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    corpus = synthesize_corpus(
        args.seed, args.train + args.test, n_test=args.test, near_duplicates=args.near_duplicates
    )
    test = corpus.subset("test")
    cfg = han.HanConfig(
        epochs=args.epochs, seed=args.seed, word_hidden=args.word_hidden, sent_hidden=args.sent_hidden
    )
    table = EmbeddingTable(cfg.embed_dim, oov_seed=cfg.oov_seed)
    start = time.perf_counter()
    params, _ = han.train(
        corpus.subset("train").threads,
        cfg,
        table,
        on_epoch=lambda e, v: log.info("epoch %d loss %.5f", e + 1, v),
    )
    log.info("trained in %.0fs", time.perf_counter() - start)

    rows = []
    for red in (False, True):
        sel = run_han(test.threads, params, cfg, table, redundancy=red)
        rows.append(evaluate_run(corpus, {s.id: s.chosen for s in sel}, "HAN-r" if red else "HAN"))
    for method in METHODS:
        # SumBasic and KL-Sum pick greedily and never consult a ranking
        for red in (False,) if method in ("sumbasic", "klsum") else (False, True):
            sel = run_baseline(corpus, method, redundancy=red, split="test")
            rows.append(evaluate_run(corpus, {s.id: s.chosen for s in sel}, method + ("-r" if red else "")))

    report = EvalReport(rows)
    if args.format == "json":
        print(json.dumps(report.to_json(), indent=2))
    else:
        print(report.to_tsv(), end="")


if __name__ == "__main__":
    main()
