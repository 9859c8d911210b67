"""Does the output layer prefer the sentence vector s_i or the contextual state h_i?

Trains two otherwise identical models, one per ``output_input`` setting,
over several seeds and reports held-out sentence F and ROUGE-1 recall.
"""
from __future__ import annotations

import argparse
import statistics

from threadsum import han
from threadsum.corpus import EmbeddingTable, synthesize_corpus
from threadsum.evaluate import evaluate_run
from threadsum.pipeline import run_han


def run(seed: int, output_input: str, args) -> tuple[float, float]:
    corpus = synthesize_corpus(
        seed,
        args.train + args.test,
        n_test=args.test,
        signal_strength=args.signal,
        near_duplicates=args.near_duplicates,
    )
    cfg = han.HanConfig(
        embed_dim=args.embed,
        word_hidden=args.word_hidden,
        sent_hidden=args.sent_hidden,
        epochs=args.epochs,
        seed=seed,
        output_input=output_input,
    )
    table = EmbeddingTable(cfg.embed_dim, oov_seed=cfg.oov_seed)
    params, _ = han.train(corpus.subset("train").threads, cfg, table)
    sel = run_han(corpus.subset("test").threads, params, cfg, table, redundancy=True)
    row = evaluate_run(corpus, {s.id: s.chosen for s in sel})
    return row.sentence.f, row.rouge1.recall


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--train", type=int, default=100)
    ap.add_argument("--test", type=int, default=40)
    ap.add_argument("--signal", type=float, default=0.6)
    ap.add_argument("--near-duplicates", type=int, default=2)
    ap.add_argument("--epochs", type=int, default=3)
    ap.add_argument("--embed", type=int, default=100)
    ap.add_argument("--word-hidden", type=int, default=32)
    ap.add_argument("--sent-hidden", type=int, default=16)
    args = ap.parse_args()

    print("output_input\tseed\tsent_f\trouge1_r")
    summary = {}
    for mode in ("sentence", "contextual"):
        fs = []
        for seed in args.seeds:
            f, r = run(seed, mode, args)
            fs.append(f)
            print(f"{mode}\t{seed}\t{f:.4f}\t{r:.4f}", flush=True)
        summary[mode] = fs
    for mode, fs in summary.items():
        sd = statistics.pstdev(fs) if len(fs) > 1 else 0.0
        print(f"# {mode}: mean sent_f {statistics.fmean(fs):.4f} +/- {sd:.4f}")


if __name__ == "__main__":
    main()
