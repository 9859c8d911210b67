"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import han
from .corpus import CorpusError, load_corpus, load_embeddings, save_corpus, synthesize_corpus
from .evaluate import EvalReport, evaluate_run
from .oracle import OracleConfig, greedy_oracle_labels
from .pipeline import METHODS, run_baseline, run_han

log = logging.getLogger("threadsum")

EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _on_off(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def _write_selections(path, selections) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in selections:
            fh.write(json.dumps(s.to_json()) + "\n")


def read_selections(path) -> dict[str, list[int]]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                sid, chosen = str(obj["id"]), obj["chosen"]
            except (json.JSONDecodeError, KeyError, TypeError):
                raise CorpusError(f"{path}:{lineno}: expected {{'id': ..., 'chosen': [...]}}") from None
            if not isinstance(chosen, list) or not all(isinstance(i, int) for i in chosen):
                raise CorpusError(f"{path}:{lineno}: 'chosen' must be a list of integers")
            if sid in out:
                raise CorpusError(f"{path}:{lineno}: duplicate id {sid!r}")
            out[sid] = chosen
    return out


def _config(args, fallback: han.HanConfig | None = None) -> han.HanConfig:
    if getattr(args, "config", None):
        return han.HanConfig.from_json(args.config)
    return fallback or han.HanConfig()


def _table(args, corpus, cfg: han.HanConfig):
    return load_embeddings(
        getattr(args, "embeddings", None), corpus.vocabulary(), cfg.embed_dim, oov_seed=cfg.oov_seed
    )


def _split(value: str | None):
    return None if value in (None, "all") else value


def _epoch_logger(epoch: int, value: float) -> None:
    log.info("epoch %d loss %.6f", epoch + 1, value)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_synth(args) -> None:
    corpus = synthesize_corpus(
        args.seed,
        args.threads,
        sentences_per_thread=args.sentences,
        vocab_size=args.vocab,
        signal_strength=args.signal,
        n_test=args.test_threads,
        near_duplicates=args.near_duplicates,
    )
    save_corpus(corpus, args.out)


def cmd_oracle_label(args) -> None:
    cfg = OracleConfig(budget_ratio=args.ratio, gain_metric=args.gain)
    corpus = load_corpus(args.corpus)
    for t in corpus:
        if not t.references:
            raise CorpusError(f"thread {t.id!r} has no references to label from")
        t.labels = greedy_oracle_labels(t.sentences, t.references, cfg) if t.n_sentences else []
    save_corpus(corpus, args.out)


def cmd_pretrain(args) -> None:
    corpus = load_corpus(args.corpus)
    cfg = _config(args)
    threads = [t for t in corpus.subset(_split(args.split)) if t.category is not None]
    params, names, _ = han.train_classifier(threads, cfg, _table(args, corpus, cfg), on_epoch=_epoch_logger)
    log.info("pretrained on %d threads, categories %s", len(threads), names)
    han.save_checkpoint(args.out_model, params.without_head(cfg), cfg)


def cmd_train(args) -> None:
    corpus = load_corpus(args.corpus)
    init = None
    fallback = None
    if args.init_model:
        init, fallback = han.load_checkpoint(args.init_model)
    cfg = _config(args, fallback)
    if init is not None:
        expected = dict(han.param_shapes(cfg))
        got = {k: init.params[k].shape for k in init.names()}
        if expected != got:
            raise CorpusError(f"{args.init_model}: parameter shapes do not match the config")
    threads = corpus.subset(_split(args.split)).threads
    if not threads:
        raise CorpusError(f"no threads in split {args.split!r}")
    params, history = han.train(threads, cfg, _table(args, corpus, cfg), init=init, on_epoch=_epoch_logger)
    han.save_checkpoint(args.out_model, params, cfg)
    if args.history:
        Path(args.history).write_text(json.dumps(history) + "\n", encoding="utf-8")


def cmd_predict(args) -> None:
    corpus = load_corpus(args.corpus)
    params, cfg = han.load_checkpoint(args.model)
    threads = corpus.subset(_split(args.split)).threads
    sel = run_han(threads, params, cfg, _table(args, corpus, cfg), redundancy=args.redundancy, ratio=args.ratio)
    _write_selections(args.out, sel)


def cmd_baseline(args) -> None:
    corpus = load_corpus(args.corpus)
    sel = run_baseline(
        corpus,
        args.method,
        redundancy=args.redundancy,
        split=_split(args.split),
        train_split=args.train_split,
        ratio=args.ratio,
    )
    _write_selections(args.out, sel)


def cmd_evaluate(args) -> None:
    corpus = load_corpus(args.corpus)
    rows = []
    for path in args.selections:
        name = Path(path).stem
        rows.append(evaluate_run(corpus, read_selections(path), name, micro=args.micro, workers=args.workers))
    report = EvalReport(rows)
    if args.format == "json":
        sys.stdout.write(json.dumps(report.to_json(), indent=2) + "\n")
    else:
        sys.stdout.write(report.to_tsv())


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="threadsum", description="Forum thread extractive summarization.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a synthetic planted-signal corpus")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--threads", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--test-threads", type=int, default=0, help="tag the last N threads as test")
    p.add_argument("--sentences", type=int, default=12)
    p.add_argument("--vocab", type=int, default=500)
    p.add_argument("--signal", type=float, default=1.0)
    p.add_argument("--near-duplicates", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("oracle-label", help="derive gold sentence labels from references")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ratio", type=float, default=0.2)
    p.add_argument("--gain", choices=("f", "recall"), default="f")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oracle_label)

    p = sub.add_parser("pretrain", help="pretrain encoders on thread categories")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config")
    p.add_argument("--out-model", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--split", default="all")
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("train", help="train the HAN summarizer")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config")
    p.add_argument("--init-model")
    p.add_argument("--out-model", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--split", default="train")
    p.add_argument("--history", help="write the per-epoch loss history as JSON")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score and select sentences with a trained model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--redundancy", type=_on_off, required=True, metavar="{on,off}")
    p.add_argument("--out", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--split", default="all")
    p.add_argument("--ratio", type=float, default=0.2)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("baseline", help="run a baseline summarizer")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--redundancy", type=_on_off, nargs="?", const=True, default=None, metavar="{on,off}")
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="all")
    p.add_argument("--train-split", default="train")
    p.add_argument("--ratio", type=float, default=0.2)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("evaluate", help="ROUGE and sentence-level report")
    p.add_argument("--corpus", required=True)
    p.add_argument("--selections", required=True, action="append", help="repeat for several systems")
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")
    p.add_argument("--micro", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except (CorpusError, ValueError, KeyError, IndexError, OSError) as err:
        print(f"threadsum: error: {err}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
